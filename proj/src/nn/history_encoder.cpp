#include "tracklab/nn/history_encoder.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace tracklab {

std::string EncoderConfig::describe() const {
  std::ostringstream os;
  os << "encoder|K=" << history_len << "|C=" << in_channels
     << "|conv=" << conv_channels << "|z=" << latent_dim
     << "|priv=" << privileged_dim;
  return os.str();
}

EncoderConfig EncoderConfig::parse_describe(const std::string& desc) {
  EncoderConfig c;
  std::stringstream ss(desc);
  std::string token;
  bool first = true;
  while (std::getline(ss, token, '|')) {
    if (first) {
      if (token != "encoder") throw std::invalid_argument("bad encoder arch string");
      first = false;
      continue;
    }
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad encoder token " + token);
    const std::string key = token.substr(0, eq);
    const int val = std::stoi(token.substr(eq + 1));
    if (key == "K") c.history_len = val;
    else if (key == "C") c.in_channels = val;
    else if (key == "conv") c.conv_channels = val;
    else if (key == "z") c.latent_dim = val;
    else if (key == "priv") c.privileged_dim = val;
    else throw std::invalid_argument("unknown encoder key '" + key + "'");
  }
  return c;
}

void EncoderConfig::validate() const {
  if (history_len < 1) throw std::invalid_argument("encoder history_len must be >= 1");
  if (in_channels < 1) throw std::invalid_argument("encoder in_channels must be >= 1");
  if (latent_dim < 1) throw std::invalid_argument("encoder latent_dim must be >= 1");
}

namespace {
// Kernel sizes shrink for short histories so the conv stack stays valid.
int ks1_for(int k) { return k >= 3 ? 3 : 1; }
int ks2_for(int t1) { return t1 >= 3 ? 3 : 1; }
}  // namespace

HistoryEncoder::HistoryEncoder(const EncoderConfig& config, uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(Rng::derive_seed(seed, 0xE0));
  const int c = config_.conv_channels;
  const int ks1 = ks1_for(config_.history_len);
  const int t1 = config_.history_len - ks1 + 1;
  const int ks2 = ks2_for(t1);
  const int stride2 = t1 >= 4 ? 2 : 1;
  const int t2 = (t1 - ks2) / stride2 + 1;

  conv1_w_ = Param("enc.c1w", Mat::randn(c, config_.in_channels * ks1,
                                         std::sqrt(2.0 / (config_.in_channels * ks1)), rng));
  conv1_b_ = Param("enc.c1b", Mat(1, c));
  conv2_w_ = Param("enc.c2w", Mat::randn(c, c * ks2, std::sqrt(2.0 / (c * ks2)), rng));
  conv2_b_ = Param("enc.c2b", Mat(1, c));
  to_latent_ = Mlp("enc.latent", t2 * c, {}, config_.latent_dim, rng);
  regress_ = Mlp("enc.regress", config_.latent_dim, {32}, config_.privileged_dim, rng, 0.01);
}

EncoderForward HistoryEncoder::forward(Graph& g, Var x) {
  if (g.value(x).cols != config_.history_len * config_.in_channels) {
    throw std::invalid_argument("history length mismatch: expected " +
                                std::to_string(config_.history_len) + " steps of " +
                                std::to_string(config_.in_channels) + " channels");
  }
  const int k = config_.history_len;
  const int c = config_.conv_channels;
  const int ks1 = ks1_for(k);
  const int t1 = k - ks1 + 1;
  const int ks2 = ks2_for(t1);
  const int stride2 = t1 >= 4 ? 2 : 1;

  Var h = g.elu(g.conv1d(x, g.param(conv1_w_), g.param(conv1_b_), k,
                         config_.in_channels, c, ks1, 1));
  h = g.elu(g.conv1d(h, g.param(conv2_w_), g.param(conv2_b_), t1, c, c, ks2, stride2));
  EncoderForward out;
  out.latent = to_latent_.forward(g, h);
  out.prediction = regress_.forward(g, out.latent);
  return out;
}

HistoryEncoder::EncodeResult HistoryEncoder::encode(const Mat& history) {
  Graph g;
  Var x = g.input(history);
  EncoderForward fwd = forward(g, x);
  return {g.value(fwd.latent), g.value(fwd.prediction)};
}

std::vector<Param*> HistoryEncoder::params() {
  std::vector<Param*> out{&conv1_w_, &conv1_b_, &conv2_w_, &conv2_b_};
  auto lat = to_latent_.params();
  out.insert(out.end(), lat.begin(), lat.end());
  auto reg = regress_.params();
  out.insert(out.end(), reg.begin(), reg.end());
  return out;
}

long HistoryEncoder::param_count() {
  long n = 0;
  for (Param* p : params()) n += static_cast<long>(p->value.size());
  return n;
}

uint64_t HistoryEncoder::checksum() const {
  uint64_t h = 14695981039346656037ULL;
  auto feed = [&](const Param& p) {
    for (double d : p.value.v) {
      uint64_t bits;
      std::memcpy(&bits, &d, sizeof(bits));
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xFF;
        h *= 1099511628211ULL;
      }
    }
  };
  feed(conv1_w_);
  feed(conv1_b_);
  feed(conv2_w_);
  feed(conv2_b_);
  for (const Param* p : const_cast<HistoryEncoder*>(this)->to_latent_.params()) feed(*p);
  for (const Param* p : const_cast<HistoryEncoder*>(this)->regress_.params()) feed(*p);
  return h;
}

}  // namespace tracklab
