#pragma once

#include "tracklab/nn/mlp.hpp"

namespace tracklab {

struct EncoderConfig {
  int history_len = 10;   // K proprioceptive steps
  int in_channels = 33;   // per-step proprio width
  int conv_channels = 32;
  int latent_dim = 16;    // z
  int privileged_dim = 12;  // base mass + friction + 10 motor strengths

  std::string describe() const;
  static EncoderConfig parse_describe(const std::string& desc);
  void validate() const;
};

struct EncoderForward {
  Var latent;      // (B, z)
  Var prediction;  // (B, privileged_dim)
};

// 1-D conv stack over the proprioceptive history; the latent feeds the
// student policy, the regression head is trained against the episode's
// normalized privileged physics parameters.
class HistoryEncoder {
 public:
  HistoryEncoder() = default;
  HistoryEncoder(const EncoderConfig& config, uint64_t seed);

  const EncoderConfig& config() const { return config_; }

  // x: (B, K * in_channels), time-major rows.
  EncoderForward forward(Graph& g, Var x);

  struct EncodeResult {
    Mat latent;
    Mat prediction;
  };
  EncodeResult encode(const Mat& history);

  std::vector<Param*> params();
  long param_count();

  // FNV-1a over the parameter bytes; used to prove the encoder stays frozen
  // through student training.
  uint64_t checksum() const;

 private:
  EncoderConfig config_;
  Param conv1_w_, conv1_b_;
  Param conv2_w_, conv2_b_;
  Mlp to_latent_;
  Mlp regress_;
};

}  // namespace tracklab
