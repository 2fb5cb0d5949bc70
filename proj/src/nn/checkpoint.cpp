#include "tracklab/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tracklab {

namespace {

constexpr char kMagic[8] = {'T', 'L', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kFormatVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); }
void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<char*>(&v), 8); }
void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) {
    throw std::runtime_error("checkpoint truncated");
  }
  return v;
}
uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) {
    throw std::runtime_error("checkpoint truncated");
  }
  return v;
}
std::string read_str(std::istream& is) {
  const uint32_t n = read_u32(is);
  if (n > (1u << 20)) throw std::runtime_error("checkpoint string too long");
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw std::runtime_error("checkpoint truncated");
  return s;
}

}  // namespace

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void save_weights(const std::vector<Param*>& params, const std::string& arch_desc,
                  const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  os.write(kMagic, 8);
  write_u32(os, kFormatVersion);
  write_u64(os, fnv1a64(arch_desc));
  write_str(os, arch_desc);
  write_u32(os, static_cast<uint32_t>(params.size()));
  for (const Param* p : params) {
    write_str(os, p->name);
    write_u32(os, static_cast<uint32_t>(p->value.rows));
    write_u32(os, static_cast<uint32_t>(p->value.cols));
    os.write(reinterpret_cast<const char*>(p->value.v.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint write failed for '" + path + "'");
}

void load_weights(const std::vector<Param*>& params, const std::string& arch_desc,
                  const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("not a checkpoint file: '" + path + "'");
  }
  const uint32_t version = read_u32(is);
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const uint64_t hash = read_u64(is);
  if (hash != fnv1a64(arch_desc)) {
    throw std::runtime_error("checkpoint architecture mismatch: expected '" +
                             arch_desc + "', file has '" + read_str(is) + "'");
  }
  (void)read_str(is);  // stored description, already verified via hash
  const uint32_t count = read_u32(is);
  if (count != params.size()) {
    throw std::runtime_error("checkpoint parameter count mismatch");
  }

  // Stage everything first so a truncated file cannot partially load.
  std::vector<Mat> staged(count);
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = read_str(is);
    const uint32_t rows = read_u32(is);
    const uint32_t cols = read_u32(is);
    if (name != params[i]->name || rows != static_cast<uint32_t>(params[i]->value.rows) ||
        cols != static_cast<uint32_t>(params[i]->value.cols)) {
      throw std::runtime_error("checkpoint blob mismatch at '" + name + "'");
    }
    staged[i] = Mat(static_cast<int>(rows), static_cast<int>(cols));
    if (!is.read(reinterpret_cast<char*>(staged[i].v.data()),
                 static_cast<std::streamsize>(staged[i].size() * sizeof(double)))) {
      throw std::runtime_error("checkpoint truncated in blob '" + name + "'");
    }
  }
  for (uint32_t i = 0; i < count; ++i) params[i]->value = std::move(staged[i]);
}

std::string peek_arch(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("not a checkpoint file: '" + path + "'");
  }
  (void)read_u32(is);
  (void)read_u64(is);
  return read_str(is);
}

}  // namespace tracklab
