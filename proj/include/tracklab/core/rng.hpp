#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace tracklab {

// Deterministic RNG stream. The raw engine is std::mt19937_64 (bit-exact by
// the standard); the uniform/gaussian transforms are implemented here instead
// of via std::*_distribution so results do not depend on the stdlib vendor.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Derives an independent child stream; used to give every environment,
  // clip trial, etc. its own seed from one master seed.
  static uint64_t derive_seed(uint64_t master, uint64_t stream);

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Integer in [0, n).
  uint64_t uniform_index(uint64_t n);

  // Standard normal via Box-Muller (no cached spare; keeps state minimal).
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Engine state serialization for bit-exact training resume.
  std::string save_state() const;
  void load_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

}  // namespace tracklab
