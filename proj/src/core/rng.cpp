#include "tracklab/core/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tracklab {

uint64_t Rng::derive_seed(uint64_t master, uint64_t stream) {
  // splitmix64 over the (master, stream) pair.
  uint64_t x = master + 0x9E3779B97f4A7C15ULL * (stream + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t Rng::uniform_index(uint64_t n) {
  // Rejection-free modulo is fine here; n is always tiny compared to 2^64.
  return engine_() % n;
}

double Rng::gaussian() {
  double u1 = uniform01();
  double u2 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::load_state(const std::string& text) {
  std::istringstream is(text);
  is >> engine_;
}

}  // namespace tracklab
