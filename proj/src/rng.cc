#include "ccil/rng.h"

#include <cmath>

#include "ccil/geometry.h"

namespace ccil {
namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(uint64_t seed) : key_(Mix64(seed + kGolden)), counter_(0) {}

Rng Rng::FromState(uint64_t key, uint64_t counter) {
  Rng r;
  r.key_ = key;
  r.counter_ = counter;
  return r;
}

Rng Rng::Split(uint64_t stream_id) const {
  return FromState(Mix64(key_ ^ Mix64(stream_id + 0x632BE59BD9B4E019ULL)), 0);
}

uint64_t Rng::NextU64() {
  ++counter_;
  return Mix64(key_ + counter_ * kGolden);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::UniformInt(uint64_t n) {
  // Rejection sampling removes modulo bias.
  const uint64_t limit = max() - max() % n;
  uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  const double u1 = 1.0 - Uniform();  // (0, 1]
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace ccil
