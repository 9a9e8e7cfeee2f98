#pragma once

#include <cstdint>
#include <limits>

namespace ccil {

// Counter-based generator: output i of a stream is a pure function of
// (key, i), so streams derived with Split() are reproducible regardless of
// which thread consumes them or in what order.
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t seed = 0);

  // Independent child stream identified by `stream_id`. Does not advance
  // this generator.
  Rng Split(uint64_t stream_id) const;

  uint64_t NextU64();
  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n).
  uint64_t UniformInt(uint64_t n);
  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<uint64_t>::max();
  }
  result_type operator()() { return NextU64(); }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }
  static Rng FromState(uint64_t key, uint64_t counter);

  bool operator==(const Rng&) const = default;

 private:
  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace ccil
