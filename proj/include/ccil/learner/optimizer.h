#pragma once

#include <cstdint>
#include <vector>

#include "ccil/learner/layers.h"

namespace ccil::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t warmup_steps = 0;

  void Validate() const;
  bool operator==(const AdamOptions&) const = default;
};

struct AdamState {
  AdamOptions options;
  int64_t step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  bool operator==(const AdamState&) const = default;
};

// Adam with bias correction and a linear warm-up of the step size.
class Adam {
 public:
  Adam(const ParameterStore& store, AdamOptions options);

  // Rate used for update number `step` (1-based).
  static double EffectiveRate(const AdamOptions& options, int64_t step);

  // Applies one update from the gradients currently held by the store.
  void Step(ParameterStore& store);

  const AdamState& state() const { return state_; }
  void set_state(AdamState state);

 private:
  AdamState state_;
};

}  // namespace ccil::nn
