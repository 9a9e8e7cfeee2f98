#include "ccil/learner/optimizer.h"

#include <cmath>
#include <stdexcept>

namespace ccil::nn {

void AdamOptions::Validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (warmup_steps < 0) throw std::invalid_argument("warmup_steps must be >= 0");
}

Adam::Adam(const ParameterStore& store, AdamOptions options) {
  options.Validate();
  state_.options = options;
  for (const auto& [_, p] : store.entries()) {
    state_.first_moment.emplace_back(p->value.shape(), 0.0);
    state_.second_moment.emplace_back(p->value.shape(), 0.0);
  }
}

double Adam::EffectiveRate(const AdamOptions& options, int64_t step) {
  if (options.warmup_steps <= 0 || step >= options.warmup_steps) {
    return options.learning_rate;
  }
  return options.learning_rate * static_cast<double>(step) /
         static_cast<double>(options.warmup_steps);
}

void Adam::Step(ParameterStore& store) {
  const auto& entries = store.entries();
  if (entries.size() != state_.first_moment.size()) {
    throw std::invalid_argument("Adam: parameter count changed");
  }
  const AdamOptions& o = state_.options;
  ++state_.step_count;
  const double t = static_cast<double>(state_.step_count);
  const double rate = EffectiveRate(o, state_.step_count);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (size_t i = 0; i < entries.size(); ++i) {
    Node& p = *entries[i].second;
    if (p.grad.empty()) continue;
    Tensor& m = state_.first_moment[i];
    Tensor& v = state_.second_moment[i];
    if (!m.SameShape(p.value)) throw std::invalid_argument("Adam: shape mismatch");
    for (size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g;
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p.value[j] -= rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

void Adam::set_state(AdamState state) {
  if (state.first_moment.size() != state_.first_moment.size() ||
      state.second_moment.size() != state_.second_moment.size()) {
    throw std::invalid_argument("Adam: state does not match parameters");
  }
  for (size_t i = 0; i < state.first_moment.size(); ++i) {
    if (!state.first_moment[i].SameShape(state_.first_moment[i]) ||
        !state.second_moment[i].SameShape(state_.second_moment[i])) {
      throw std::invalid_argument("Adam: state shape mismatch");
    }
  }
  state.options.Validate();
  state_ = std::move(state);
}

}  // namespace ccil::nn
