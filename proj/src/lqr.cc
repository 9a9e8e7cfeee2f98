#include "ccil/lqr.h"

#include <cmath>
#include <stdexcept>

namespace ccil::lqr {

State InitialState::Stacked() const {
  State s;
  s << pose, velocity, acceleration;
  return s;
}

void LqrProblem::Validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("LqrProblem: dt must be > 0");
  if (targets.empty()) throw std::invalid_argument("LqrProblem: horizon < 1");
  const Weights& w = weights;
  if (w.angular_velocity < 0 || w.angular_acceleration < 0 ||
      w.acceleration < 0 || w.jerk < 0) {
    throw std::invalid_argument("LqrProblem: negative weight");
  }
  for (const auto& t : targets) {
    if (!std::isfinite(t.x) || !std::isfinite(t.y) || !std::isfinite(t.heading)) {
      throw std::invalid_argument("LqrProblem: non-finite target");
    }
  }
  if (!initial.Stacked().allFinite()) {
    throw std::invalid_argument("LqrProblem: non-finite initial state");
  }
}

StateMatrix TransitionMatrix(double dt) {
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  StateMatrix f = StateMatrix::Zero();
  f.block<3, 3>(0, 0) = I;
  f.block<3, 3>(0, 3) = dt * I;
  f.block<3, 3>(0, 6) = dt * dt * I;
  f.block<3, 3>(3, 3) = I;
  f.block<3, 3>(3, 6) = dt * I;
  f.block<3, 3>(6, 6) = I;
  return f;
}

InputMatrix InputMatrixFor(double dt) {
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  InputMatrix g;
  g << dt * dt * dt * I, dt * dt * I, dt * I;
  return g;
}

Eigen::Matrix<double, 9, 1> StateWeights(const Weights& w) {
  Eigen::Matrix<double, 9, 1> q;
  // Linear speed is not penalized.
  q << 1.0, 1.0, 1.0, 0.0, 0.0, w.angular_velocity, w.acceleration,
      w.acceleration, w.angular_acceleration;
  return q;
}

Eigen::Vector3d InputWeights(const Weights& w) {
  // Only the positional jerk carries a weight.
  return {w.jerk, w.jerk, 0.0};
}

std::vector<Eigen::Vector3d> UnwrappedTargets(const LqrProblem& problem) {
  std::vector<Eigen::Vector3d> refs;
  double prev = problem.initial.pose[2];
  for (const auto& t : problem.targets) {
    prev = UnwrapAngle(t.heading, prev);
    refs.emplace_back(t.x, t.y, prev);
  }
  return refs;
}

std::vector<State> Rollout(const LqrProblem& problem,
                           const std::vector<Input>& inputs) {
  const StateMatrix f = TransitionMatrix(problem.dt);
  const InputMatrix g = InputMatrixFor(problem.dt);
  std::vector<State> states;
  State x = problem.initial.Stacked();
  for (const auto& u : inputs) {
    x = f * x + g * u;
    states.push_back(x);
  }
  return states;
}

double EvaluateCost(const LqrProblem& problem, const std::vector<Input>& inputs) {
  if (static_cast<int>(inputs.size()) != problem.horizon()) {
    throw std::invalid_argument("EvaluateCost: need one input per target");
  }
  const auto refs = UnwrappedTargets(problem);
  const auto states = Rollout(problem, inputs);
  const auto q = StateWeights(problem.weights);
  const auto r = InputWeights(problem.weights);
  double cost = 0.0;
  for (size_t t = 0; t < states.size(); ++t) {
    State e = states[t];
    e.head<3>() -= refs[t];
    cost += e.dot(q.cwiseProduct(e)) + inputs[t].dot(r.cwiseProduct(inputs[t]));
  }
  return cost;
}

SmoothPlan Solve(const LqrProblem& problem) {
  problem.Validate();
  const int horizon = problem.horizon();
  const StateMatrix f = TransitionMatrix(problem.dt);
  const InputMatrix g = InputMatrixFor(problem.dt);
  const StateMatrix q = StateWeights(problem.weights).asDiagonal();
  const Eigen::Matrix3d r = InputWeights(problem.weights).asDiagonal();
  const auto refs = UnwrappedTargets(problem);

  // Cost-to-go from x_t, including the stage cost of x_t:
  //   V_t(x) = x' P x - 2 s' x + const.
  auto reference_state = [&](int t) {
    State xr = State::Zero();
    xr.head<3>() = refs[t - 1];
    return xr;
  };
  StateMatrix p = q;
  State s = q * reference_state(horizon);

  SmoothPlan plan;
  plan.feedback_gains.resize(horizon);
  plan.feedforward.resize(horizon);
  for (int t = horizon - 1; t >= 0; --t) {
    const Eigen::Matrix3d gram = r + g.transpose() * p * g;
    const auto solver = gram.ldlt();
    const GainMatrix k = solver.solve(g.transpose() * p * f);
    const Input ff = solver.solve(g.transpose() * s);
    plan.feedback_gains[t] = k;
    plan.feedforward[t] = ff;
    // Minimizing over u leaves the Schur complement.
    const StateMatrix p_next = f.transpose() * p * f - f.transpose() * p * g * k;
    const State s_next = f.transpose() * s - k.transpose() * (g.transpose() * s);
    p = 0.5 * (p_next + p_next.transpose());
    s = s_next;
    if (t > 0) {
      p += q;
      s += q * reference_state(t);
    }
  }

  const StateMatrix f_dyn = f;
  State x = problem.initial.Stacked();
  for (int t = 0; t < horizon; ++t) {
    const Input u = -plan.feedback_gains[t] * x + plan.feedforward[t];
    x = f_dyn * x + g * u;
    plan.inputs.push_back(u);
    plan.states.push_back(x);
    plan.poses.emplace_back(x[0], x[1], x[2]);
  }
  plan.cost = EvaluateCost(problem, plan.inputs);
  return plan;
}

InitialState PrepareInitialState(const Trajectory& history) {
  const size_t n = history.size();
  if (n < 2) {
    throw std::invalid_argument("PrepareInitialState: need at least two poses");
  }
  const std::vector<double> h = UnwrappedHeadings(history.poses());
  auto channel = [&](size_t i) {
    return Eigen::Vector3d(history[i].x, history[i].y, h[i]);
  };
  const double dt = history.dt();
  InitialState st;
  st.pose = Eigen::Vector3d(history.back().x, history.back().y,
                            history.back().heading);
  const Eigen::Vector3d last = channel(n - 1);
  const Eigen::Vector3d prev = channel(n - 2);
  st.velocity = (last - prev) / dt;
  if (n >= 3) st.acceleration = (last - 2.0 * prev + channel(n - 3)) / (dt * dt);
  return st;
}

}  // namespace ccil::lqr
