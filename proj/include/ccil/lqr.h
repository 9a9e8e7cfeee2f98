#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ccil/geometry.h"

namespace ccil::lqr {

// State layout: [p; p'; p''] with channels (x, y, heading) in each block.
using State = Eigen::Matrix<double, 9, 1>;
using Input = Eigen::Vector3d;  // (jerk_x, jerk_y, angular jerk)
using StateMatrix = Eigen::Matrix<double, 9, 9>;
using InputMatrix = Eigen::Matrix<double, 9, 3>;
using GainMatrix = Eigen::Matrix<double, 3, 9>;

struct Weights {
  double angular_velocity = 0.1;      // eta_omega
  double angular_acceleration = 0.1;  // eta_alpha
  double acceleration = 0.1;          // eta_a
  double jerk = 0.01;                 // eta_j
};

struct InitialState {
  Eigen::Vector3d pose = Eigen::Vector3d::Zero();  // x, y, heading
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();

  State Stacked() const;
};

struct LqrProblem {
  double dt = 0.1;
  InitialState initial;
  std::vector<Pose2> targets;  // target t is compared to the state after t inputs
  Weights weights;

  int horizon() const { return static_cast<int>(targets.size()); }
  void Validate() const;
};

struct SmoothPlan {
  std::vector<Pose2> poses;  // headings normalized
  std::vector<State> states;  // x_1 .. x_T, heading channel unwrapped
  std::vector<Input> inputs;  // u_0 .. u_{T-1}
  // u_t = -feedback_gains[t] x_t + feedforward[t]
  std::vector<GainMatrix> feedback_gains;
  std::vector<Input> feedforward;
  double cost = 0.0;

  Eigen::Vector3d Velocity(int t) const { return states[t].segment<3>(3); }
  Eigen::Vector3d Acceleration(int t) const { return states[t].segment<3>(6); }
};

// x_{t+1} = F x_t + G u_t with F = [[I, D, D^2], [0, I, D], [0, 0, I]],
// G = [D^3; D^2; D], D = dt I.
StateMatrix TransitionMatrix(double dt);
InputMatrix InputMatrixFor(double dt);

// Per-state cost weights (diagonal) and per-input weights.
Eigen::Matrix<double, 9, 1> StateWeights(const Weights& w);
Eigen::Vector3d InputWeights(const Weights& w);

// Target headings made continuous starting from the initial heading.
std::vector<Eigen::Vector3d> UnwrappedTargets(const LqrProblem& problem);

// Finite-horizon tracking solved by a backward Riccati recursion with an
// affine term; returns the open-loop optimal plan.
SmoothPlan Solve(const LqrProblem& problem);

// J for an arbitrary input sequence.
double EvaluateCost(const LqrProblem& problem, const std::vector<Input>& inputs);
std::vector<State> Rollout(const LqrProblem& problem,
                           const std::vector<Input>& inputs);

// Velocity from the last two poses, acceleration from the last three (zero
// when only two are available). Throws on fewer than two poses.
InitialState PrepareInitialState(const Trajectory& history);

}  // namespace ccil::lqr
