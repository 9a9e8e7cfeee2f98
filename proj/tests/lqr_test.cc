#include <gtest/gtest.h>

#include <cmath>

#include "ccil/lqr.h"
#include "oracles.h"

namespace ccil::lqr {
namespace {

LqrProblem RandomProblem(Rng& rng, int horizon, double dt, Weights w = {}) {
  LqrProblem p;
  p.dt = dt;
  p.weights = w;
  p.initial.pose = {rng.Uniform(-5, 5), rng.Uniform(-5, 5), rng.Uniform(-3, 3)};
  p.initial.velocity = {rng.Uniform(-3, 3), rng.Uniform(-3, 3), rng.Uniform(-1, 1)};
  p.initial.acceleration = {rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-0.5, 0.5)};
  for (int t = 0; t < horizon; ++t) {
    p.targets.emplace_back(rng.Uniform(-10, 10), rng.Uniform(-10, 10), rng.Uniform(-kPi, kPi));
  }
  return p;
}

double DynamicsResidual(const LqrProblem& p, const SmoothPlan& plan) {
  const StateMatrix f = TransitionMatrix(p.dt);
  const InputMatrix g = InputMatrixFor(p.dt);
  State x = p.initial.Stacked();
  x(2) = p.initial.pose(2);
  double worst = 0.0;
  for (int t = 0; t < p.horizon(); ++t) {
    x = f * x + g * plan.inputs[t];
    worst = std::max(worst, (x - plan.states[t]).cwiseAbs().maxCoeff());
    x = plan.states[t];
  }
  return worst;
}

TEST(Lqr, AtRestOnTarget) {
  LqrProblem p;
  p.initial.pose = {1, 2, 0.3};
  for (int t = 0; t < 5; ++t) p.targets.emplace_back(1, 2, 0.3);
  const SmoothPlan plan = Solve(p);
  for (const auto& u : plan.inputs) EXPECT_LT(u.norm(), 1e-12);
  EXPECT_LT(plan.cost, 1e-20);
}

TEST(Lqr, OneStepClosedForm) {
  LqrProblem p;
  p.dt = 1.0;
  p.weights = {0.0, 0.0, 0.1, 0.01};
  p.targets.emplace_back(1.0, 0.0, 0.0);
  const SmoothPlan plan = Solve(p);
  EXPECT_NEAR(plan.inputs[0](0), 2.0 / 2.22, 1e-12);
  EXPECT_NEAR(plan.inputs[0](0), 0.9009, 1e-4);
  EXPECT_NEAR(plan.inputs[0](1), 0.0, 1e-15);
  const double u = 2.0 / 2.22;
  EXPECT_NEAR(plan.cost, (u - 1) * (u - 1) + 0.11 * u * u, 1e-12);
}

TEST(Lqr, MatrixStructure) {
  const StateMatrix f = TransitionMatrix(0.5);
  const InputMatrix g = InputMatrixFor(0.5);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(f(c, c), 1.0);
    EXPECT_EQ(f(c, 3 + c), 0.5);
    EXPECT_EQ(f(c, 6 + c), 0.25);
    EXPECT_EQ(f(3 + c, 6 + c), 0.5);
    EXPECT_EQ(g(c, c), 0.125);
    EXPECT_EQ(g(3 + c, c), 0.25);
    EXPECT_EQ(g(6 + c, c), 0.5);
  }
  EXPECT_EQ(f(3, 0), 0.0);
}

TEST(Lqr, DenseOracleThreeSteps) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const LqrProblem p = RandomProblem(rng, 3, i % 2 ? 1.0 : 0.1);
    const SmoothPlan plan = Solve(p);
    const auto dense = oracle::DenseLqr(p);
    EXPECT_NEAR(plan.cost, dense.cost, 1e-6);
    for (int t = 0; t < 3; ++t) {
      for (int c = 0; c < 2; ++c) EXPECT_NEAR(plan.inputs[t](c), dense.inputs(3 * t + c), 1e-6);
    }
  }
}

TEST(Lqr, OracleEquivalenceProperty) {
  const Rng root(2);
  for (int i = 0; i < 100; ++i) {
    Rng rng = root.Split(i);
    const int horizon = 1 + static_cast<int>(rng.UniformInt(5));
    const double dt = rng.Uniform() < 0.5 ? 0.1 : 1.0;
    const LqrProblem p = RandomProblem(rng, horizon, dt);
    const SmoothPlan plan = Solve(p);
    const double dense = oracle::DenseLqr(p).cost;
    EXPECT_LE(plan.cost, dense + 1e-6);
    EXPECT_GE(plan.cost, dense - 1e-6);
    EXPECT_NEAR(EvaluateCost(p, plan.inputs), plan.cost, 1e-9 * std::max(1.0, plan.cost));
    EXPECT_LT(DynamicsResidual(p, plan), 1e-9);
  }
}

TEST(Lqr, LongHorizonMatchesOracle) {
  Rng rng(3);
  const LqrProblem p = RandomProblem(rng, 15, 0.1);
  EXPECT_NEAR(Solve(p).cost, oracle::DenseLqr(p).cost, 1e-6);
}

TEST(Lqr, OptimalityAgainstPerturbedInputs) {
  Rng rng(4);
  const LqrProblem p = RandomProblem(rng, 6, 0.1);
  const SmoothPlan plan = Solve(p);
  for (int i = 0; i < 200; ++i) {
    auto inputs = plan.inputs;
    for (auto& u : inputs) u += Eigen::Vector3d(rng.Normal(), rng.Normal(), rng.Normal()) * 1e-2;
    EXPECT_GE(EvaluateCost(p, inputs), plan.cost - 1e-9);
  }
}

TEST(Lqr, MonotoneSmoothingProperty) {
  const Rng root(5);
  for (int i = 0; i < 100; ++i) {
    Rng rng = root.Split(i);
    Weights lo;
    lo.jerk = rng.Uniform(0.001, 0.1);
    Weights hi = lo;
    hi.jerk = lo.jerk * rng.Uniform(1.5, 10.0);
    LqrProblem a = RandomProblem(rng, 1 + static_cast<int>(rng.UniformInt(8)), 0.1, lo);
    LqrProblem b = a;
    b.weights = hi;
    auto jerk = [](const SmoothPlan& plan) {
      double s = 0;
      for (const auto& u : plan.inputs) s += u.head<2>().squaredNorm();
      return s;
    };
    EXPECT_LE(jerk(Solve(b)), jerk(Solve(a)) * (1 + 1e-9) + 1e-12);
  }
}

TEST(Lqr, ZeroWeightTracksBest) {
  const Rng root(6);
  for (int i = 0; i < 50; ++i) {
    Rng rng = root.Split(i);
    LqrProblem weighted = RandomProblem(rng, 1 + static_cast<int>(rng.UniformInt(5)), 0.1);
    LqrProblem free = weighted;
    free.weights = {0, 0, 0, 0};
    auto tracking = [](const LqrProblem& p, const SmoothPlan& plan) {
      const auto refs = UnwrappedTargets(p);
      double s = 0;
      for (int t = 0; t < p.horizon(); ++t) s += (plan.states[t].head<3>() - refs[t]).squaredNorm();
      return s;
    };
    EXPECT_LE(tracking(free, Solve(free)), tracking(weighted, Solve(weighted)) + 1e-9);
    EXPECT_LT(tracking(free, Solve(free)), 1e-9);
  }
}

TEST(Lqr, HeadingIsUnwrappedAndRenormalized) {
  LqrProblem p;
  p.dt = 0.1;
  p.initial.pose = {0, 0, kPi - 0.05};
  for (int t = 1; t <= 5; ++t) p.targets.emplace_back(0, 0, NormalizeAngle(kPi - 0.05 + 0.03 * t));
  const SmoothPlan plan = Solve(p);
  for (int t = 0; t < 5; ++t) {
    EXPECT_GT(plan.states[t](2), 3.0);
    EXPECT_LE(plan.poses[t].heading, kPi);
    EXPECT_GT(plan.poses[t].heading, -kPi);
  }
  // Without unwrapping the heading channel would chase a 2 pi jump.
  EXPECT_LT(plan.cost, 1.0);
}

TEST(Lqr, Errors) {
  LqrProblem p;
  EXPECT_THROW(Solve(p), std::invalid_argument);
  p.targets.emplace_back(std::nan(""), 0, 0);
  EXPECT_THROW(Solve(p), std::invalid_argument);
  p.targets = {Pose2(1, 0, 0)};
  p.dt = 0;
  EXPECT_THROW(Solve(p), std::invalid_argument);
  p.dt = 0.1;
  p.weights.jerk = -1;
  EXPECT_THROW(Solve(p), std::invalid_argument);
}

TEST(Lqr, FeedbackGainsReproducePlan) {
  Rng rng(7);
  const LqrProblem p = RandomProblem(rng, 8, 0.1);
  const SmoothPlan plan = Solve(p);
  ASSERT_EQ(plan.feedback_gains.size(), 8u);
  State x = p.initial.Stacked();
  for (int t = 0; t < 8; ++t) {
    const Input u = -plan.feedback_gains[t] * x + plan.feedforward[t];
    EXPECT_LT((u - plan.inputs[t]).norm(), 1e-8);
    x = TransitionMatrix(p.dt) * x + InputMatrixFor(p.dt) * u;
  }
}

TEST(PrepareInitialState, Examples) {
  const auto a = PrepareInitialState(Trajectory({{0, 0, 0}, {1, 0, 0}}, 0.1));
  EXPECT_NEAR(a.velocity.x(), 10.0, 1e-12);
  EXPECT_EQ(a.acceleration.norm(), 0.0);
  const auto b = PrepareInitialState(Trajectory({{2, 3, 1}, {2, 3, 1}, {2, 3, 1}}, 0.1));
  EXPECT_EQ(b.velocity.norm(), 0.0);
  EXPECT_EQ(b.acceleration.norm(), 0.0);
  const auto c = PrepareInitialState(Trajectory({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}}, 1.0));
  EXPECT_DOUBLE_EQ(c.velocity.x(), 2.0);
  EXPECT_DOUBLE_EQ(c.acceleration.x(), 1.0);
  EXPECT_EQ(c.pose, Eigen::Vector3d(3, 0, 0));
  EXPECT_THROW(PrepareInitialState(Trajectory({{0, 0, 0}}, 1.0)), std::invalid_argument);
  const auto d = PrepareInitialState(Trajectory({{0, 0, kPi - 0.1}, {0, 0, -kPi + 0.1}}, 1.0));
  EXPECT_NEAR(d.velocity.z(), 0.2, 1e-12);
}

}  // namespace
}  // namespace ccil::lqr
