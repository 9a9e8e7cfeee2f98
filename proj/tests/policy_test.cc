#include <gtest/gtest.h>

#include <cmath>

#include "ccil/network.h"
#include "ccil/scenario.h"
#include "ccil/toy.h"
#include "ccil/training.h"
#include "oracles.h"

namespace ccil {
namespace {

ScenarioLog StraightLog(int steps, MapData map = {}) {
  ScenarioLog log;
  log.name = "straight";
  log.map = std::move(map);
  for (int i = 0; i <= steps; ++i) log.ego.emplace_back(0.5 * i, 0, 0);
  log.goal = {200, 0};
  return log;
}

AgentTrack StaticAgent(int id, Vec2 at, int poses) {
  AgentTrack a;
  a.id = id;
  a.poses.assign(poses, Pose2(at.x, at.y, 0));
  return a;
}

FrameSpec Std(double s) {
  FrameSpec f;
  f.perturb_std = s;
  return f;
}

NetworkConfig SmallNetwork() {
  NetworkConfig c;
  c.hidden_size = 16;
  c.heads = 2;
  c.local_layers = 1;
  c.global_layers = 1;
  c.causal_layers = 2;
  c.history = 4;
  c.interval = 2;
  c.future = 5;
  c.dropout_rate = 0.1;
  return c;
}

ObservationConfig SmallObservation() {
  ObservationConfig c;
  c.limits.max_polylines = 8;
  c.max_vectors_per_polyline = 8;
  c.max_agents = 6;
  return c;
}

TEST(Observation, EmptyMapKeepsGoal) {
  const ScenarioLog log = StraightLog(10);
  const SceneContext scene = SceneContext::Build(log);
  Rng rng(1);
  const Frame f = MakeFrame(Std(0), log.ego[3], log.goal, rng);
  const ObservationFrame obs = AssembleObservation(scene, 3, f);
  EXPECT_EQ(obs.ValidPolylines(), 0);
  EXPECT_EQ(obs.ValidPolygons(), 0);
  EXPECT_EQ(obs.ValidAgents(), 0);
  for (double v : obs.polylines.values()) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(obs.goal.x, 198.5, 1e-12);
  EXPECT_NEAR(obs.goal.y, 0.0, 1e-12);
}

TEST(Observation, AgentRadius) {
  ScenarioLog log = StraightLog(4);
  log.agents.push_back(StaticAgent(1, {60, 0}, 5));
  log.agents.push_back(StaticAgent(2, {0, 40}, 5));
  log.agents.push_back(StaticAgent(3, {-49.9, 0}, 5));
  const SceneContext scene = SceneContext::Build(log);
  Rng rng(2);
  const Frame f = MakeFrame(Std(0), log.ego[0], log.goal, rng);
  const ObservationFrame obs = AssembleObservation(scene, 0, f);
  EXPECT_EQ(obs.ValidAgents(), 2);
  const double cs = 1.0 / ObservationConfig{}.coordinate_scale;
  for (int a = 0; a < obs.ValidAgents(); ++a) {
    const int cur = (ObservationConfig{}.agent_history - 1) * kAgentStepFeatures;
    const Vec2 p{obs.agents.at(a, cur) / cs, obs.agents.at(a, cur + 1) / cs};
    EXPECT_LT(p.Norm(), 50.0);
  }
}

TEST(Observation, MasksMarkPadding) {
  Rng rng(3);
  const ScenarioLog log =
      MakeSyntheticScenario(MakeSyntheticMap(SyntheticMapKind::kIntersection), "", {}, rng);
  const SceneContext scene = SceneContext::Build(log);
  const ObservationConfig cfg = SmallObservation();
  for (int step = 0; step < static_cast<int>(log.size()); step += 40) {
    const Frame f = MakeFrame(Std(1), log.ego[step], log.goal, rng);
    const ObservationFrame obs = AssembleObservation(scene, step, f, cfg);
    for (size_t r = 0; r < obs.polyline_vector_mask.size(); ++r) {
      if (obs.polyline_vector_mask[r]) continue;
      for (int c = 0; c < kPolylineFeatures; ++c) EXPECT_EQ(obs.polylines.at(r, c), 0.0);
    }
    for (size_t a = 0; a < obs.agent_mask.size(); ++a) {
      if (obs.agent_mask[a]) continue;
      for (int c = 0; c < obs.agents.cols(); ++c) EXPECT_EQ(obs.agents.at(a, c), 0.0);
    }
    EXPECT_GT(obs.ValidPolylines(), 0);
  }
}

TEST(Observation, EgoBlindness) {
  Rng rng(4);
  const ScenarioLog log =
      MakeSyntheticScenario(MakeSyntheticMap(SyntheticMapKind::kIntersection), "", {}, rng);
  ScenarioLog moved = log;
  const int now = 100;
  for (int i = 0; i < now; ++i) {
    moved.ego[i] = Pose2(rng.Uniform(-80, 80), rng.Uniform(-80, 80), rng.Uniform(-3, 3));
  }
  for (int i = now + 1; i < static_cast<int>(moved.size()); ++i) {
    moved.ego[i].heading += 0.5;
  }
  moved.ego[now].heading = -log.ego[now].heading;
  const SceneContext a = SceneContext::Build(log);
  const SceneContext b = SceneContext::Build(moved);
  Rng ra(5), rb(5);
  const Frame fa = MakeFrame(Std(0), log.ego[now], log.goal, ra);
  const Frame fb = MakeFrame(Std(0), moved.ego[now], moved.goal, rb);
  const ObservationFrame oa = AssembleObservation(a, now, fa, SmallObservation());
  const ObservationFrame ob = AssembleObservation(b, now, fb, SmallObservation());
  EXPECT_EQ(oa, ob);
  EXPECT_EQ(Digest(oa), Digest(ob));

  NetworkConfig cfg = SmallNetwork();
  cfg.history = 1;
  const CcilNetwork net(cfg, SmallObservation(), 6);
  const auto pa = net.Predict(std::vector<ObservationFrame>{oa});
  const auto pb = net.Predict(std::vector<ObservationFrame>{ob});
  EXPECT_EQ(pa.poses, pb.poses);
}

TEST(Observation, DeterministicAtZeroStd) {
  Rng rng(7);
  const ScenarioLog log =
      MakeSyntheticScenario(MakeSyntheticMap(SyntheticMapKind::kCorridor), "", {}, rng);
  const SceneContext scene = SceneContext::Build(log);
  for (int step : {0, 50, 120}) {
    Rng r1(8), r2(9);
    const ObservationFrame a =
        AssembleObservation(scene, step, MakeFrame(Std(0), log.ego[step], log.goal, r1));
    const ObservationFrame b =
        AssembleObservation(scene, step, MakeFrame(Std(0), log.ego[step], log.goal, r2));
    EXPECT_EQ(a, b);
    EXPECT_EQ(Digest(a), Digest(b));
  }
}

class NetworkFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(10);
    log_ = MakeSyntheticScenario(MakeSyntheticMap(SyntheticMapKind::kIntersection), "", {},
                                 rng);
    scene_ = SceneContext::Build(log_);
  }
  std::vector<ObservationFrame> History(int now, const NetworkConfig& cfg, Rng& rng) {
    std::vector<ObservationFrame> out;
    for (int h = cfg.history - 1; h >= 0; --h) {
      const int step = now - h * cfg.interval;
      out.push_back(AssembleObservation(
          scene_, step, MakeFrame(Std(1), log_.ego[step], log_.goal, rng), SmallObservation()));
    }
    return out;
  }
  ScenarioLog log_;
  SceneContext scene_;
};

TEST_F(NetworkFixture, OutputShape) {
  for (int history : {1, 3, 5}) {
    NetworkConfig cfg = SmallNetwork();
    cfg.history = history;
    const CcilNetwork net(cfg, SmallObservation(), 11);
    Rng rng(12);
    const auto pred = net.Predict(History(60, cfg, rng));
    EXPECT_EQ(pred.poses.rows(), history);
    EXPECT_EQ(pred.poses.cols(), 3 * cfg.future);
    EXPECT_EQ(pred.Current().size(), static_cast<size_t>(cfg.future));
    EXPECT_TRUE(pred.poses.AllFinite());
  }
}

TEST_F(NetworkFixture, ShapeMismatchThrows) {
  const NetworkConfig cfg = SmallNetwork();
  const CcilNetwork net(cfg, SmallObservation(), 13);
  Rng rng(14);
  auto hist = History(60, cfg, rng);
  hist.pop_back();
  EXPECT_THROW(net.Predict(hist), std::invalid_argument);
  NetworkConfig bad = cfg;
  bad.heads = 3;
  EXPECT_THROW(CcilNetwork(bad, SmallObservation(), 1), std::invalid_argument);
}

TEST_F(NetworkFixture, CausalContract) {
  const NetworkConfig cfg = SmallNetwork();
  const CcilNetwork net(cfg, SmallObservation(), 15);
  Rng rng(16);
  const auto base = History(80, cfg, rng);
  const auto other = History(150, cfg, rng);
  const auto ref = net.Predict(base);
  for (int keep = 1; keep < cfg.history; ++keep) {
    auto mixed = base;
    for (int i = keep; i < cfg.history; ++i) mixed[i] = other[i];
    const auto pred = net.Predict(mixed);
    for (int row = 0; row < keep; ++row) {
      for (int c = 0; c < pred.poses.cols(); ++c) {
        EXPECT_EQ(pred.poses.at(row, c), ref.poses.at(row, c));
      }
    }
  }
}

TEST_F(NetworkFixture, AuxiliaryTargetIndexContract) {
  NetworkConfig cfg = SmallNetwork();
  cfg.dropout_rate = 0.0;
  Rng rng(17);
  const int now = 90;
  Rng draw = rng;
  const auto ex = MakeCcilExample(scene_, now, cfg, Std(1), SmallObservation(), 0.3, rng);
  ASSERT_TRUE(ex.has_value());
  for (int i = 0; i < cfg.history; ++i) {
    const int h = cfg.history - 1 - i;
    const Frame& f = ex->observations[i].frame;
    for (int t = 1; t <= cfg.future; ++t) {
      const Pose2 gt = f.ToLocal(log_.ego[now - h * cfg.interval + t]);
      EXPECT_EQ(ex->targets.at(i, 3 * (t - 1)), gt.x);
      EXPECT_EQ(ex->targets.at(i, 3 * (t - 1) + 1), gt.y);
      EXPECT_EQ(ex->targets.at(i, 3 * (t - 1) + 2), gt.heading);
      EXPECT_EQ(ex->weights.at(i, 3 * (t - 1)), h == 0 ? 1.0 : 0.3);
    }
  }
  EXPECT_FALSE(MakeCcilExample(scene_, 3, cfg, Std(1), SmallObservation(), 0.3, draw));
  EXPECT_FALSE(MakeCcilExample(scene_, static_cast<int>(log_.size()) - 2, cfg, Std(1),
                               SmallObservation(), 0.3, draw));
}

TEST_F(NetworkFixture, AuxiliaryTargetIdentityAtUnitInterval) {
  NetworkConfig cfg = SmallNetwork();
  cfg.interval = 1;
  Rng rng(18);
  const auto ex = MakeCcilExample(scene_, 70, cfg, Std(2), SmallObservation(), 0.3, rng);
  ASSERT_TRUE(ex.has_value());
  const int cur = cfg.history - 1;
  const Frame& older = ex->observations[cur - 1].frame;
  const Frame& now = ex->observations[cur].frame;
  const Pose2 p0 = now.ToGlobal(Pose2(ex->targets.at(cur, 0), ex->targets.at(cur, 1),
                                      ex->targets.at(cur, 2)));
  const Pose2 expected = older.ToLocal(p0);
  EXPECT_NEAR(ex->targets.at(cur - 1, 3), expected.x, 1e-9);
  EXPECT_NEAR(ex->targets.at(cur - 1, 4), expected.y, 1e-9);
  EXPECT_NEAR(NormalizeAngle(ex->targets.at(cur - 1, 5) - expected.heading), 0.0, 1e-9);
}

TEST_F(NetworkFixture, DropoutOffIsDeterministic) {
  const NetworkConfig cfg = SmallNetwork();
  const CcilNetwork net(cfg, SmallObservation(), 19);
  Rng rng(20);
  const auto hist = History(60, cfg, rng);
  Rng d1(1), d2(2);
  EXPECT_EQ(net.Forward(hist, d1, false)->value, net.Forward(hist, d2, false)->value);
  Rng d3(1), d4(1);
  EXPECT_EQ(net.Forward(hist, d3, true)->value, net.Forward(hist, d4, true)->value);
  Rng d5(3);
  EXPECT_NE(net.Forward(hist, d5, true)->value, net.Forward(hist, d1, false)->value);
}

TEST(ToyExamples, RingTargetIsArcAdvance) {
  const double r = 50.0;
  toy::ToyConfig cfg;
  toy::ToyScene scene{MakeRingScenarioAt(r, 30, 0.0), toy::Ring(r)};
  Rng rng(21);
  const auto ex = toy::MakeToyExample(PolicyKind::kBc, scene, 15, cfg, rng);
  ASSERT_EQ(ex.target.size(), 3u);
  EXPECT_NEAR(ex.target[0], r * std::sin(1.0 / r), 1e-9);
  EXPECT_NEAR(ex.target[1], r * (1.0 - std::cos(1.0 / r)), 1e-9);
  EXPECT_NEAR(ex.target[2], 1.0 / r, 1e-9);
  EXPECT_NEAR(ex.target[0], 0.99997, 1e-4);
  EXPECT_NEAR(ex.target[1], 0.01, 1e-4);
  EXPECT_NEAR(ex.target[2], 0.02, 1e-12);
}

TEST(ToyExamples, StraightUnitAdvance) {
  ScenarioLog log;
  for (int i = 0; i <= 20; ++i) log.ego.emplace_back(i, 0, 0);
  log.frequency = 1.0;
  toy::ToyScene scene{log, toy::Ring(50)};
  toy::ToyConfig cfg;
  Rng rng(22);
  const auto ex = toy::MakeToyExample(PolicyKind::kBc, scene, 12, cfg, rng);
  EXPECT_NEAR(ex.target[0], 1.0, 1e-12);
  EXPECT_NEAR(ex.target[1], 0.0, 1e-12);
  EXPECT_NEAR(ex.target[2], 0.0, 1e-12);
}

TEST(ToyExamples, CcilZeroStdTargetInCenterFrame) {
  const double r = 30.0;
  toy::ToyConfig cfg;
  cfg.perturb_std = 0.0;
  toy::ToyScene scene{MakeRingScenarioAt(r, 30, 1.0), toy::Ring(r)};
  Rng rng(23);
  const auto ex = toy::MakeToyExample(PolicyKind::kCcil, scene, 12, cfg, rng);
  EXPECT_EQ(static_cast<int>(ex.input.size()), toy::InputSize(PolicyKind::kCcil, cfg));
  // Frame at the current position with x-axis to the centre: the next
  // point on a counter-clockwise ring lies 1 - cos(1/r) closer, to the right.
  EXPECT_NEAR(ex.target[0], r * (1.0 - std::cos(1.0 / r)), 1e-9);
  EXPECT_NEAR(ex.target[1], -r * std::sin(1.0 / r), 1e-9);
}

TEST(ToyExamples, BcPerturbBlendsBack) {
  toy::ToyConfig cfg;
  toy::ToyScene scene{MakeRingScenarioAt(50, 40, 0.0), toy::Ring(50)};
  Rng rng(24);
  const auto ex = toy::MakeToyExample(PolicyKind::kBcPerturb, scene, 15, cfg, rng);
  ASSERT_EQ(ex.target.size(), static_cast<size_t>(3 * cfg.perturb_horizon));
  Rng again(24);
  const auto noisy = toy::MakeToyExample(PolicyKind::kBcPerturb, scene, 15, cfg, again);
  EXPECT_EQ(ex.input, noisy.input);
  const auto clean = toy::MakeToyExample(PolicyKind::kBc, scene, 15, cfg, rng);
  EXPECT_NE(ex.input, clean.input);
  EXPECT_EQ(ex.input.size(), clean.input.size());
}

TEST(ToyExamples, IndexRange) {
  toy::ToyConfig cfg;
  toy::ToyScene scene{MakeRingScenarioAt(50, 20, 0.0), toy::Ring(50)};
  Rng rng(25);
  EXPECT_THROW(toy::MakeToyExample(PolicyKind::kBc, scene, 8, cfg, rng), std::out_of_range);
  EXPECT_NO_THROW(toy::MakeToyExample(PolicyKind::kBc, scene, 19, cfg, rng));
  EXPECT_THROW(toy::MakeToyExample(PolicyKind::kBc, scene, 20, cfg, rng), std::out_of_range);
  EXPECT_THROW(toy::MakeToyExample(PolicyKind::kBcPerturb, scene, 11, cfg, rng),
               std::out_of_range);
}

TEST(ToyExamples, RingNearestPoints) {
  const toy::Ring ring(20.0);
  EXPECT_NEAR(Distance(ring.points[0], ring.points[1]), 1.0, 0.01);
  const auto pts = ring.NearestPoints({20, 0}, 10);
  ASSERT_EQ(pts.size(), 10u);
  for (const auto& p : pts) EXPECT_LT(Distance(p, {20, 0}), 6.0);
}

toy::ToyConfig TinyToy() {
  toy::ToyConfig cfg;
  cfg.hidden = 32;
  cfg.scenes = 8;
  cfg.scene_steps = 30;
  cfg.batch_size = 8;
  cfg.train_steps = 60;
  cfg.learning_rate = 1e-3;
  return cfg;
}

TEST(Training, SameSeedSameParameters) {
  const toy::ToyConfig cfg = TinyToy();
  Rng data(26);
  const auto scenes = toy::MakeToyDataset(cfg, data);
  for (auto kind : {PolicyKind::kCcil, PolicyKind::kBc, PolicyKind::kBcPerturb}) {
    const auto runs = TrainToySeeds(kind, cfg, scenes, {3, 3, 4}, 2);
    ASSERT_EQ(runs.size(), 3u);
    const auto& a = runs[0].policy.parameters().entries();
    const auto& b = runs[1].policy.parameters().entries();
    const auto& c = runs[2].policy.parameters().entries();
    bool differs = false;
    for (size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].second->value, b[i].second->value);
      differs = differs || a[i].second->value != c[i].second->value;
    }
    EXPECT_TRUE(differs);
    EXPECT_EQ(runs[0].result.curve_loss, runs[1].result.curve_loss);
  }
}

TEST(Training, MemorizesIdenticalExamples) {
  Rng rng(27);
  nn::ParameterStore store;
  const nn::Mlp mlp(store, "m", {4, 16, 3}, rng);
  const nn::Tensor x = oracle::RandomTensor({8, 4}, rng);
  nn::Tensor x_same(x.shape());
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 4; ++c) x_same.at(r, c) = x.at(0, c);
  }
  const nn::Tensor target({8, 3}, {0.3, -0.2, 0.1, 0.3, -0.2, 0.1, 0.3, -0.2, 0.1, 0.3, -0.2,
                                   0.1, 0.3, -0.2, 0.1, 0.3, -0.2, 0.1, 0.3, -0.2, 0.1, 0.3,
                                   -0.2, 0.1});
  const nn::Tensor w({8, 3}, 1.0 / 8);
  TrainOptions opt;
  opt.steps = 4000;
  opt.adam.learning_rate = 1e-3;
  opt.regularization = 0.0;
  const TrainResult res = Train(
      store, [&](int64_t, Rng&) { return nn::WeightedL1(mlp.Forward(nn::Constant(x_same)), target, w); },
      opt, 1);
  EXPECT_FALSE(res.diverged);
  EXPECT_LT(res.final_loss, 5e-3);
  EXPECT_EQ(res.steps_completed, 4000);
}

TEST(Training, DivergenceIsReported) {
  nn::ParameterStore store;
  const nn::Var p = store.CreateFilled("p", {1, 1}, 1.0);
  TrainOptions opt;
  opt.steps = 10;
  const TrainResult res = Train(
      store,
      [&](int64_t step, Rng&) {
        return step == 4 ? nn::Scale(p, std::nan("")) : nn::SumSquares(p);
      },
      opt, 1);
  EXPECT_TRUE(res.diverged);
  EXPECT_EQ(res.steps_completed, 3);
  EXPECT_FALSE(res.message.empty());
}

TEST(Training, ToyLossDecreases) {
  toy::ToyConfig cfg = TinyToy();
  cfg.train_steps = 400;
  cfg.perturb_std = 0.0;
  Rng data(28);
  const auto scenes = toy::MakeToyDataset(cfg, data);
  toy::ToyPolicy untrained(PolicyKind::kCcil, cfg, 5);
  const double before = EvaluateToyLoss(untrained, scenes, cfg, 200, 9);
  toy::ToyPolicy policy(PolicyKind::kCcil, cfg, 5);
  const TrainResult res = TrainToyPolicy(policy, scenes, 5);
  EXPECT_FALSE(res.diverged);
  const double after = EvaluateToyLoss(policy, scenes, cfg, 200, 9);
  EXPECT_LT(after, 0.5 * before);
}

TEST(Training, CcilNetworkStepRuns) {
  Rng rng(29);
  std::vector<ScenarioLog> logs;
  for (int i = 0; i < 2; ++i) {
    logs.push_back(
        MakeSyntheticScenario(MakeSyntheticMap(SyntheticMapKind::kCorridor), "", {}, rng));
  }
  std::vector<SceneContext> scenes;
  for (const auto& l : logs) scenes.push_back(SceneContext::Build(l));
  CcilNetwork net(SmallNetwork(), SmallObservation(), 30);
  CcilTrainOptions opt;
  opt.train.steps = 3;
  opt.train.batch_size = 2;
  opt.train.adam.learning_rate = 1e-3;
  opt.frame = Std(1);
  const nn::Tensor before = net.parameters().entries()[0].second->value;
  const TrainResult res = TrainCcilNetwork(net, scenes, opt, 31);
  EXPECT_FALSE(res.diverged);
  EXPECT_EQ(res.steps_completed, 3);
  EXPECT_TRUE(std::isfinite(res.final_loss));
  EXPECT_NE(net.parameters().entries()[0].second->value, before);
}

}  // namespace
}  // namespace ccil
