#include <gtest/gtest.h>

#include <cmath>

#include "ccil/learner/checkpoint.h"
#include "ccil/learner/layers.h"
#include "ccil/learner/optimizer.h"
#include "ccil/network.h"
#include "ccil/scenario.h"
#include "oracles.h"

namespace ccil::nn {
namespace {

constexpr double kTol = 1e-4;
constexpr int kInstances = 50;

Var RandomLeaf(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  return Leaf(oracle::RandomTensor(std::move(shape), rng, scale));
}

// Random linear read-out so every output entry carries a distinct weight.
Var Readout(const Var& y, Rng& rng) {
  const Tensor w = oracle::RandomTensor(y->value.shape(), rng);
  const int n = static_cast<int>(y->value.size());
  return MatMulBT(Reshape(y, {1, n}), Constant(w.Reshaped({1, n})));
}

TEST(Tensor, ShapeAndErrors) {
  const Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rows(), 6);
  EXPECT_EQ(t.cols(), 4);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(t.Reshaped({5, 5}), std::invalid_argument);
}

TEST(Gradients, ElementwiseAndMatrixOps) {
  const Rng root(1);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    Rng rng = root.Split(i);
    const Var a = RandomLeaf({3, 4}, rng);
    const Var b = RandomLeaf({4, 2}, rng);
    const Var c = RandomLeaf({3, 4}, rng);
    const Var row = RandomLeaf({1, 4}, rng);
    Rng r1 = rng.Split(1), r2 = rng.Split(2), r3 = rng.Split(3);
    worst = std::max(worst, oracle::GradientError({a, b}, [&] {
      Rng r = r1;
      return Readout(MatMul(a, b), r);
    }));
    worst = std::max(worst, oracle::GradientError({a, c}, [&] {
      Rng r = r2;
      return Readout(MatMulBT(a, c), r);
    }));
    worst = std::max(worst, oracle::GradientError({a, c, row}, [&] {
      Rng r = r3;
      return Readout(Scale(AddRowBroadcast(Sub(Add(a, c), Relu(c)), row), 0.7), r);
    }));
  }
  EXPECT_LT(worst, kTol);
}

TEST(Gradients, StructuralOps) {
  const Rng root(2);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    Rng rng = root.Split(i);
    const Var a = RandomLeaf({4, 3}, rng);
    const Var b = RandomLeaf({4, 2}, rng);
    const Var c = RandomLeaf({2, 6}, rng);
    Rng r1 = rng.Split(1);
    worst = std::max(worst, oracle::GradientError({a, b, c}, [&] {
      Rng r = r1;
      const Var cat = ConcatCols({SliceCols(a, 1, 2), b});
      const Var rows = ConcatRows({SelectRows(cat, {3, 0, 0}), Reshape(c, {3, 4})});
      const Var masked = MaskRows(rows, {1, 0, 1, 1, 0, 1});
      return AddScalars({Readout(masked, r), SumSquares(Scale(a, 0.3))});
    }));
  }
  EXPECT_LT(worst, kTol);
}

TEST(Gradients, LayerNormAndSoftmax) {
  const Rng root(3);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    Rng rng = root.Split(i);
    const Var x = RandomLeaf({3, 5}, rng, 2.0);
    const Var gain = RandomLeaf({1, 5}, rng);
    const Var bias = RandomLeaf({1, 5}, rng);
    const Var s = RandomLeaf({3, 3}, rng, 3.0);
    std::vector<uint8_t> allowed(9);
    for (auto& m : allowed) m = rng.Uniform() < 0.6;
    Rng r1 = rng.Split(1), r2 = rng.Split(2);
    worst = std::max(worst, oracle::GradientError({x, gain, bias}, [&] {
      Rng r = r1;
      return Readout(LayerNormRows(x, gain, bias), r);
    }));
    worst = std::max(worst, oracle::GradientError({s}, [&] {
      Rng r = r2;
      return Readout(MaskedSoftmaxRows(s, allowed), r);
    }));
  }
  EXPECT_LT(worst, kTol);
}

TEST(Gradients, GroupMaxPoolRoutesToArgmax) {
  const Rng root(4);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    Rng rng = root.Split(i);
    const Var x = RandomLeaf({6, 3}, rng);
    const std::vector<std::vector<int>> groups{{0, 1, 2}, {3}, {4, 5}};
    Rng r1 = rng.Split(1);
    worst = std::max(worst, oracle::GradientError({x}, [&] {
      Rng r = r1;
      return Readout(GroupMaxPool(x, groups), r);
    }));
    x->grad = Tensor();
    Backward(SumSquares(GroupMaxPool(x, groups)));
    for (const auto& g : groups) {
      for (int c = 0; c < 3; ++c) {
        int arg = g[0];
        for (int r : g) {
          if (x->value.at(r, c) > x->value.at(arg, c)) arg = r;
        }
        for (int r : g) {
          if (r != arg) EXPECT_EQ(x->grad.at(r, c), 0.0);
        }
        EXPECT_NE(x->grad.at(arg, c), 0.0);
      }
    }
  }
  EXPECT_LT(worst, kTol);
}

TEST(Gradients, LinearMlpAndLosses) {
  const Rng root(5);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    Rng rng = root.Split(i);
    ParameterStore store;
    const Mlp mlp(store, "mlp", {4, 6, 3}, rng);
    const Var x = RandomLeaf({5, 4}, rng);
    const Tensor target = oracle::RandomTensor({5, 3}, rng, 3.0);
    Tensor weights({5, 3});
    for (size_t k = 0; k < weights.size(); ++k) weights[k] = rng.Uniform(0.1, 1.0);
    std::vector<Var> leaves{x};
    for (const auto& [_, p] : store.entries()) leaves.push_back(p);
    worst = std::max(worst, oracle::GradientError(leaves, [&] {
      return AddScalars({WeightedL1(mlp.Forward(x), target, weights),
                         Scale(store.SquaredNorm(), 0.5 * 1e-2)});
    }));
  }
  EXPECT_LT(worst, kTol);
}

TEST(Gradients, AttentionAndEncoder) {
  const Rng root(6);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    Rng rng = root.Split(i);
    ParameterStore store;
    const bool causal = i % 2 == 0;
    const MultiHeadAttention mha(store, "mha", 4, 2, rng);
    const Encoder encoder(store, "enc", 1, 4, 2, 0.0, rng);
    const Var x = RandomLeaf({5, 4}, rng);
    const std::vector<uint8_t> valid{1, 1, 0, 1, 1};
    std::vector<Var> leaves{x};
    for (const auto& [_, p] : store.entries()) leaves.push_back(p);
    Rng r1 = rng.Split(1);
    worst = std::max(worst, oracle::GradientError(leaves, [&] {
      Rng r = r1;
      Rng drop(0);
      const Var a = mha.Forward(x, valid, causal, i % 3 == 0 ? std::vector<int>{2, 3}
                                                             : std::vector<int>{});
      return Readout(encoder.Forward(a, valid, causal, drop, false), r);
    }));
  }
  EXPECT_LT(worst, kTol);
}

TEST(Gradients, CcilDataLossThroughNetwork) {
  NetworkConfig config;
  config.hidden_size = 8;
  config.heads = 2;
  config.local_layers = 1;
  config.global_layers = 1;
  config.causal_layers = 1;
  config.history = 2;
  config.interval = 1;
  config.future = 2;
  config.dropout_rate = 0.0;
  ObservationConfig obs;
  obs.max_agents = 4;
  const CcilNetwork net(config, obs, 3);
  Rng rng(7);
  const ScenarioLog log = MakeSyntheticScenario(
      MakeSyntheticMap(SyntheticMapKind::kIntersection), "", {}, rng);
  const SceneContext scene = SceneContext::Build(log);
  FrameSpec frame;
  frame.perturb_std = 1.0;
  const auto ex = MakeCcilExample(scene, 20, config, frame, obs, 0.3, rng);
  ASSERT_TRUE(ex.has_value());
  std::vector<Var> leaves;
  for (const auto& [name, p] : net.parameters().entries()) {
    if (name.find("decoder") != std::string::npos ||
        name.find("step_embedding") != std::string::npos ||
        name.find("goal") != std::string::npos) {
      leaves.push_back(p);
    }
  }
  ASSERT_GE(leaves.size(), 3u);
  EXPECT_LT(oracle::GradientError(leaves, [&] {
              Rng drop(0);
              return CcilDataLoss(net.Forward(ex->observations, drop, false), *ex);
            }),
            kTol);
}

TEST(Loss, Examples) {
  CcilExample ex;
  ex.targets = Tensor({1, 3});
  ex.weights = Tensor({1, 3}, 1.0);
  const Var pred = Leaf(Tensor({1, 3}, {1, 2, 0.5}));
  EXPECT_DOUBLE_EQ(CcilDataLoss(pred, ex)->value[0], 3.5);

  const Var exact = Leaf(Tensor({1, 3}, {0, 0, 0}));
  const Var loss = CcilDataLoss(exact, ex);
  EXPECT_EQ(loss->value[0], 0.0);
  Backward(loss);
  for (double g : exact->grad.values()) EXPECT_EQ(g, 0.0);

  const Var wrong = Leaf(Tensor({1, 2}));
  EXPECT_THROW(CcilDataLoss(wrong, ex), std::invalid_argument);
}

TEST(Loss, AuxiliaryWeighting) {
  CcilExample ex;
  ex.targets = Tensor({2, 3});
  ex.weights = Tensor({2, 3}, {0.3, 0.3, 0.3, 1, 1, 1});
  const Var pred = Leaf(Tensor({2, 3}, {1, 1, 1, 1, -1, 2}));
  EXPECT_DOUBLE_EQ(CcilDataLoss(pred, ex)->value[0], 0.3 * 3 + 4);
}

TEST(Loss, RegularizationTermIsHalfLambdaSquaredNorm) {
  Rng rng(8);
  ParameterStore store;
  const Mlp mlp(store, "m", {3, 5, 2}, rng);
  double direct = 0.0;
  for (const auto& [_, p] : store.entries()) {
    for (double v : p->value.values()) direct += v * v;
  }
  const double lambda = 1e-4;
  EXPECT_DOUBLE_EQ(Scale(store.SquaredNorm(), 0.5 * lambda)->value[0], 0.5 * lambda * direct);
}

TEST(Attention, SingleTokenReturnsValueProjection) {
  Rng rng(9);
  ParameterStore store;
  const MultiHeadAttention mha(store, "a", 4, 1, rng);
  const Var x = Constant(oracle::RandomTensor({1, 4}, rng));
  const Var out = mha.Forward(x, {1}, false);
  const auto w = [&](const std::string& n) { return store.Find("a." + n)->value; };
  Eigen::RowVectorXd v = x->value.AsMatrix() * w("value.weight").AsMatrix() +
                         w("value.bias").AsMatrix();
  Eigen::RowVectorXd expected = v * w("output.weight").AsMatrix() + w("output.bias").AsMatrix();
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(out->value[c], expected(c), 1e-12);
}

TEST(Attention, CausalOutputIgnoresFutureTokens) {
  Rng rng(10);
  ParameterStore store;
  const MultiHeadAttention mha(store, "a", 4, 2, rng);
  const Tensor base = oracle::RandomTensor({3, 4}, rng);
  const Var ref = mha.Forward(Constant(base), {1, 1, 1}, true);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor moved = base;
    for (int r = 1; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) moved.at(r, c) += rng.Normal() * 5;
    }
    const Var out = mha.Forward(Constant(moved), {1, 1, 1}, true);
    for (int c = 0; c < 4; ++c) EXPECT_EQ(out->value.at(0, c), ref->value.at(0, c));
  }
}

TEST(Attention, CausalEncoderBitwiseInvariance) {
  Rng rng(11);
  ParameterStore store;
  const Encoder enc(store, "e", 2, 8, 2, 0.0, rng);
  const Tensor base = oracle::RandomTensor({6, 8}, rng);
  Rng d1(0), d2(0);
  const Var ref = enc.Forward(Constant(base), std::vector<uint8_t>(6, 1), true, d1, false);
  for (int h = 0; h < 5; ++h) {
    Tensor moved = base;
    for (int r = h + 1; r < 6; ++r) {
      for (int c = 0; c < 8; ++c) moved.at(r, c) = rng.Normal();
    }
    const Var out = enc.Forward(Constant(moved), std::vector<uint8_t>(6, 1), true, d2, false);
    for (int r = 0; r <= h; ++r) {
      for (int c = 0; c < 8; ++c) EXPECT_EQ(out->value.at(r, c), ref->value.at(r, c));
    }
  }
}

TEST(Attention, UniformKeysGiveUniformWeights) {
  const Var scores = Constant(Tensor({2, 4}, 0.7));
  const std::vector<uint8_t> allowed{1, 1, 0, 1, 0, 0, 0, 0};
  const Var w = MaskedSoftmaxRows(scores, allowed);
  for (int c : {0, 1, 3}) EXPECT_NEAR(w->value.at(0, c), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(w->value.at(0, 2), 0.0);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(w->value.at(1, c), 0.0);
}

TEST(Attention, MaskedRowsAreZeroAndFlagged) {
  Rng rng(12);
  ParameterStore store;
  const MultiHeadAttention mha(store, "a", 4, 2, rng);
  const Var out = mha.Forward(Constant(oracle::RandomTensor({3, 4}, rng)), {1, 0, 1}, false);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(out->value.at(1, c), 0.0);
  EXPECT_EQ(BuildAttentionMask({0, 0}, false).fully_masked_rows, 0);
  const AttentionMask m = BuildAttentionMask({0, 1, 1}, true);
  EXPECT_EQ(m.allowed, (std::vector<uint8_t>{0, 0, 0, 0, 1, 0, 0, 1, 1}));
  EXPECT_THROW(MultiHeadAttention(store, "b", 6, 4, rng), std::invalid_argument);
}

TEST(MaxPool, Examples) {
  const Var single = Constant(Tensor({1, 2}, {4, -1}));
  EXPECT_EQ(GroupMaxPool(single, {{0}})->value, single->value);
  const Var pair = Constant(Tensor({2, 2}, {1, 5, 3, 2}));
  EXPECT_EQ(GroupMaxPool(pair, {{0, 1}})->value, Tensor({1, 2}, {3, 5}));
  EXPECT_THROW(GroupMaxPool(pair, {{0}, {}}), std::invalid_argument);
}

TEST(Dropout, RateZeroIsIdentityAndEvalIsOff) {
  Rng rng(13);
  const Var x = Constant(oracle::RandomTensor({3, 3}, rng));
  EXPECT_EQ(Dropout(x, 0.0, rng, true), x);
  EXPECT_EQ(Dropout(x, 0.5, rng, false), x);
  EXPECT_THROW(Dropout(x, 1.0, rng, true), std::invalid_argument);
}

TEST(Dropout, InvertedExpectation) {
  Rng rng(14);
  const Tensor base = oracle::RandomTensor({2, 5}, rng, 1.0);
  Tensor mean(base.shape());
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Var y = Dropout(Constant(base), 0.1, rng, true);
    for (size_t k = 0; k < mean.size(); ++k) mean[k] += y->value[k] / n;
  }
  double err = 0, scale = 0;
  for (size_t k = 0; k < mean.size(); ++k) {
    err += std::abs(mean[k] - base[k]);
    scale += std::abs(base[k]);
  }
  EXPECT_LT(err / scale, 0.02);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(15);
  ParameterStore store;
  const Var p = store.Create("p", {2, 2}, 2, rng);
  const Tensor before = p->value;
  Adam adam(store, {1e-2, 0.9, 0.999, 1e-8, 0});
  p->Grad().Fill(0.0);
  adam.Step(store);
  EXPECT_EQ(p->value, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterStore store;
  const Var p = store.CreateFilled("p", {1, 1}, 0.0);
  const double alpha = 1e-3;
  Adam adam(store, {alpha, 0.9, 0.999, 1e-8, 0});
  p->Grad().Fill(1.0);
  adam.Step(store);
  EXPECT_NEAR(p->value[0], -alpha / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p->value[0], -alpha, 1e-10);
}

TEST(Adam, WarmupIsLinear) {
  AdamOptions o{5e-4, 0.9, 0.999, 1e-8, 10000};
  EXPECT_DOUBLE_EQ(Adam::EffectiveRate(o, 5000), 2.5e-4);
  EXPECT_DOUBLE_EQ(Adam::EffectiveRate(o, 10000), 5e-4);
  EXPECT_DOUBLE_EQ(Adam::EffectiveRate(o, 20000), 5e-4);
  EXPECT_DOUBLE_EQ(Adam::EffectiveRate(o, 1), 5e-8);
  o.beta1 = 1.0;
  EXPECT_THROW(o.Validate(), std::invalid_argument);
}

TEST(Checkpoint, ExactRoundTrip) {
  Rng rng(16);
  ParameterStore store;
  const Mlp mlp(store, "m", {3, 4, 2}, rng);
  Adam adam(store, {1e-3, 0.9, 0.999, 1e-8, 10});
  for (int s = 0; s < 3; ++s) {
    store.ZeroGrad();
    Backward(SumSquares(mlp.Forward(Constant(oracle::RandomTensor({2, 3}, rng)))));
    adam.Step(store);
  }
  rng.NextU64();
  const Checkpoint ckpt = Capture({{"kind", "test"}, {"x", 0.1}}, store, adam.state(), rng);
  const Checkpoint back = CheckpointFromJson(nlohmann::json::parse(CheckpointToJson(ckpt).dump()));
  EXPECT_EQ(back, ckpt);

  ParameterStore other;
  Rng rng2(99);
  const Mlp mlp2(other, "m", {3, 4, 2}, rng2);
  RestoreParameters(back, other);
  for (size_t i = 0; i < store.entries().size(); ++i) {
    EXPECT_EQ(other.entries()[i].second->value, store.entries()[i].second->value);
  }
  ParameterStore wrong;
  const Mlp mlp3(wrong, "m", {3, 5, 2}, rng2);
  EXPECT_THROW(RestoreParameters(back, wrong), std::runtime_error);
}

}  // namespace
}  // namespace ccil::nn
