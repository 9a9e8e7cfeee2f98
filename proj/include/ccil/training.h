#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccil/learner/optimizer.h"
#include "ccil/network.h"
#include "ccil/toy.h"

namespace ccil {

struct TrainOptions {
  int64_t steps = 10000;
  int batch_size = 32;
  nn::AdamOptions adam;
  double regularization = 1e-4;  // lambda
  int64_t log_every = 100;
  // Gradient accumulation: the batch loss is evaluated this many times per
  // step on independent streams and the gradients are averaged.
  int chunks = 1;
};

struct TrainResult {
  std::vector<int64_t> curve_steps;
  std::vector<double> curve_loss;  // mean data loss over each logging window
  double final_loss = 0.0;         // data loss of the last batch
  int64_t steps_completed = 0;
  bool diverged = false;
  std::string message;
};

// Mean data loss of one batch, built from a stream dedicated to that step.
using BatchLoss = std::function<nn::Var(int64_t step, Rng& rng)>;

// Minimizes batch loss + (lambda / 2) * |theta|^2 with Adam. Stops and
// reports when the loss or a gradient becomes non-finite.
TrainResult Train(nn::ParameterStore& params, const BatchLoss& batch_loss,
                  const TrainOptions& options, uint64_t seed,
                  nn::Adam* optimizer = nullptr);

TrainOptions ToyTrainOptions(const toy::ToyConfig& config);

// Mean over the batch of the per-sample L1 error.
nn::Var ToyBatchLoss(const toy::ToyPolicy& policy,
                     const std::vector<toy::ToyScene>& scenes,
                     const toy::ToyConfig& sample_config, int batch_size, Rng& rng);

TrainResult TrainToyPolicy(toy::ToyPolicy& policy,
                           const std::vector<toy::ToyScene>& scenes, uint64_t seed);

// Mean per-sample L1 on `samples` fresh draws (examples built with
// `sample_config`, which may differ from the training one, e.g. in noise).
double EvaluateToyLoss(const toy::ToyPolicy& policy,
                       const std::vector<toy::ToyScene>& scenes,
                       const toy::ToyConfig& sample_config, int samples,
                       uint64_t seed);

struct ToyRun {
  uint64_t seed = 0;
  toy::ToyPolicy policy;
  TrainResult result;
};

// One independently initialised and trained policy per seed, `jobs` at a
// time. Results come back in seed order.
std::vector<ToyRun> TrainToySeeds(PolicyKind kind, const toy::ToyConfig& config,
                                  const std::vector<toy::ToyScene>& scenes,
                                  const std::vector<uint64_t>& seeds, int jobs);

struct CcilTrainOptions {
  TrainOptions train;
  LossWeights loss;
  FrameSpec frame;
};

TrainResult TrainCcilNetwork(CcilNetwork& network,
                             const std::vector<SceneContext>& scenes,
                             const CcilTrainOptions& options, uint64_t seed);

// Runs `fn(i)` for i in [0, n) on up to `jobs` threads.
void ParallelFor(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace ccil
