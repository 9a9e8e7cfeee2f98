#include "ccil/training.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace ccil {

using nn::Tensor;
using nn::Var;

namespace {

bool GradientsFinite(const nn::ParameterStore& params) {
  for (const auto& [_, p] : params.entries()) {
    if (!p->grad.empty() && !p->grad.AllFinite()) return false;
  }
  return true;
}

}  // namespace

TrainResult Train(nn::ParameterStore& params, const BatchLoss& batch_loss,
                  const TrainOptions& options, uint64_t seed,
                  nn::Adam* optimizer) {
  std::optional<nn::Adam> own;
  if (optimizer == nullptr) {
    own.emplace(params, options.adam);
    optimizer = &*own;
  }
  const Rng base(seed);
  TrainResult result;
  double window = 0.0;
  int64_t window_count = 0;
  const int64_t first = optimizer->state().step_count;
  for (int64_t step = first + 1; step <= first + options.steps; ++step) {
    params.ZeroGrad();
    Rng rng = base.Split(static_cast<uint64_t>(step));
    const int chunks = std::max(1, options.chunks);
    double loss = 0.0;
    bool finite = true;
    for (int c = 0; c < chunks && finite; ++c) {
      Rng chunk_rng = chunks == 1 ? rng : rng.Split(static_cast<uint64_t>(c));
      Var data = batch_loss(step, chunk_rng);
      if (chunks > 1) data = nn::Scale(data, 1.0 / chunks);
      Var total = data;
      if (c == 0 && options.regularization > 0.0) {
        total = nn::AddScalars(
            {data, nn::Scale(params.SquaredNorm(), 0.5 * options.regularization)});
      }
      loss += data->value[0];
      if (!std::isfinite(total->value[0])) {
        finite = false;
        break;
      }
      nn::Backward(total);
    }
    if (!finite) {
      result.diverged = true;
      result.message = "loss became non-finite at step " + std::to_string(step);
      break;
    }
    if (!GradientsFinite(params)) {
      result.diverged = true;
      result.message = "gradient became non-finite at step " + std::to_string(step);
      break;
    }
    optimizer->Step(params);
    result.final_loss = loss;
    result.steps_completed = step - first;
    window += loss;
    ++window_count;
    if (options.log_every > 0 && (step - first) % options.log_every == 0) {
      result.curve_steps.push_back(step);
      result.curve_loss.push_back(window / window_count);
      window = 0.0;
      window_count = 0;
    }
  }
  return result;
}

TrainOptions ToyTrainOptions(const toy::ToyConfig& config) {
  TrainOptions o;
  o.steps = config.train_steps;
  o.batch_size = config.batch_size;
  o.adam.learning_rate = config.learning_rate;
  o.adam.warmup_steps = 0;
  o.regularization = config.regularization;
  return o;
}

Var ToyBatchLoss(const toy::ToyPolicy& policy,
                 const std::vector<toy::ToyScene>& scenes,
                 const toy::ToyConfig& sample_config, int batch_size, Rng& rng) {
  const PolicyKind kind = policy.kind();
  const int in = toy::InputSize(kind, sample_config);
  const int out = toy::OutputSize(kind, sample_config);
  Tensor inputs({batch_size, in});
  Tensor targets({batch_size, out});
  const int first = toy::FirstSampleIndex(sample_config);
  for (int b = 0; b < batch_size; ++b) {
    Rng r = rng.Split(static_cast<uint64_t>(b));
    const auto& scene = scenes[r.UniformInt(scenes.size())];
    const int last = toy::LastSampleIndex(kind, sample_config,
                                          static_cast<int>(scene.log.size()));
    const int now = first + static_cast<int>(r.UniformInt(last - first + 1));
    const toy::ToyExample ex = toy::MakeToyExample(kind, scene, now, sample_config, r);
    std::copy(ex.input.begin(), ex.input.end(), &inputs.at(b, 0));
    std::copy(ex.target.begin(), ex.target.end(), &targets.at(b, 0));
  }
  const Tensor weights({batch_size, out}, 1.0 / batch_size);
  return nn::WeightedL1(policy.Forward(nn::Constant(std::move(inputs))), targets,
                        weights);
}

TrainResult TrainToyPolicy(toy::ToyPolicy& policy,
                           const std::vector<toy::ToyScene>& scenes, uint64_t seed) {
  if (scenes.empty()) throw std::invalid_argument("toy dataset is empty");
  const toy::ToyConfig& config = policy.config();
  const TrainOptions options = ToyTrainOptions(config);
  return Train(
      policy.parameters(),
      [&](int64_t, Rng& rng) {
        return ToyBatchLoss(policy, scenes, config, options.batch_size, rng);
      },
      options, seed);
}

double EvaluateToyLoss(const toy::ToyPolicy& policy,
                       const std::vector<toy::ToyScene>& scenes,
                       const toy::ToyConfig& sample_config, int samples,
                       uint64_t seed) {
  Rng rng(seed);
  return ToyBatchLoss(policy, scenes, sample_config, samples, rng)->value[0];
}

void ParallelFor(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (int j = 0; j < jobs; ++j) {
    threads.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ToyRun> TrainToySeeds(PolicyKind kind, const toy::ToyConfig& config,
                                  const std::vector<toy::ToyScene>& scenes,
                                  const std::vector<uint64_t>& seeds, int jobs) {
  std::vector<std::optional<ToyRun>> slots(seeds.size());
  ParallelFor(static_cast<int>(seeds.size()), jobs, [&](int i) {
    const uint64_t seed = seeds[i];
    toy::ToyPolicy policy(kind, config, Rng(seed).Split(1).NextU64());
    TrainResult r = TrainToyPolicy(policy, scenes, Rng(seed).Split(2).NextU64());
    slots[i] = ToyRun{seed, std::move(policy), std::move(r)};
  });
  std::vector<ToyRun> runs;
  for (auto& s : slots) runs.push_back(std::move(*s));
  return runs;
}

TrainResult TrainCcilNetwork(CcilNetwork& network,
                             const std::vector<SceneContext>& scenes,
                             const CcilTrainOptions& options, uint64_t seed) {
  if (scenes.empty()) throw std::invalid_argument("training dataset is empty");
  const NetworkConfig& cfg = network.config();
  const int first = (cfg.history - 1) * cfg.interval;
  // One example per chunk keeps a single graph alive at a time.
  TrainOptions train = options.train;
  train.chunks = std::max(1, train.batch_size);
  train.regularization = options.loss.regularization;
  return Train(
      network.parameters(),
      [&](int64_t, Rng& rng) {
        Rng r = rng.Split(0);
        std::optional<CcilExample> ex;
        for (int attempt = 0; attempt < 16 && !ex; ++attempt) {
          const SceneContext& scene = scenes[r.UniformInt(scenes.size())];
          const int last = static_cast<int>(scene.log->size()) - 1 - cfg.future;
          if (last < first) continue;
          const int now = first + static_cast<int>(r.UniformInt(last - first + 1));
          ex = MakeCcilExample(scene, now, cfg, options.frame,
                               network.observation_config(),
                               options.loss.auxiliary, r);
        }
        if (!ex) throw std::invalid_argument("scenes too short for H, I and T");
        Rng dropout = r.Split(99);
        const Var pred = network.Forward(ex->observations, dropout, true);
        return CcilDataLoss(pred, *ex);
      },
      train, seed);
}

}  // namespace ccil
