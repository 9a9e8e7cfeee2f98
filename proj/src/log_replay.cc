#include "ccil/log_replay.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ccil {

Rng TickStream(uint64_t seed, int step) {
  return Rng(seed).Split(static_cast<uint64_t>(step));
}

std::vector<Pose2> OraclePolicy::Plan(const ReplayTick& tick, uint64_t* digest) {
  const auto& gt = tick.scene->log->ego;
  const int last = static_cast<int>(gt.size()) - 1;
  std::vector<Pose2> plan;
  for (int t = 1; t <= horizon_; ++t) plan.push_back(gt[std::min(tick.step + t, last)]);
  if (digest) *digest = 0;
  return plan;
}

std::vector<Pose2> NoisyOraclePolicy::Plan(const ReplayTick& tick, uint64_t* digest) {
  const auto& gt = tick.scene->log->ego;
  const int last = static_cast<int>(gt.size()) - 1;
  std::vector<Pose2> plan;
  for (int t = 1; t <= horizon_; ++t) {
    const Pose2& g = gt[std::min(tick.step + t, last)];
    plan.emplace_back(g.x + tick.rng->Normal(0.0, position_std_),
                      g.y + tick.rng->Normal(0.0, position_std_),
                      g.heading + tick.rng->Normal(0.0, heading_std_));
  }
  if (digest) *digest = 0;
  return plan;
}

int NetworkPolicy::WarmupSteps() const {
  const auto& c = network_.config();
  return (c.history - 1) * c.interval;
}

std::vector<Pose2> NetworkPolicy::Plan(const ReplayTick& tick, uint64_t* digest) {
  const auto& c = network_.config();
  const SceneContext& scene = *tick.scene;
  std::vector<ObservationFrame> history;
  uint64_t combined = 14695981039346656037ULL;
  Frame current;
  for (int i = 0; i < c.history; ++i) {
    const int h = c.history - 1 - i;
    const int step = tick.step - h * c.interval;
    // Frames depend only on (seed, step), so a past step's frame is the one
    // it had when it was current.
    Rng frame_rng = TickStream(tick.seed, step).Split(frame_.seed);
    const Frame frame =
        MakeFrame(frame_, (*tick.executed)[step], scene.log->goal, frame_rng);
    history.push_back(AssembleObservation(scene, step, frame,
                                          network_.observation_config()));
    combined = (combined ^ Digest(history.back())) * 1099511628211ULL;
    if (h == 0) current = frame;
  }
  if (digest) *digest = combined;
  const PosePrediction pred = network_.Predict(history);
  std::vector<Pose2> plan;
  for (const Pose2& local : pred.Current()) plan.push_back(current.ToGlobal(local));
  return plan;
}

namespace {

bool PlanFinite(const std::vector<Pose2>& plan) {
  for (const auto& p : plan) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.heading)) {
      return false;
    }
  }
  return !plan.empty();
}

}  // namespace

RolloutRecord RunLogReplay(const ScenarioLog& log, ReplayPolicy& policy,
                           const ReplayOptions& options) {
  log.Validate();
  const SceneContext scene = SceneContext::Build(log);
  RolloutRecord rec;
  rec.dt = log.dt();
  rec.seed = options.seed;
  rec.policy = policy.name();
  rec.agents = log.agents;
  const int n = static_cast<int>(log.size());
  rec.start_step =
      std::min(std::max(policy.WarmupSteps(), options.lqr_history - 1), n - 1);
  rec.executed.assign(log.ego.begin(), log.ego.begin() + rec.start_step + 1);

  for (int step = rec.start_step; step + 1 < n; ++step) {
    Rng rng = TickStream(options.seed, step);
    ReplayTick tick{&scene, step, &rec.executed, &rng, options.seed};
    std::vector<Pose2> plan;
    uint64_t digest = 0;
    try {
      plan = policy.Plan(tick, &digest);
      if (!PlanFinite(plan)) throw std::runtime_error("policy produced a non-finite plan");
      if (options.use_lqr) {
        const int k = std::min<int>(options.lqr_history, rec.executed.size());
        Trajectory hist(std::vector<Pose2>(rec.executed.end() - k, rec.executed.end()),
                        log.dt());
        lqr::LqrProblem problem;
        problem.dt = log.dt();
        problem.initial = lqr::PrepareInitialState(hist);
        problem.targets = plan;
        problem.weights = options.weights;
        plan = lqr::Solve(problem).poses;
        if (!PlanFinite(plan)) throw std::runtime_error("LQR produced a non-finite plan");
      }
    } catch (const std::exception& e) {
      rec.truncated = true;
      rec.reason = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
    rec.plans.push_back(plan);
    rec.observation_digests.push_back(digest);
    rec.executed.push_back(plan.front());
  }
  return rec;
}

RolloutRecord RunToyRollout(const toy::ToyPolicy& policy, double radius,
                            int steps, uint64_t seed) {
  const toy::ToyConfig& cfg = policy.config();
  Rng rng(seed);
  const double start = rng.Uniform(0.0, 2.0 * kPi);
  const ScenarioLog prime = MakeRingScenarioAt(radius, cfg.history - 1, start);
  const toy::Ring ring(radius, cfg.lane_spacing);
  RolloutRecord rec;
  rec.dt = 1.0 / kToyFrequency;
  rec.seed = seed;
  rec.policy = ToString(policy.kind());
  rec.executed = prime.ego;
  rec.start_step = cfg.history - 1;
  for (int k = 0; k < steps; ++k) {
    Rng step_rng = rng.Split(static_cast<uint64_t>(k));
    const std::vector<Pose2> history(rec.executed.end() - cfg.history,
                                     rec.executed.end());
    try {
      const Pose2 next = policy.NextPose(ring, history, step_rng);
      if (!PlanFinite({next})) throw std::runtime_error("non-finite prediction");
      rec.plans.push_back({next});
      rec.executed.push_back(next);
    } catch (const std::exception& e) {
      rec.truncated = true;
      rec.reason = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  return rec;
}

namespace {

nlohmann::json PosesJson(const std::vector<Pose2>& poses) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : poses) arr.push_back({p.x, p.y, p.heading});
  return arr;
}

}  // namespace

std::string RolloutToJson(const RolloutRecord& r) {
  nlohmann::json plans = nlohmann::json::array();
  for (const auto& p : r.plans) plans.push_back(PosesJson(p));
  nlohmann::json j{{"policy", r.policy},
                   {"seed", r.seed},
                   {"dt", r.dt},
                   {"start_step", r.start_step},
                   {"truncated", r.truncated},
                   {"reason", r.reason},
                   {"executed", PosesJson(r.executed)},
                   {"plans", plans},
                   {"observation_digests", r.observation_digests}};
  return j.dump() + "\n";
}

std::string TrajectoryCsv(const std::vector<Pose2>& poses, double dt) {
  std::ostringstream out;
  out.precision(17);
  out << "step,time,x,y,heading\n";
  for (size_t i = 0; i < poses.size(); ++i) {
    out << i << ',' << i * dt << ',' << poses[i].x << ',' << poses[i].y << ','
        << poses[i].heading << '\n';
  }
  return out.str();
}

}  // namespace ccil
