#include "ccil/metrics.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ccil {

bool Collision(const RolloutRecord& rollout, const ScenarioLog& log) {
  const size_t n = std::min(rollout.executed.size(), log.size());
  for (size_t t = 0; t < n; ++t) {
    const OrientedBox ego = log.EgoBox(rollout.executed[t]);
    for (const auto& agent : log.agents) {
      if (ObbIntersects(ego, agent.BoxAt(t))) return true;
    }
  }
  return false;
}

double MaxLateralDeviation(const RolloutRecord& rollout, const ScenarioLog& log) {
  std::vector<Vec2> path;
  for (const auto& p : log.ego) path.push_back(p.Position());
  double worst = 0.0;
  for (const auto& p : rollout.executed) {
    worst = std::max(worst, PointToPolylineDistance(p.Position(), path));
  }
  return worst;
}

bool OffRoad(const RolloutRecord& rollout, const ScenarioLog& log,
             double threshold) {
  return MaxLateralDeviation(rollout, log) > threshold;
}

double DiscomfortFromAccelerations(std::span<const double> magnitudes,
                                   double threshold) {
  if (magnitudes.empty()) throw std::invalid_argument("no accelerations");
  size_t count = 0;
  for (double a : magnitudes) count += a > threshold ? 1 : 0;
  return static_cast<double>(count) / magnitudes.size();
}

double Discomfort(const Trajectory& traj, double threshold) {
  if (traj.size() < 3) throw std::invalid_argument("discomfort needs >= 3 poses");
  std::vector<double> mags;
  for (const auto& d : FiniteDifferenceDerivatives(traj)) {
    mags.push_back(d.acceleration.Norm());
  }
  return DiscomfortFromAccelerations(mags, threshold);
}

double L2Error(std::span<const Pose2> a, std::span<const Pose2> b) {
  const size_t n = std::min(a.size(), b.size());
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) sum += Distance(a[i].Position(), b[i].Position());
  return sum / n;
}

double L2Error(const RolloutRecord& rollout, const ScenarioLog& log) {
  return L2Error(rollout.executed, log.ego);
}

double MaxRadialDeviation(std::span<const Pose2> poses, double radius) {
  double worst = 0.0;
  for (const auto& p : poses) {
    worst = std::max(worst, std::abs(p.Position().Norm() - radius));
  }
  return worst;
}

SceneMetrics ComputeSceneMetrics(const RolloutRecord& rollout,
                                 const ScenarioLog& log,
                                 const MetricThresholds& thresholds) {
  SceneMetrics m;
  m.name = log.name;
  m.collided = Collision(rollout, log);
  m.off_road = OffRoad(rollout, log, thresholds.off_road);
  m.discomfort_rate = rollout.executed.size() >= 3
                          ? Discomfort(rollout.ExecutedTrajectory(),
                                       thresholds.discomfort)
                          : 0.0;
  m.l2_error = L2Error(rollout, log);
  return m;
}

DatasetReport Aggregate(std::span<const SceneMetrics> scenes) {
  if (scenes.empty()) throw std::invalid_argument("no scenes to aggregate");
  DatasetReport r;
  r.scenes = static_cast<int>(scenes.size());
  for (const auto& s : scenes) {
    r.collision_rate += s.collided ? 1.0 : 0.0;
    r.off_road_rate += s.off_road ? 1.0 : 0.0;
    r.discomfort_rate += s.discomfort_rate;
    r.mean_l2 += s.l2_error;
  }
  r.collision_rate /= r.scenes;
  r.off_road_rate /= r.scenes;
  r.discomfort_rate /= r.scenes;
  r.mean_l2 /= r.scenes;
  return r;
}

MeanStd SampleMeanStd(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("no values");
  MeanStd m;
  for (double v : values) m.mean += v;
  m.mean /= values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / (values.size() - 1));
  }
  return m;
}

SeedReport AggregateSeeds(std::span<const DatasetReport> per_seed) {
  if (per_seed.empty()) throw std::invalid_argument("no seeds to aggregate");
  auto field = [&](double DatasetReport::*f) {
    std::vector<double> v;
    for (const auto& r : per_seed) v.push_back(r.*f);
    return SampleMeanStd(v);
  };
  SeedReport s;
  s.seeds = static_cast<int>(per_seed.size());
  s.collision_rate = field(&DatasetReport::collision_rate);
  s.off_road_rate = field(&DatasetReport::off_road_rate);
  s.discomfort_rate = field(&DatasetReport::discomfort_rate);
  s.mean_l2 = field(&DatasetReport::mean_l2);
  return s;
}

std::string SceneMetricsCsv(std::span<const SceneMetrics> scenes) {
  std::ostringstream out;
  out.precision(17);
  out << "scene,name,collided,off_road,discomfort_rate,l2_error,max_radial_deviation\n";
  for (size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes[i];
    out << i << ',' << s.name << ',' << (s.collided ? 1 : 0) << ','
        << (s.off_road ? 1 : 0) << ',' << s.discomfort_rate << ',' << s.l2_error
        << ',';
    if (s.max_radial_deviation) out << *s.max_radial_deviation;
    out << '\n';
  }
  return out.str();
}

std::string ReportJson(const DatasetReport& r) {
  nlohmann::json j{{"scenes", r.scenes},
                   {"collision_rate", r.collision_rate},
                   {"off_road_rate", r.off_road_rate},
                   {"discomfort_rate", r.discomfort_rate},
                   {"mean_l2", r.mean_l2}};
  return j.dump(2) + "\n";
}

std::string SeedReportJson(const SeedReport& r) {
  auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
  nlohmann::json j{{"seeds", r.seeds},
                   {"collision_rate", ms(r.collision_rate)},
                   {"off_road_rate", ms(r.off_road_rate)},
                   {"discomfort_rate", ms(r.discomfort_rate)},
                   {"mean_l2", ms(r.mean_l2)}};
  return j.dump(2) + "\n";
}

}  // namespace ccil
