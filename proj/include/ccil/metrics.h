#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccil/log_replay.h"
#include "ccil/scenario.h"

namespace ccil {

struct MetricThresholds {
  double off_road = 2.0;    // meters of lateral deviation
  double discomfort = 3.0;  // m/s^2
  double off_route = 2.0;   // toy: meters of radial deviation

  bool operator==(const MetricThresholds&) const = default;
};

struct SceneMetrics {
  std::string name;
  bool collided = false;
  bool off_road = false;
  double discomfort_rate = 0.0;
  double l2_error = 0.0;
  std::optional<double> max_radial_deviation;
};

// Any step at which the ego box overlaps an agent box (touching counts).
bool Collision(const RolloutRecord& rollout, const ScenarioLog& log);

// Largest distance from an executed position to the ground-truth path.
double MaxLateralDeviation(const RolloutRecord& rollout, const ScenarioLog& log);
bool OffRoad(const RolloutRecord& rollout, const ScenarioLog& log,
             double threshold = 2.0);

// Fraction of steps whose acceleration magnitude is strictly above the
// threshold.
double DiscomfortFromAccelerations(std::span<const double> magnitudes,
                                   double threshold = 3.0);
// Uses finite-difference accelerations of the positions; needs >= 3 poses.
double Discomfort(const Trajectory& traj, double threshold = 3.0);

// Mean position error over the common prefix of the two tracks.
double L2Error(const RolloutRecord& rollout, const ScenarioLog& log);
double L2Error(std::span<const Pose2> a, std::span<const Pose2> b);

double MaxRadialDeviation(std::span<const Pose2> poses, double radius);

SceneMetrics ComputeSceneMetrics(const RolloutRecord& rollout,
                                 const ScenarioLog& log,
                                 const MetricThresholds& thresholds = {});

struct DatasetReport {
  int scenes = 0;
  double collision_rate = 0.0;  // fractions in [0, 1]
  double off_road_rate = 0.0;
  double discomfort_rate = 0.0;
  double mean_l2 = 0.0;
};

// Throws on an empty collection.
DatasetReport Aggregate(std::span<const SceneMetrics> scenes);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

MeanStd SampleMeanStd(std::span<const double> values);

struct SeedReport {
  MeanStd collision_rate;
  MeanStd off_road_rate;
  MeanStd discomfort_rate;
  MeanStd mean_l2;
  int seeds = 0;
};

SeedReport AggregateSeeds(std::span<const DatasetReport> per_seed);

// CSV with one row per scene and a JSON summary.
std::string SceneMetricsCsv(std::span<const SceneMetrics> scenes);
std::string ReportJson(const DatasetReport& report);
std::string SeedReportJson(const SeedReport& report);

}  // namespace ccil
