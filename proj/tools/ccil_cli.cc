// Command-line front end: dataset and map generation, training, log replay,
// metric aggregation, stability certificates and LQR demos.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccil/config.h"
#include "ccil/learner/checkpoint.h"
#include "ccil/log_replay.h"
#include "ccil/lqr.h"
#include "ccil/metrics.h"
#include "ccil/scenario.h"
#include "ccil/stability.h"
#include "ccil/svg.h"
#include "ccil/training.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ccil {
namespace {

constexpr const char* kVersion = "0.3.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

void RequireFile(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what);
  if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path);
}

void WriteManifest(const fs::path& dir, const std::string& command,
                   const ExperimentConfig& cfg, const std::vector<uint64_t>& seeds,
                   json extra = json::object()) {
  const std::string canonical = ConfigToJson(cfg).dump();
  json m{{"command", command},
         {"version", kVersion},
         {"config_hash", HexDigest(Fnv1a(canonical))},
         {"config", json::parse(canonical)},
         {"seeds", seeds}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  WriteFile(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<uint64_t> SeedRange(int n) {
  std::vector<uint64_t> s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<uint64_t>(i));
  return s;
}

// ---------------------------------------------------------------- toy

struct ToyArgs {
  int seeds = 0;
  int steps = -1;
  int jobs = 0;
  int data_seed = 0;
  std::string out = "toy_out";
  std::vector<std::string> methods{"bc", "bc_perturb", "ccil"};
  bool save_models = false;
};

int RunToy(const ExperimentConfig& base, const ToyArgs& args) {
  ExperimentConfig cfg = base;
  if (args.seeds > 0) cfg.seeds = SeedRange(args.seeds);
  if (args.steps >= 0) cfg.toy.train_steps = args.steps;
  if (args.jobs > 0) cfg.jobs = args.jobs;
  cfg.Validate();
  const toy::ToyConfig tc = cfg.ToyWithNetwork();
  const fs::path out(args.out);
  fs::create_directories(out);

  Rng data_rng(static_cast<uint64_t>(args.data_seed));
  const auto scenes = toy::MakeToyDataset(tc, data_rng);

  std::ostringstream rows;
  rows.precision(17);
  rows << "method,seed,final_loss,max_radial_deviation,off_route,truncated\n";
  json summary = json::object();
  std::ostringstream table;
  table << "method,seeds,off_route_percent\n";
  bool diverged = false;
  std::string divergence;

  for (const auto& name : args.methods) {
    const PolicyKind kind = ParsePolicyKind(name);
    auto runs = TrainToySeeds(kind, tc, scenes, cfg.seeds, cfg.jobs);
    std::vector<std::vector<Pose2>> tracks;
    int off = 0;
    std::ostringstream curves;
    curves << "seed,step,loss\n";
    for (auto& run : runs) {
      for (size_t i = 0; i < run.result.curve_steps.size(); ++i) {
        curves << run.seed << ',' << run.result.curve_steps[i] << ','
               << run.result.curve_loss[i] << '\n';
      }
      if (run.result.diverged) {
        diverged = true;
        divergence = name + " seed " + std::to_string(run.seed) + ": " +
                     run.result.message;
        continue;
      }
      const RolloutRecord ro = RunToyRollout(run.policy, tc.eval_radius,
                                             tc.eval_steps,
                                             Rng(run.seed).Split(3).NextU64());
      const double dev = MaxRadialDeviation(ro.executed, tc.eval_radius);
      const bool off_route = ro.truncated || dev > tc.off_route_threshold;
      off += off_route ? 1 : 0;
      tracks.push_back(ro.executed);
      rows << name << ',' << run.seed << ',' << run.result.final_loss << ',' << dev
           << ',' << (off_route ? 1 : 0) << ',' << (ro.truncated ? 1 : 0) << '\n';
      if (args.save_models) {
        const json meta{{"kind", name}, {"toy", ConfigToJson(cfg).at("toy")},
                        {"toy_hidden", tc.hidden}, {"toy_layers", tc.layers}};
        nn::SaveCheckpoint(
            nn::Capture(meta, run.policy.parameters(), nn::AdamState{}, Rng(run.seed)),
            (out / ("model_" + name + "_" + std::to_string(run.seed) + ".json"))
                .string());
      }
    }
    const double rate = runs.empty() ? 0.0 : static_cast<double>(off) / runs.size();
    summary[name] = {{"seeds", runs.size()},
                     {"off_route", off},
                     {"off_route_rate", rate}};
    table << name << ',' << runs.size() << ',' << 100.0 * rate << '\n';
    WriteFile(out / ("toy_" + name + ".svg"),
              svg::ToyOverlay(tc.eval_radius, tracks,
                              name + ": " + std::to_string(tracks.size()) +
                                  " rollouts, off-route " +
                                  std::to_string(off)));
    WriteFile(out / ("curves_" + name + ".csv"), curves.str());
    std::cout << name << ": off-route " << off << "/" << runs.size() << " ("
              << 100.0 * rate << "%)\n";
  }
  WriteFile(out / "toy_runs.csv", rows.str());
  WriteFile(out / "toy_table.csv", table.str());
  WriteFile(out / "toy_metrics.json", summary.dump(2) + "\n");
  WriteManifest(out, "toy", cfg, cfg.seeds,
                {{"data_seed", args.data_seed}, {"methods", args.methods}});
  if (diverged) throw NumericFailure("training diverged (" + divergence + ")");
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string kind = "ccil";
  bool toy = false;
  std::string scenarios;
  std::string out = "model.json";
  uint64_t seed = 0;
  int64_t steps = -1;
};

json NetworkMeta(const ExperimentConfig& cfg) {
  const json all = ConfigToJson(cfg);
  return json{{"kind", "ccil"},
              {"network", all.at("network")},
              {"observation", all.at("observation")},
              {"frame", all.at("frame")}};
}

std::vector<ScenarioLog> ScenesFor(const ExperimentConfig& cfg,
                                   const std::string& path, uint64_t seed) {
  if (!path.empty()) {
    RequireFile(path, "scenario file");
    return LoadScenarios(path);
  }
  const MapData map = MakeSyntheticMap(ParseSyntheticMapKind(cfg.dataset.map_kind));
  SyntheticSceneOptions opts;
  opts.duration = cfg.dataset.duration;
  opts.frequency = cfg.dataset.frequency;
  std::vector<ScenarioLog> logs;
  Rng rng(seed);
  for (int i = 0; i < cfg.dataset.scenes; ++i) {
    Rng r = rng.Split(i);
    logs.push_back(MakeSyntheticScenario(map, "", opts, r));
  }
  return logs;
}

int RunTrain(const ExperimentConfig& cfg, const TrainArgs& args) {
  const PolicyKind kind = ParsePolicyKind(args.kind);
  const fs::path out(args.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ostringstream curve;
  curve << "step,loss\n";
  TrainResult result;
  if (args.toy) {
    toy::ToyConfig tc = cfg.ToyWithNetwork();
    if (args.steps >= 0) tc.train_steps = static_cast<int>(args.steps);
    Rng data_rng(args.seed);
    const auto scenes = toy::MakeToyDataset(tc, data_rng);
    toy::ToyPolicy policy(kind, tc, Rng(args.seed).Split(1).NextU64());
    result = TrainToyPolicy(policy, scenes, Rng(args.seed).Split(2).NextU64());
    const json meta{{"kind", ToString(kind)}, {"toy", ConfigToJson(cfg).at("toy")},
                    {"toy_hidden", tc.hidden}, {"toy_layers", tc.layers}};
    nn::SaveCheckpoint(nn::Capture(meta, policy.parameters(), nn::AdamState{},
                                   Rng(args.seed)),
                       out.string());
  } else {
    if (kind != PolicyKind::kCcil) {
      throw UsageError("the attention network is context-only; use --toy for bc kinds");
    }
    const auto logs = ScenesFor(cfg, args.scenarios, args.seed);
    std::vector<SceneContext> contexts;
    for (const auto& log : logs) contexts.push_back(SceneContext::Build(log));
    CcilNetwork net(cfg.network, cfg.observation, Rng(args.seed).Split(1).NextU64());
    CcilTrainOptions opts;
    opts.train.steps = args.steps >= 0 ? args.steps : cfg.optimizer.steps;
    opts.train.batch_size = cfg.optimizer.batch_size;
    opts.train.adam = cfg.optimizer.adam;
    opts.train.log_every = 10;
    opts.loss = cfg.optimizer.loss;
    opts.frame = cfg.frame;
    nn::Adam adam(net.parameters(), opts.train.adam);
    result = TrainCcilNetwork(net, contexts, opts, Rng(args.seed).Split(2).NextU64());
    nn::SaveCheckpoint(nn::Capture(NetworkMeta(cfg), net.parameters(), adam.state(),
                                   Rng(args.seed)),
                       out.string());
  }
  for (size_t i = 0; i < result.curve_steps.size(); ++i) {
    curve << result.curve_steps[i] << ',' << result.curve_loss[i] << '\n';
  }
  fs::path curve_path = out;
  curve_path.replace_extension(".curve.csv");
  WriteFile(curve_path, curve.str());
  WriteManifest(out.has_parent_path() ? out.parent_path() : fs::path("."), "train",
                cfg, {args.seed},
                {{"kind", args.kind}, {"toy", args.toy},
                 {"steps_completed", result.steps_completed}});
  std::cout << "trained " << result.steps_completed << " steps, final loss "
            << result.final_loss << "\n";
  if (result.diverged) throw NumericFailure(result.message);
  return 0;
}

// ---------------------------------------------------------------- replay

struct ReplayArgs {
  std::string scenarios;
  std::string checkpoint;
  bool oracle = false;
  double noisy_oracle = -1.0;
  bool no_lqr = false;
  uint64_t seed = 0;
  std::string out = "replay_out";
};

std::unique_ptr<CcilNetwork> LoadNetwork(const std::string& path, FrameSpec& frame) {
  RequireFile(path, "checkpoint");
  const nn::Checkpoint ckpt = nn::LoadCheckpoint(path);
  if (ckpt.config.value("kind", "") != "ccil" || !ckpt.config.contains("network")) {
    throw UsageError("checkpoint is not an attention-network checkpoint");
  }
  json cfg_json{{"network", ckpt.config.at("network")},
                {"observation", ckpt.config.at("observation")},
                {"frame", ckpt.config.at("frame")}};
  const ExperimentConfig cfg = ParseConfig(cfg_json);
  frame = cfg.frame;
  auto net = std::make_unique<CcilNetwork>(cfg.network, cfg.observation, 0);
  try {
    nn::RestoreParameters(ckpt, net->parameters());
  } catch (const std::runtime_error& e) {
    throw UsageError(std::string("checkpoint/config mismatch: ") + e.what());
  }
  return net;
}

int RunReplay(const ExperimentConfig& cfg, const ReplayArgs& args) {
  RequireFile(args.scenarios, "scenario file");
  const auto logs = LoadScenarios(args.scenarios);
  if (logs.empty()) throw UsageError("scenario file holds no scenes");
  std::unique_ptr<CcilNetwork> net;
  std::unique_ptr<ReplayPolicy> policy;
  FrameSpec frame = cfg.frame;
  if (args.oracle) {
    policy = std::make_unique<OraclePolicy>(cfg.network.future);
  } else if (args.noisy_oracle >= 0.0) {
    policy = std::make_unique<NoisyOraclePolicy>(cfg.network.future,
                                                 args.noisy_oracle,
                                                 0.1 * args.noisy_oracle);
  } else {
    if (args.checkpoint.empty()) {
      throw UsageError("replay needs --checkpoint, --oracle or --noisy-oracle");
    }
    net = LoadNetwork(args.checkpoint, frame);
    policy = std::make_unique<NetworkPolicy>(*net, frame);
  }
  ReplayOptions opts;
  opts.use_lqr = !args.no_lqr;
  opts.weights = cfg.lqr;
  opts.seed = args.seed;
  const fs::path out(args.out);
  fs::create_directories(out);
  std::vector<SceneMetrics> metrics;
  bool truncated = false;
  for (size_t i = 0; i < logs.size(); ++i) {
    const RolloutRecord ro = RunLogReplay(logs[i], *policy, opts);
    truncated = truncated || ro.truncated;
    SceneMetrics m = ComputeSceneMetrics(ro, logs[i], cfg.metrics);
    if (m.name.empty()) m.name = "scene" + std::to_string(i);
    metrics.push_back(m);
    const std::string stem = "scene_" + std::to_string(i);
    WriteFile(out / (stem + "_rollout.json"), RolloutToJson(ro));
    WriteFile(out / (stem + "_trajectory.csv"), TrajectoryCsv(ro.executed, ro.dt));
    WriteFile(out / (stem + ".svg"),
              svg::ReplayPlot(logs[i], ro.executed, stem + " (" + ro.policy +
                                                        (opts.use_lqr ? ", lqr" : "") + ")"));
  }
  const DatasetReport report = Aggregate(metrics);
  WriteFile(out / "scenes.csv", SceneMetricsCsv(metrics));
  WriteFile(out / "report.json", ReportJson(report));
  WriteManifest(out, "replay", cfg, {args.seed},
                {{"policy", policy->name()}, {"lqr", opts.use_lqr},
                 {"scenarios", args.scenarios}});
  std::cout << ReportJson(report);
  if (truncated) throw NumericFailure("at least one rollout was truncated");
  return 0;
}

// ---------------------------------------------------------------- metrics

int RunMetrics(const ExperimentConfig& cfg, const std::vector<std::string>& reports,
               const std::string& out_dir) {
  if (reports.empty()) throw UsageError("metrics needs at least one report");
  std::vector<DatasetReport> per_seed;
  for (const auto& path : reports) {
    const json j = ReadJson(path);
    DatasetReport r;
    r.scenes = j.at("scenes").get<int>();
    r.collision_rate = j.at("collision_rate").get<double>();
    r.off_road_rate = j.at("off_road_rate").get<double>();
    r.discomfort_rate = j.at("discomfort_rate").get<double>();
    r.mean_l2 = j.at("mean_l2").get<double>();
    per_seed.push_back(r);
  }
  const SeedReport s = AggregateSeeds(per_seed);
  const fs::path out(out_dir);
  std::ostringstream csv;
  csv.precision(17);
  csv << "metric,mean,std\n"
      << "collision_percent," << 100 * s.collision_rate.mean << ','
      << 100 * s.collision_rate.std << '\n'
      << "off_road_percent," << 100 * s.off_road_rate.mean << ','
      << 100 * s.off_road_rate.std << '\n'
      << "discomfort_percent," << 100 * s.discomfort_rate.mean << ','
      << 100 * s.discomfort_rate.std << '\n'
      << "mean_l2," << s.mean_l2.mean << ',' << s.mean_l2.std << '\n';
  WriteFile(out / "summary.csv", csv.str());
  WriteFile(out / "summary.json", SeedReportJson(s));
  WriteFile(out / "summary.svg",
            svg::BarChart({"collision %", "off-road %", "discomfort %"},
                          {100 * s.collision_rate.mean, 100 * s.off_road_rate.mean,
                           100 * s.discomfort_rate.mean},
                          "mean over " + std::to_string(s.seeds) + " seeds"));
  WriteManifest(out, "metrics", cfg, cfg.seeds, {{"reports", reports}});
  std::cout << SeedReportJson(s);
  return 0;
}

// ---------------------------------------------------------------- stability

Eigen::MatrixXd MatrixFromJson(const json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw UsageError(std::string(name) + " must be a non-empty array of rows");
  }
  const size_t rows = j.size();
  const size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw UsageError(std::string(name) + " rows must have equal length");
    }
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json MatrixToJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::string BoundKindName(stability::NormBound::Kind k) {
  switch (k) {
    case stability::NormBound::Kind::kFinite: return "finite";
    case stability::NormBound::Kind::kUnconditional: return "unconditional";
    case stability::NormBound::Kind::kVacuous: return "vacuous";
  }
  return "finite";
}

int RunStability(const std::string& input, double witness, int dim,
                 const std::string& out_path) {
  if (input.empty() && witness <= 0.0) {
    throw UsageError("stability needs --input and/or --bc-witness");
  }
  json report = json::object();
  if (!input.empty()) {
    RequireFile(input, "stability input");
    const json j = ReadJson(input);
    stability::LinearSubsystem sys;
    stability::PolicyGain gain;
    try {
      sys.A = MatrixFromJson(j.at("A"), "A");
      sys.B = MatrixFromJson(j.at("B"), "B");
      gain.K = MatrixFromJson(j.at("K"), "K");
      sys.sigma = j.at("sigma").get<double>();
      sys.c = j.at("c").get<double>();
      sys.epsilon = j.at("epsilon").get<double>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("malformed stability input: ") + e.what());
    }
    stability::Certificate cert;
    try {
      cert = stability::CertifyClosedLoop(sys, gain);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    json bound{{"kind", BoundKindName(cert.bound.kind)}};
    if (cert.bound.kind == stability::NormBound::Kind::kFinite) {
      bound["value"] = cert.bound.value;
    }
    report["inputs"] = {{"A", j.at("A")}, {"B", j.at("B")}, {"K", j.at("K")},
                        {"sigma", sys.sigma}, {"c", sys.c}, {"epsilon", sys.epsilon}};
    report["bound"] = bound;
    report["norms"] = {{"A", cert.norm_a}, {"B", cert.norm_b}, {"K", cert.norm_k}};
    report["premises"] = {{"A", cert.a_premise}, {"B", cert.b_premise},
                          {"K", cert.k_premise}};
    report["rho"] = cert.rho;
    report["verdict"] = cert.bound_holds ? "stable" : "uncertified";
  }
  if (witness > 0.0) {
    const auto w = stability::BcInstabilityWitness(witness, dim);
    const Eigen::MatrixXd closed =
        Eigen::MatrixXd::Identity(dim, dim) + w.K;
    const auto growth =
        stability::SimulateBcError(w, Eigen::VectorXd::Ones(dim), 50);
    report["bc_witness"] = {{"budget", witness},
                            {"K_bc", MatrixToJson(w.K)},
                            {"norm_K_bc", stability::InducedNorm2(w.K)},
                            {"rho", stability::SpectralRadius(closed)},
                            {"error_norm_t50", growth.back()}};
  }
  const std::string text = report.dump(2) + "\n";
  if (!out_path.empty()) WriteFile(out_path, text);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- lqr-demo

lqr::LqrProblem DefaultLqrProblem() {
  lqr::LqrProblem p;
  p.dt = 0.1;
  p.initial.velocity = Eigen::Vector3d(5.0, 0.0, 0.0);
  Rng rng(11);
  for (int t = 1; t <= 15; ++t) {
    p.targets.emplace_back(0.5 * t + rng.Normal(0.0, 0.2),
                           rng.Normal(0.0, 0.2), rng.Normal(0.0, 0.05));
  }
  return p;
}

Eigen::Vector3d Vec3(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 3) {
    throw UsageError(std::string(name) + " must be [x, y, heading]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

lqr::LqrProblem ParseLqrProblem(const json& j) {
  lqr::LqrProblem p;
  try {
    p.dt = j.at("dt").get<double>();
    if (j.contains("initial")) {
      const json& i = j.at("initial");
      if (i.contains("pose")) p.initial.pose = Vec3(i.at("pose"), "pose");
      if (i.contains("velocity")) p.initial.velocity = Vec3(i.at("velocity"), "velocity");
      if (i.contains("acceleration")) {
        p.initial.acceleration = Vec3(i.at("acceleration"), "acceleration");
      }
    }
    for (const auto& t : j.at("targets")) {
      const Eigen::Vector3d v = Vec3(t, "target");
      p.targets.emplace_back(v.x(), v.y(), v.z());
    }
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      p.weights.angular_velocity = w.value("angular_velocity", p.weights.angular_velocity);
      p.weights.angular_acceleration =
          w.value("angular_acceleration", p.weights.angular_acceleration);
      p.weights.acceleration = w.value("acceleration", p.weights.acceleration);
      p.weights.jerk = w.value("jerk", p.weights.jerk);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed LQR problem: ") + e.what());
  }
  return p;
}

int RunLqrDemo(const std::string& problem_path, const std::string& out_dir) {
  lqr::LqrProblem problem = DefaultLqrProblem();
  if (!problem_path.empty()) {
    RequireFile(problem_path, "LQR problem");
    problem = ParseLqrProblem(ReadJson(problem_path));
  }
  try {
    problem.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const lqr::SmoothPlan plan = lqr::Solve(problem);
  std::ostringstream csv;
  csv.precision(17);
  csv << "t,x,y,heading,vx,vy,omega,ax,ay,alpha,jx,jy,zeta,target_x,target_y,"
         "target_heading\n";
  for (int t = 0; t < problem.horizon(); ++t) {
    const auto& s = plan.states[t];
    const auto& u = plan.inputs[t];
    const Pose2& p = plan.poses[t];
    const Pose2& r = problem.targets[t];
    csv << t + 1 << ',' << p.x << ',' << p.y << ',' << p.heading << ',' << s(3)
        << ',' << s(4) << ',' << s(5) << ',' << s(6) << ',' << s(7) << ',' << s(8)
        << ',' << u(0) << ',' << u(1) << ',' << u(2) << ',' << r.x << ',' << r.y
        << ',' << r.heading << '\n';
  }
  const fs::path out(out_dir);
  WriteFile(out / "plan.csv", csv.str());
  WriteFile(out / "plan.svg", svg::LqrPlot(problem.targets, plan.poses, "LQR plan vs targets"));
  json summary{{"horizon", problem.horizon()}, {"dt", problem.dt}, {"cost", plan.cost}};
  WriteFile(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------- generators

int RunGenMap(const std::string& kind, double radius, const std::string& out) {
  if (out.empty()) throw UsageError("gen-map needs --out");
  MapData map;
  if (kind == "ring") {
    map = synthetic::RingMap(radius, 1.0);
  } else {
    map = MakeSyntheticMap(ParseSyntheticMapKind(kind));
  }
  SaveMapFile(map, out);
  std::cout << "wrote " << out << " (" << map.polylines.size() << " polylines, "
            << map.polygons.size() << " polygons)\n";
  return 0;
}

struct GenDatasetArgs {
  std::string kind = "ring";
  int scenes = 200;
  int steps = 100;
  uint64_t seed = 0;
  std::string out;
  std::string map_path;
};

int RunGenDataset(const ExperimentConfig& cfg, const GenDatasetArgs& args) {
  if (args.out.empty()) throw UsageError("gen-dataset needs --out");
  if (args.scenes < 1) throw UsageError("--scenes must be >= 1");
  std::vector<ScenarioLog> logs;
  Rng rng(args.seed);
  if (args.kind == "ring") {
    for (int i = 0; i < args.scenes; ++i) {
      Rng r = rng.Split(i);
      const double radius = r.Uniform(kToyMinRadius, kToyMaxRadius);
      logs.push_back(MakeRingScenario(radius, args.steps, r));
      logs.back().name = "ring_" + std::to_string(i);
    }
  } else {
    const MapData map = MakeSyntheticMap(ParseSyntheticMapKind(args.kind));
    std::string ref;
    if (!args.map_path.empty()) {
      SaveMapFile(map, args.map_path);
      const fs::path base = fs::absolute(fs::path(args.out)).parent_path();
      ref = fs::relative(fs::absolute(args.map_path), base).string();
    }
    SyntheticSceneOptions opts;
    opts.duration = cfg.dataset.duration;
    opts.frequency = cfg.dataset.frequency;
    for (int i = 0; i < args.scenes; ++i) {
      Rng r = rng.Split(i);
      logs.push_back(MakeSyntheticScenario(map, ref, opts, r));
      logs.back().name = args.kind + "_" + std::to_string(i);
    }
  }
  const fs::path out(args.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  SaveScenarios(logs, args.out, args.map_path.empty());
  std::cout << "wrote " << logs.size() << " scenes to " << args.out << "\n";
  return 0;
}

}  // namespace
}  // namespace ccil

int main(int argc, char** argv) {
  using namespace ccil;
  CLI::App app{"Context-conditioned imitation learning toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string config_path;
  app.add_option("--config", config_path, "Experiment config JSON (or $CCIL_CONFIG)");

  ToyArgs toy_args;
  auto* toy = app.add_subcommand("toy", "Ring-road covariate shift experiment");
  toy->add_option("--seeds", toy_args.seeds, "Number of seeds (0..N-1)");
  toy->add_option("--steps", toy_args.steps, "Training steps per seed");
  toy->add_option("--jobs", toy_args.jobs, "Parallel training jobs");
  toy->add_option("--data-seed", toy_args.data_seed, "Dataset seed");
  toy->add_option("--out", toy_args.out, "Output directory");
  toy->add_option("--methods", toy_args.methods, "Subset of bc, bc_perturb, ccil");
  toy->add_flag("--save-models", toy_args.save_models, "Write a checkpoint per seed");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a policy and write a checkpoint");
  train->add_option("--kind", train_args.kind, "ccil, bc or bc_perturb");
  train->add_flag("--toy", train_args.toy, "Train the ring-road MLP");
  train->add_option("--scenarios", train_args.scenarios, "Scenario JSONL (default: synthetic)");
  train->add_option("--out", train_args.out, "Checkpoint path");
  train->add_option("--seed", train_args.seed, "Seed");
  train->add_option("--steps", train_args.steps, "Override training steps");

  ReplayArgs replay_args;
  auto* replay = app.add_subcommand("replay", "Closed-loop log replay");
  replay->add_option("--scenarios", replay_args.scenarios, "Scenario JSONL")->required();
  replay->add_option("--checkpoint", replay_args.checkpoint, "Network checkpoint");
  replay->add_flag("--oracle", replay_args.oracle, "Replay the recorded future");
  replay->add_option("--noisy-oracle", replay_args.noisy_oracle,
                     "Recorded future plus Gaussian noise of this std (m)");
  replay->add_flag("--no-lqr", replay_args.no_lqr, "Execute raw predictions");
  replay->add_option("--seed", replay_args.seed, "Seed");
  replay->add_option("--out", replay_args.out, "Output directory");

  std::vector<std::string> metric_reports;
  std::string metrics_out = "metrics_out";
  auto* metrics = app.add_subcommand("metrics", "Aggregate replay reports across seeds");
  metrics->add_option("reports", metric_reports, "report.json files")->required();
  metrics->add_option("--out", metrics_out, "Output directory");

  std::string stab_input;
  std::string stab_out;
  double witness = 0.0;
  int witness_dim = 2;
  auto* stab = app.add_subcommand("stability", "Closed-loop stability certificate");
  stab->add_option("--input", stab_input, "JSON with A, B, K, sigma, c, epsilon");
  stab->add_option("--bc-witness", witness, "Norm budget for the instability witness");
  stab->add_option("--dim", witness_dim, "Witness dimension")->check(CLI::PositiveNumber);
  stab->add_option("--out", stab_out, "Write the report here too");

  std::string lqr_problem;
  std::string lqr_out = "lqr_out";
  auto* lqr_demo = app.add_subcommand("lqr-demo", "Smooth targets with the LQR tracker");
  lqr_demo->add_option("--problem", lqr_problem, "Problem JSON (default: built-in)");
  lqr_demo->add_option("--out", lqr_out, "Output directory");

  std::string map_kind = "intersection";
  double map_radius = 50.0;
  std::string map_out;
  auto* gen_map = app.add_subcommand("gen-map", "Write a synthetic map");
  gen_map->add_option("--kind", map_kind, "ring, corridor or intersection");
  gen_map->add_option("--radius", map_radius, "Ring radius");
  gen_map->add_option("--out", map_out, "Map JSON path");

  GenDatasetArgs ds_args;
  auto* gen_ds = app.add_subcommand("gen-dataset", "Write a scenario JSONL dataset");
  gen_ds->add_option("--kind", ds_args.kind, "ring, corridor or intersection");
  gen_ds->add_option("--scenes", ds_args.scenes, "Scene count");
  gen_ds->add_option("--steps", ds_args.steps, "Ring steps per scene");
  gen_ds->add_option("--seed", ds_args.seed, "Seed");
  gen_ds->add_option("--out", ds_args.out, "Output JSONL");
  gen_ds->add_option("--map-path", ds_args.map_path, "Store the map here and reference it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("CCIL_CONFIG")) config_path = env;
    }
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      RequireFile(config_path, "config");
      try {
        cfg = LoadConfig(config_path);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    if (*toy) return RunToy(cfg, toy_args);
    if (*train) return RunTrain(cfg, train_args);
    if (*replay) return RunReplay(cfg, replay_args);
    if (*metrics) return RunMetrics(cfg, metric_reports, metrics_out);
    if (*stab) return RunStability(stab_input, witness, witness_dim, stab_out);
    if (*lqr_demo) return RunLqrDemo(lqr_problem, lqr_out);
    if (*gen_map) return RunGenMap(map_kind, map_radius, map_out);
    if (*gen_ds) return RunGenDataset(cfg, ds_args);
  } catch (const NumericFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
