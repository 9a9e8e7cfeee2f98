#include "ccil/config.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ccil {

using nlohmann::json;

namespace {

// Reads known keys of one section and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw std::invalid_argument(name_ + " must be an object");
  }
  void Done() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) {
        throw std::invalid_argument("unknown key '" + k + "' in " + name_);
      }
    }
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(name_ + "." + key + ": " + e.what());
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

toy::ToyConfig ExperimentConfig::ToyWithNetwork() const {
  toy::ToyConfig t = toy;
  t.hidden = network.toy_hidden;
  t.layers = network.toy_layers;
  return t;
}

void ExperimentConfig::Validate() const {
  frame.Validate();
  network.Validate();
  optimizer.adam.Validate();
  ToyWithNetwork().Validate();
  if (optimizer.batch_size < 1 || optimizer.steps < 0) {
    throw std::invalid_argument("optimizer batch_size >= 1 and steps >= 0 required");
  }
  if (!(optimizer.loss.auxiliary >= 0.0) || !(optimizer.loss.regularization >= 0.0)) {
    throw std::invalid_argument("loss weights must be >= 0");
  }
  if (lqr.angular_velocity < 0 || lqr.angular_acceleration < 0 ||
      lqr.acceleration < 0 || lqr.jerk < 0) {
    throw std::invalid_argument("lqr weights must be >= 0");
  }
  if (dataset.scenes < 1 || !(dataset.duration > 0) || !(dataset.frequency > 0)) {
    throw std::invalid_argument("dataset sizes must be positive");
  }
  ParseSyntheticMapKind(dataset.map_kind);
  if (!(metrics.off_road > 0) || !(metrics.discomfort > 0) || !(metrics.off_route > 0)) {
    throw std::invalid_argument("metric thresholds must be positive");
  }
  if (seeds.empty()) throw std::invalid_argument("seeds must be non-empty");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (observation.max_vectors_per_polyline < 1 || observation.max_agents < 0 ||
      observation.agent_history < 1 || !(observation.coordinate_scale > 0) ||
      !(observation.distance_scale > 0)) {
    throw std::invalid_argument("observation settings out of range");
  }
}

ExperimentConfig ParseConfig(const json& j) {
  ExperimentConfig c;
  {
    Section root(j, "config");
    if (const json* s = root.Child("frame")) {
      Section f(*s, "frame");
      std::string kind = ToString(c.frame.kind);
      f.Get("kind", kind);
      c.frame.kind = ParseFrameKind(kind);
      f.Get("perturb_std", c.frame.perturb_std);
      f.Get("seed", c.frame.seed);
      f.Done();
    }
    if (const json* s = root.Child("network")) {
      Section n(*s, "network");
      auto& v = c.network;
      n.Get("hidden_size", v.hidden_size);
      n.Get("heads", v.heads);
      n.Get("dropout_rate", v.dropout_rate);
      n.Get("local_layers", v.local_layers);
      n.Get("global_layers", v.global_layers);
      n.Get("causal_layers", v.causal_layers);
      n.Get("history", v.history);
      n.Get("interval", v.interval);
      n.Get("future", v.future);
      n.Get("toy_hidden", v.toy_hidden);
      n.Get("toy_layers", v.toy_layers);
      n.Done();
    }
    if (const json* s = root.Child("observation")) {
      Section o(*s, "observation");
      auto& v = c.observation;
      o.Get("polyline_radius", v.limits.polyline_radius);
      o.Get("max_polylines", v.limits.max_polylines);
      o.Get("polygon_radius", v.limits.polygon_radius);
      o.Get("max_polygons", v.limits.max_polygons);
      o.Get("max_vectors_per_polyline", v.max_vectors_per_polyline);
      o.Get("agent_radius", v.agent_radius);
      o.Get("max_agents", v.max_agents);
      o.Get("agent_history", v.agent_history);
      o.Get("coordinate_scale", v.coordinate_scale);
      o.Get("distance_scale", v.distance_scale);
      o.Done();
    }
    if (const json* s = root.Child("optimizer")) {
      Section o(*s, "optimizer");
      auto& v = c.optimizer;
      o.Get("learning_rate", v.adam.learning_rate);
      o.Get("beta1", v.adam.beta1);
      o.Get("beta2", v.adam.beta2);
      o.Get("epsilon", v.adam.epsilon);
      o.Get("warmup_steps", v.adam.warmup_steps);
      o.Get("batch_size", v.batch_size);
      o.Get("steps", v.steps);
      o.Get("auxiliary_weight", v.loss.auxiliary);
      o.Get("regularization", v.loss.regularization);
      o.Done();
    }
    if (const json* s = root.Child("toy")) {
      Section t(*s, "toy");
      auto& v = c.toy;
      t.Get("history", v.history);
      t.Get("lane_points", v.lane_points);
      t.Get("lane_spacing", v.lane_spacing);
      t.Get("perturb_std", v.perturb_std);
      t.Get("jitter", v.jitter);
      t.Get("blend_steps", v.blend_steps);
      t.Get("perturb_horizon", v.perturb_horizon);
      t.Get("scenes", v.scenes);
      t.Get("scene_steps", v.scene_steps);
      t.Get("batch_size", v.batch_size);
      t.Get("train_steps", v.train_steps);
      t.Get("learning_rate", v.learning_rate);
      t.Get("regularization", v.regularization);
      t.Get("eval_radius", v.eval_radius);
      t.Get("eval_steps", v.eval_steps);
      t.Get("off_route_threshold", v.off_route_threshold);
      t.Done();
    }
    if (const json* s = root.Child("lqr")) {
      Section l(*s, "lqr");
      l.Get("angular_velocity", c.lqr.angular_velocity);
      l.Get("angular_acceleration", c.lqr.angular_acceleration);
      l.Get("acceleration", c.lqr.acceleration);
      l.Get("jerk", c.lqr.jerk);
      l.Done();
    }
    if (const json* s = root.Child("dataset")) {
      Section d(*s, "dataset");
      d.Get("map_kind", c.dataset.map_kind);
      d.Get("map_path", c.dataset.map_path);
      d.Get("scenarios_path", c.dataset.scenarios_path);
      d.Get("scenes", c.dataset.scenes);
      d.Get("duration", c.dataset.duration);
      d.Get("frequency", c.dataset.frequency);
      d.Done();
    }
    if (const json* s = root.Child("metrics")) {
      Section m(*s, "metrics");
      m.Get("off_road", c.metrics.off_road);
      m.Get("discomfort", c.metrics.discomfort);
      m.Get("off_route", c.metrics.off_route);
      m.Done();
    }
    root.Get("seeds", c.seeds);
    root.Get("jobs", c.jobs);
    root.Done();
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return ParseConfig(j);
}

json ConfigToJson(const ExperimentConfig& c) {
  const auto& n = c.network;
  const auto& o = c.observation;
  const auto& t = c.toy;
  return json{
      {"frame",
       {{"kind", ToString(c.frame.kind)},
        {"perturb_std", c.frame.perturb_std},
        {"seed", c.frame.seed}}},
      {"network",
       {{"hidden_size", n.hidden_size},
        {"heads", n.heads},
        {"dropout_rate", n.dropout_rate},
        {"local_layers", n.local_layers},
        {"global_layers", n.global_layers},
        {"causal_layers", n.causal_layers},
        {"history", n.history},
        {"interval", n.interval},
        {"future", n.future},
        {"toy_hidden", n.toy_hidden},
        {"toy_layers", n.toy_layers}}},
      {"observation",
       {{"polyline_radius", o.limits.polyline_radius},
        {"max_polylines", o.limits.max_polylines},
        {"polygon_radius", o.limits.polygon_radius},
        {"max_polygons", o.limits.max_polygons},
        {"max_vectors_per_polyline", o.max_vectors_per_polyline},
        {"agent_radius", o.agent_radius},
        {"max_agents", o.max_agents},
        {"agent_history", o.agent_history},
        {"coordinate_scale", o.coordinate_scale},
        {"distance_scale", o.distance_scale}}},
      {"optimizer",
       {{"learning_rate", c.optimizer.adam.learning_rate},
        {"beta1", c.optimizer.adam.beta1},
        {"beta2", c.optimizer.adam.beta2},
        {"epsilon", c.optimizer.adam.epsilon},
        {"warmup_steps", c.optimizer.adam.warmup_steps},
        {"batch_size", c.optimizer.batch_size},
        {"steps", c.optimizer.steps},
        {"auxiliary_weight", c.optimizer.loss.auxiliary},
        {"regularization", c.optimizer.loss.regularization}}},
      {"toy",
       {{"history", t.history},
        {"lane_points", t.lane_points},
        {"lane_spacing", t.lane_spacing},
        {"perturb_std", t.perturb_std},
        {"jitter", t.jitter},
        {"blend_steps", t.blend_steps},
        {"perturb_horizon", t.perturb_horizon},
        {"scenes", t.scenes},
        {"scene_steps", t.scene_steps},
        {"batch_size", t.batch_size},
        {"train_steps", t.train_steps},
        {"learning_rate", t.learning_rate},
        {"regularization", t.regularization},
        {"eval_radius", t.eval_radius},
        {"eval_steps", t.eval_steps},
        {"off_route_threshold", t.off_route_threshold}}},
      {"lqr",
       {{"angular_velocity", c.lqr.angular_velocity},
        {"angular_acceleration", c.lqr.angular_acceleration},
        {"acceleration", c.lqr.acceleration},
        {"jerk", c.lqr.jerk}}},
      {"dataset",
       {{"map_kind", c.dataset.map_kind},
        {"map_path", c.dataset.map_path},
        {"scenarios_path", c.dataset.scenarios_path},
        {"scenes", c.dataset.scenes},
        {"duration", c.dataset.duration},
        {"frequency", c.dataset.frequency}}},
      {"metrics",
       {{"off_road", c.metrics.off_road},
        {"discomfort", c.metrics.discomfort},
        {"off_route", c.metrics.off_route}}},
      {"seeds", c.seeds},
      {"jobs", c.jobs}};
}

uint64_t Fnv1a(const std::string& text) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string HexDigest(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ccil
