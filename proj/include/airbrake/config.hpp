#pragma once

// Run configuration: JSON file with defaults for every field. Unknown keys
// and out-of-range values are rejected with the dotted field path.

#include <cmath>
#include <cstdint>
#include <string>

#include "json.hpp"

#include "airbrake/errors.hpp"
#include "airbrake/flight.hpp"
#include "airbrake/io.hpp"
#include "airbrake/model_io.hpp"
#include "airbrake/neuralnet.hpp"

namespace airbrake {

struct SimConfig {
  double h = 0.01;         // closed-loop step, s
  double oracle_h = 0.01;  // apogee prediction step, s
  std::size_t n_flights = 50;
  InitialRanges ranges;
  // Keep every n-th ascending step as a dataset sample (telemetry rate).
  std::size_t sample_stride = 20;
  std::string generation_controller = "oracle";  // or "always-closed"
  // Burnout state used by `simulate` and `benchmark`.
  double initial_altitude = 1200.0;
  double initial_velocity = 280.0;
};

struct PipelineOptions {
  bool use_smote = true;
  std::size_t smote_k = 5;
  bool use_class_weights = true;
};

struct Paths {
  std::string dataset = "dataset.csv";
  std::string model = "model.json";
  std::string reports = ".";
};

struct RunConfig {
  RocketModel rocket;
  SimConfig sim;
  TrainConfig train;
  PipelineOptions pipeline;
  Paths paths;
  std::uint64_t seed = 42;
  unsigned threads = 1;

  void validate() const {
    rocket.validate("rocket");
    auto require = [](bool ok, const char* field, const char* rule) {
      if (!ok) throw ValidationError(field, rule);
    };
    require(std::isfinite(sim.h) && sim.h > 0, "sim.h", "must be > 0");
    require(std::isfinite(sim.oracle_h) && sim.oracle_h > 0, "sim.oracle_h",
            "must be > 0");
    require(sim.n_flights >= 1, "sim.n_flights", "must be >= 1");
    require(sim.ranges.altitude_min >= 0, "sim.altitude_min", "must be >= 0");
    require(sim.ranges.altitude_min <= sim.ranges.altitude_max,
            "sim.altitude_max", "must be >= sim.altitude_min");
    require(sim.ranges.velocity_min > 0, "sim.velocity_min", "must be > 0");
    require(sim.ranges.velocity_min <= sim.ranges.velocity_max,
            "sim.velocity_max", "must be >= sim.velocity_min");
    require(sim.sample_stride >= 1, "sim.sample_stride", "must be >= 1");
    require(sim.generation_controller == "oracle" ||
                sim.generation_controller == "always-closed",
            "sim.generation_controller", "must be oracle or always-closed");
    require(sim.initial_altitude >= 0, "sim.initial_altitude", "must be >= 0");
    require(sim.initial_velocity > 0, "sim.initial_velocity", "must be > 0");
    train.validate("train");
    require(pipeline.smote_k >= 1, "pipeline.smote_k", "must be >= 1");
    require(threads >= 1, "threads", "must be >= 1");
  }

  /// Training weights after applying pipeline.use_class_weights.
  ClassWeights effective_class_weights() const {
    return pipeline.use_class_weights ? train.class_weights
                                      : ClassWeights{1.0, 1.0};
  }

  FlightState initial_state() const {
    FlightState s;
    s.altitude = sim.initial_altitude;
    s.v_vertical = sim.initial_velocity;
    return s;
  }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& section, std::string prefix)
      : section_(section), prefix_(std::move(prefix)) {
    if (!section_.is_object()) {
      throw ValidationError(prefix_.empty() ? "config" : prefix_,
                            "expected a JSON object");
    }
  }

  void number(const char* key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw ValidationError(path(key), "expected a number");
      out = v->get<double>();
    }
  }
  template <class Int>
  void integer(const char* key, Int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) {
        throw ValidationError(path(key), "expected a non-negative integer");
      }
      out = static_cast<Int>(v->get<unsigned long long>());
    }
  }
  void boolean(const char* key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) throw ValidationError(path(key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void string(const char* key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ValidationError(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  const nlohmann::json* object(const char* key) {
    const auto* v = find(key);
    if (v != nullptr && !v->is_object()) {
      throw ValidationError(path(key), "expected a JSON object");
    }
    return v;
  }

  /// Call after all reads; any key not consumed is an error.
  void reject_unknown() const {
    for (const auto& [key, _] : section_.items()) {
      bool known = false;
      for (const auto& k : seen_) known = known || k == key;
      if (!known) throw ValidationError(path(key.c_str()), "unknown key");
    }
  }

 private:
  const nlohmann::json* find(const char* key) {
    seen_.emplace_back(key);
    const auto it = section_.find(key);
    return it == section_.end() ? nullptr : &*it;
  }
  std::string path(const char* key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  const nlohmann::json& section_;
  std::string prefix_;
  std::vector<std::string> seen_;
};

}  // namespace detail

/// Builds a RunConfig from a JSON document, starting from defaults. The
/// top-level seed also seeds training.
inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  detail::ConfigReader top(j, "");
  top.integer("seed", cfg.seed);
  top.integer("threads", cfg.threads);

  if (const auto* r = top.object("rocket")) {
    detail::ConfigReader rd(*r, "rocket");
    auto& m = cfg.rocket;
    rd.number("dry_mass", m.dry_mass);
    rd.number("cd_clean", m.cd_clean);
    rd.number("cd_airbrake_delta", m.cd_airbrake_delta);
    rd.number("ref_area", m.ref_area);
    rd.number("airbrake_area", m.airbrake_area);
    rd.number("rho0", m.rho0);
    rd.number("scale_height", m.scale_height);
    rd.number("g", m.g);
    rd.number("target_apogee", m.target_apogee);
    rd.number("deadband", m.deadband);
    rd.number("lateral_accel_sigma", m.lateral_accel_sigma);
    rd.reject_unknown();
  }
  if (const auto* s = top.object("sim")) {
    detail::ConfigReader rd(*s, "sim");
    auto& sim = cfg.sim;
    rd.number("h", sim.h);
    rd.number("oracle_h", sim.oracle_h);
    rd.integer("n_flights", sim.n_flights);
    rd.number("altitude_min", sim.ranges.altitude_min);
    rd.number("altitude_max", sim.ranges.altitude_max);
    rd.number("velocity_min", sim.ranges.velocity_min);
    rd.number("velocity_max", sim.ranges.velocity_max);
    rd.integer("sample_stride", sim.sample_stride);
    rd.string("generation_controller", sim.generation_controller);
    rd.number("initial_altitude", sim.initial_altitude);
    rd.number("initial_velocity", sim.initial_velocity);
    rd.reject_unknown();
  }
  if (const auto* t = top.object("train")) {
    detail::ConfigReader rd(*t, "train");
    auto& tr = cfg.train;
    rd.integer("epochs", tr.epochs);
    rd.integer("batch_size", tr.batch_size);
    rd.number("learning_rate", tr.learning_rate);
    rd.number("beta1", tr.beta1);
    rd.number("beta2", tr.beta2);
    rd.number("epsilon", tr.epsilon);
    rd.number("class_weight_closed", tr.class_weights.closed);
    rd.number("class_weight_open", tr.class_weights.open);
    rd.boolean("shuffle_each_epoch", tr.shuffle_each_epoch);
    rd.reject_unknown();
  }
  if (const auto* p = top.object("pipeline")) {
    detail::ConfigReader rd(*p, "pipeline");
    rd.boolean("use_smote", cfg.pipeline.use_smote);
    rd.integer("smote_k", cfg.pipeline.smote_k);
    rd.boolean("use_class_weights", cfg.pipeline.use_class_weights);
    rd.reject_unknown();
  }
  if (const auto* p = top.object("paths")) {
    detail::ConfigReader rd(*p, "paths");
    rd.string("dataset", cfg.paths.dataset);
    rd.string("model", cfg.paths.model);
    rd.string("reports", cfg.paths.reports);
    rd.reject_unknown();
  }
  top.reject_unknown();
  cfg.train.seed = cfg.seed;
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  const std::string text = io::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::ordered_json to_json(const RocketModel& m) {
  return {{"dry_mass", m.dry_mass},
          {"cd_clean", m.cd_clean},
          {"cd_airbrake_delta", m.cd_airbrake_delta},
          {"ref_area", m.ref_area},
          {"airbrake_area", m.airbrake_area},
          {"rho0", m.rho0},
          {"scale_height", m.scale_height},
          {"g", m.g},
          {"target_apogee", m.target_apogee},
          {"deadband", m.deadband},
          {"lateral_accel_sigma", m.lateral_accel_sigma}};
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["rocket"] = to_json(c.rocket);
  j["sim"] = {{"h", c.sim.h},
              {"oracle_h", c.sim.oracle_h},
              {"n_flights", c.sim.n_flights},
              {"altitude_min", c.sim.ranges.altitude_min},
              {"altitude_max", c.sim.ranges.altitude_max},
              {"velocity_min", c.sim.ranges.velocity_min},
              {"velocity_max", c.sim.ranges.velocity_max},
              {"sample_stride", c.sim.sample_stride},
              {"generation_controller", c.sim.generation_controller},
              {"initial_altitude", c.sim.initial_altitude},
              {"initial_velocity", c.sim.initial_velocity}};
  nlohmann::ordered_json train = to_json(c.train);
  train.erase("seed");
  j["train"] = train;
  j["pipeline"] = {{"use_smote", c.pipeline.use_smote},
                   {"smote_k", c.pipeline.smote_k},
                   {"use_class_weights", c.pipeline.use_class_weights}};
  j["paths"] = {{"dataset", c.paths.dataset},
                {"model", c.paths.model},
                {"reports", c.paths.reports}};
  return j;
}

}  // namespace airbrake
