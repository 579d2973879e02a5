#pragma once

// End-to-end stages shared by the command-line tool and the acceptance
// suite: generate -> (split, scale, oversample) -> train -> evaluate.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "airbrake/config.hpp"
#include "airbrake/dataset.hpp"
#include "airbrake/evalbench.hpp"
#include "airbrake/flight.hpp"
#include "airbrake/model_io.hpp"
#include "airbrake/neuralnet.hpp"

namespace airbrake {

struct GeneratedData {
  std::vector<Sample> samples;
  std::size_t trajectory_steps = 0;  // total states over all flights
};

inline std::vector<Trajectory> simulate_batch(const RunConfig& cfg) {
  const auto& sim = cfg.sim;
  if (sim.generation_controller == "always-closed") {
    return generate_flight_batch(cfg.rocket, sim.n_flights, sim.ranges, sim.h,
                                 AlwaysClosedController{}, cfg.seed,
                                 cfg.threads);
  }
  return generate_flight_batch(cfg.rocket, sim.n_flights, sim.ranges, sim.h,
                               OracleController{cfg.rocket, sim.oracle_h},
                               cfg.seed, cfg.threads);
}

inline GeneratedData generate_dataset(const RunConfig& cfg) {
  cfg.validate();
  const auto flights = simulate_batch(cfg);
  GeneratedData out;
  for (const auto& f : flights) out.trajectory_steps += f.samples.size();
  out.samples = extract_samples(flights, cfg.rocket, cfg.sim.oracle_h,
                                cfg.sim.sample_stride);
  return out;
}

/// Splits raw samples, fits the scaler on the training split only, scales
/// every split and oversamples the scaled training split.
struct PreparedData {
  SplitDataset raw;     // unscaled, as split
  SplitDataset scaled;  // standardized; train possibly SMOTE-balanced
  Scaler scaler;
};

inline PreparedData prepare_data(const std::vector<Sample>& samples,
                                 const RunConfig& cfg) {
  PreparedData p;
  p.raw = split_dataset(samples, cfg.seed);
  p.scaler = fit_scaler(p.raw.train);
  p.scaled.seed = p.raw.seed;
  p.scaled.train = apply_scaler(p.scaler, p.raw.train);
  p.scaled.validation = apply_scaler(p.scaler, p.raw.validation);
  p.scaled.test = apply_scaler(p.scaler, p.raw.test);
  if (cfg.pipeline.use_smote) {
    p.scaled.train =
        smote_oversample(p.scaled.train, cfg.pipeline.smote_k, cfg.seed);
  }
  return p;
}

inline TrainConfig effective_train_config(const RunConfig& cfg) {
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.class_weights = cfg.effective_class_weights();
  return tc;
}

inline Mlp<double> initial_model(const RunConfig& cfg, const Scaler& scaler) {
  Mlp<double> mlp = init_mlp<double>(cfg.seed);
  mlp.scaler = scaler;
  return mlp;
}

inline ModelMeta model_meta(const RunConfig& cfg) {
  ModelMeta meta;
  meta.train_config_echo = to_json(effective_train_config(cfg));
  meta.train_config_echo["use_smote"] = cfg.pipeline.use_smote;
  meta.train_config_echo["smote_k"] = cfg.pipeline.smote_k;
  meta.seed = cfg.seed;
  return meta;
}

struct TrainedPipeline {
  PreparedData data;
  TrainResult<double> result;
};

inline TrainedPipeline train_pipeline(
    const std::vector<Sample>& samples, const RunConfig& cfg,
    const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  TrainedPipeline out;
  out.data = prepare_data(samples, cfg);
  out.result = train(initial_model(cfg, out.data.scaler), out.data.scaled,
                     effective_train_config(cfg), on_epoch);
  return out;
}

/// Evaluation report for the test split that `seed` reproduces from the
/// full dataset.
inline EvalReport evaluate_on_test_split(const Mlp<double>& mlp,
                                         const std::vector<Sample>& samples,
                                         const RunConfig& cfg) {
  const SplitDataset split = split_dataset(samples, cfg.seed);
  return evaluate_model(mlp, std::span<const Sample>(split.test));
}

/// The evaluation JSON document, including the class weighting used in
/// training so readers can see when it favours the majority class.
inline nlohmann::ordered_json eval_document(const EvalReport& report,
                                            const ModelMeta& meta,
                                            const RunConfig& cfg) {
  nlohmann::ordered_json j = to_json(report);
  j["split"] = "test";
  j["seed"] = cfg.seed;
  const auto& tc = meta.train_config_echo;
  if (tc.contains("class_weight_closed") && tc.contains("class_weight_open")) {
    const double wc = tc["class_weight_closed"].get<double>();
    const double wo = tc["class_weight_open"].get<double>();
    j["training_class_weights"] = {{"closed", wc},
                                   {"open", wo},
                                   {"majority_upweighted", wc > wo}};
  }
  j["config"] = to_json(cfg);
  return j;
}

/// Ascending states sampled evenly from a flight at the configured burnout
/// state; used as benchmark inputs.
inline std::vector<FlightState> benchmark_states(const RunConfig& cfg,
                                                 std::size_t count) {
  const Trajectory traj = simulate_flight(cfg.rocket, cfg.initial_state(),
                                          cfg.sim.h, AlwaysClosedController{},
                                          cfg.seed);
  std::vector<FlightState> ascending;
  for (const auto& s : traj.samples) {
    if (s.v_vertical > 0.0) ascending.push_back(s);
  }
  std::vector<FlightState> out;
  const std::size_t n = std::min(count, ascending.size());
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(ascending[i * ascending.size() / n]);
  }
  return out;
}

}  // namespace airbrake
