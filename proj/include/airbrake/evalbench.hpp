#pragma once

// Test-set evaluation of a trained network against oracle labels, and the
// cost comparison between network inference and RK4 apogee prediction.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "airbrake/dataset.hpp"
#include "airbrake/errors.hpp"
#include "airbrake/flight.hpp"
#include "airbrake/metrics.hpp"
#include "airbrake/model_io.hpp"
#include "airbrake/neuralnet.hpp"

namespace airbrake {

struct EvalReport {
  ConfusionMatrix confusion;
  ClassificationMetrics metrics;
  std::size_t n_samples = 0;
  double class_ratio = 0.0;       // fraction of reference labels that are Open
  double oracle_agreement = 0.0;  // fraction of predictions equal to the label
  std::string dataset_fingerprint;
  std::string model_fingerprint;
};

inline std::string dataset_fingerprint(std::span<const Sample> samples) {
  io::Fnv1a h;
  for (const auto& s : samples) {
    for (double x : s.features) h.update_value(x);
    h.update_value(static_cast<std::int32_t>(s.label));
  }
  return h.hex();
}

/// Scores arbitrary predictions against reference labels.
inline EvalReport evaluate_predictions(std::span<const int> predictions,
                                       std::span<const Sample> reference) {
  if (reference.empty()) throw EmptyDatasetError("evaluation split is empty");
  const std::vector<int> labels = labels_of(reference);
  EvalReport r;
  r.confusion = confusion(predictions, labels);
  r.metrics = f1_accuracy(r.confusion);
  r.n_samples = reference.size();
  r.class_ratio = open_fraction(
      std::vector<Sample>(reference.begin(), reference.end()));
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) ++agree;
  }
  r.oracle_agreement =
      static_cast<double>(agree) / static_cast<double>(labels.size());
  r.dataset_fingerprint = dataset_fingerprint(reference);
  return r;
}

/// Evaluates `mlp` on raw (unscaled) samples whose labels came from the
/// oracle.
template <class Scalar>
EvalReport evaluate_model(const Mlp<Scalar>& mlp,
                          std::span<const Sample> test) {
  if (test.empty()) throw EmptyDatasetError("evaluation split is empty");
  const std::vector<Sample> scaled =
      apply_scaler(mlp.scaler, std::vector<Sample>(test.begin(), test.end()));
  const std::vector<int> predictions =
      predict_standardized(mlp, std::span<const Sample>(scaled));
  EvalReport r = evaluate_predictions(predictions, test);
  r.model_fingerprint = model_fingerprint(mlp);
  return r;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["confusion"] = {{"tp", r.confusion.tp},
                    {"fp", r.confusion.fp},
                    {"tn", r.confusion.tn},
                    {"fn", r.confusion.fn}};
  j["precision"] = r.metrics.precision;
  j["recall"] = r.metrics.recall;
  j["f1"] = r.metrics.f1;
  j["accuracy"] = r.metrics.accuracy;
  j["degenerate"] = {{"precision", r.metrics.precision_degenerate},
                     {"recall", r.metrics.recall_degenerate},
                     {"f1", r.metrics.f1_degenerate}};
  j["n_samples"] = r.n_samples;
  j["class_ratio_open"] = r.class_ratio;
  j["oracle_agreement"] = r.oracle_agreement;
  j["dataset_fingerprint"] = r.dataset_fingerprint;
  j["model_fingerprint"] = r.model_fingerprint;
  return j;
}

// ---------------------------------------------------------------------------
// Operation counts and latency

/// Multiply-accumulates for one forward pass: sum of in_dim * out_dim.
inline std::uint64_t count_nn_macs(std::span<const std::size_t> layer_dims) {
  std::uint64_t macs = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    macs += static_cast<std::uint64_t>(layer_dims[l]) * layer_dims[l + 1];
  }
  return macs;
}

template <class Scalar>
std::uint64_t count_nn_macs(const Mlp<Scalar>& mlp) {
  return count_nn_macs(std::span<const std::size_t>(mlp.layer_dims));
}

// Flop estimate for the coast right-hand side: exp counted as one op, plus
// divide, 2 products for rho, 3 for the drag term, abs and 2 adds.
inline constexpr std::uint64_t kCoastRhsFlops = 10;
// Stage offsets (3 x 2 components x 2 ops), the h scaling of 4 stages
// (4 x 2) and the weighted combination (2 components x 7 ops).
inline constexpr std::uint64_t kRk4CombineFlops = 12 + 8 + 14;

struct LatencyStats {
  std::int64_t median_ns = 0;
  std::int64_t p95_ns = 0;
};

struct BenchReport {
  std::vector<std::size_t> layer_dims;
  std::uint64_t nn_macs = 0;
  std::vector<std::uint64_t> steps_per_oracle_call;  // one entry per state
  std::vector<std::uint64_t> rk4_rhs_evals;          // one entry per state
  std::vector<std::uint64_t> rk4_flops_estimate;     // one entry per state
  std::uint64_t rk4_steps_total = 0;
  std::uint64_t rk4_rhs_evals_total = 0;
  double h = 0.0;
  std::size_t n_states = 0;
  std::size_t repetitions = 0;
  LatencyStats nn_latency;
  LatencyStats rk4_latency;
};

namespace detail {

inline LatencyStats latency_stats(std::vector<std::int64_t> ns) {
  LatencyStats s;
  if (ns.empty()) return s;
  std::sort(ns.begin(), ns.end());
  s.median_ns = ns[ns.size() / 2];
  const std::size_t p95 = std::min(
      ns.size() - 1, static_cast<std::size_t>(0.95 * static_cast<double>(ns.size())));
  s.p95_ns = ns[p95];
  return s;
}

}  // namespace detail

/// Counts RK4 work for every state, then times network inference and oracle
/// apogee prediction on the same states. Reports both without judging which
/// is faster. Requires at least 30 repetitions; 10 untimed warm-up calls of
/// each path precede timing.
template <class Scalar>
BenchReport benchmark(const Mlp<Scalar>& mlp, const RocketModel& model,
                      std::span<const FlightState> states, double h,
                      std::size_t repetitions) {
  using Clock = std::chrono::steady_clock;
  if (repetitions < 30) {
    throw PreconditionError("benchmark needs at least 30 repetitions");
  }
  if (states.empty()) throw PreconditionError("benchmark needs states");
  model.validate();

  BenchReport r;
  r.layer_dims = mlp.layer_dims;
  r.nn_macs = count_nn_macs(mlp);
  r.h = h;
  r.n_states = states.size();
  r.repetitions = repetitions;

  const CoastDynamics closed(model, false);
  for (const auto& s : states) {
    std::uint64_t evals = 0;
    const CountingSystem<CoastDynamics> counted{closed, &evals};
    const auto pred = predict_apogee_with(counted, s, h);
    r.steps_per_oracle_call.push_back(pred.steps);
    r.rk4_rhs_evals.push_back(evals);
    r.rk4_flops_estimate.push_back(pred.steps *
                                   (4 * kCoastRhsFlops + kRk4CombineFlops));
    r.rk4_steps_total += pred.steps;
    r.rk4_rhs_evals_total += evals;
  }

  volatile int sink = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& s = states[i % states.size()];
    sink = sink + predict(mlp, features_of(s));
    sink = sink + oracle_label(model, s, h);
  }

  std::vector<std::int64_t> nn_ns;
  std::vector<std::int64_t> rk4_ns;
  nn_ns.reserve(repetitions * states.size());
  rk4_ns.reserve(repetitions * states.size());
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (const auto& s : states) {
      const auto f = features_of(s);
      const auto t0 = Clock::now();
      sink = sink + predict(mlp, f);
      const auto t1 = Clock::now();
      sink = sink + oracle_label(model, s, h);
      const auto t2 = Clock::now();
      nn_ns.push_back(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
      rk4_ns.push_back(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t2 - t1).count());
    }
  }
  (void)sink;
  r.nn_latency = detail::latency_stats(std::move(nn_ns));
  r.rk4_latency = detail::latency_stats(std::move(rk4_ns));
  if (r.nn_latency.median_ns == 0 && r.rk4_latency.median_ns == 0) {
    throw BenchmarkResolutionError("timer resolution too coarse: all medians 0");
  }
  return r;
}

/// Timings are isolated under "nondeterministic" so the remaining fields can
/// be compared byte-for-byte across runs.
inline nlohmann::ordered_json to_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  j["layer_dims"] = r.layer_dims;
  j["nn_macs"] = r.nn_macs;
  j["h"] = r.h;
  j["n_states"] = r.n_states;
  j["repetitions"] = r.repetitions;
  j["rk4_rhs_evals_per_step"] = 4;
  j["steps_per_oracle_call"] = r.steps_per_oracle_call;
  j["rk4_rhs_evals"] = r.rk4_rhs_evals;
  j["rk4_flops_estimate"] = r.rk4_flops_estimate;
  j["rk4_steps_total"] = r.rk4_steps_total;
  j["rk4_rhs_evals_total"] = r.rk4_rhs_evals_total;
  j["nondeterministic"] = {
      {"nn_wall_clock_ns", {{"median", r.nn_latency.median_ns},
                            {"p95", r.nn_latency.p95_ns}}},
      {"rk4_wall_clock_ns", {{"median", r.rk4_latency.median_ns},
                             {"p95", r.rk4_latency.p95_ns}}}};
  return j;
}

}  // namespace airbrake
