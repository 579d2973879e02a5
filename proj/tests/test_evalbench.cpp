#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "airbrake/evalbench.hpp"
#include "airbrake/metrics.hpp"

namespace airbrake {
namespace {

// Independent tally: counts each cell by scanning for it.
ConfusionMatrix tally(const std::vector<int>& p, const std::vector<int>& y) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < p.size(); ++i) cm.tp += (p[i] == 1 && y[i] == 1);
  for (std::size_t i = 0; i < p.size(); ++i) cm.fp += (p[i] == 1 && y[i] == 0);
  for (std::size_t i = 0; i < p.size(); ++i) cm.tn += (p[i] == 0 && y[i] == 0);
  for (std::size_t i = 0; i < p.size(); ++i) cm.fn += (p[i] == 0 && y[i] == 1);
  return cm;
}

// F1 as 2TP / (2TP + FP + FN), accuracy by expanding the sample list.
struct Brute {
  double f1;
  double accuracy;
};
Brute brute(const ConfusionMatrix& cm) {
  Brute b{};
  const double denom = 2.0 * static_cast<double>(cm.tp) +
                       static_cast<double>(cm.fp + cm.fn);
  b.f1 = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(cm.tp) / denom;
  std::uint64_t correct = 0, total = 0;
  for (std::uint64_t i = 0; i < cm.tp + cm.tn; ++i) ++correct, ++total;
  for (std::uint64_t i = 0; i < cm.fp + cm.fn; ++i) ++total;
  b.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return b;
}

TEST(Confusion, SmallCases) {
  const auto a = confusion(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 1, 0, 0});
  EXPECT_EQ(a, (ConfusionMatrix{2, 0, 2, 0}));
  const auto b = confusion(std::vector<int>{0, 0}, std::vector<int>{1, 0});
  EXPECT_EQ(b.fn, 1U);
  EXPECT_EQ(b.tn, 1U);
  EXPECT_EQ(b.total(), 2U);
}

TEST(Confusion, MatchesIndependentTally) {
  std::mt19937_64 rng(1);
  std::vector<int> p(1000), y(1000);
  for (auto& x : p) x = static_cast<int>(rng() % 2);
  for (auto& x : y) x = static_cast<int>(rng() % 2);
  const auto cm = confusion(p, y);
  EXPECT_EQ(cm, tally(p, y));
  EXPECT_EQ(cm.total(), 1000U);
}

TEST(Confusion, RejectsBadInput) {
  EXPECT_THROW(confusion(std::vector<int>{1}, std::vector<int>{1, 0}),
               PreconditionError);
  EXPECT_THROW(confusion(std::vector<int>{2}, std::vector<int>{1}),
               PreconditionError);
}

TEST(Metrics, FourOneOneFour) {
  const auto m = f1_accuracy(ConfusionMatrix{4, 1, 4, 1});
  EXPECT_NEAR(m.precision, 0.8, 1e-15);
  EXPECT_NEAR(m.recall, 0.8, 1e-15);
  EXPECT_NEAR(m.f1, 0.8, 1e-15);
  EXPECT_NEAR(m.accuracy, 0.8, 1e-15);
}

TEST(Metrics, PerfectAndDegenerate) {
  const auto perfect = f1_accuracy(ConfusionMatrix{3, 0, 5, 0});
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.accuracy, 1.0);

  const auto none = f1_accuracy(ConfusionMatrix{0, 0, 5, 2});
  EXPECT_TRUE(none.precision_degenerate);
  EXPECT_FALSE(none.recall_degenerate);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_TRUE(none.f1_degenerate);

  EXPECT_THROW(f1_accuracy(ConfusionMatrix{}), PreconditionError);
}

TEST(Metrics, AgreeWithBruteForceOnRandomMatrices) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::uint64_t> count(0, 200);
  for (int i = 0; i < 1000; ++i) {
    ConfusionMatrix cm{count(rng), count(rng), count(rng), count(rng)};
    if (cm.total() == 0) cm.tn = 1;
    const auto m = f1_accuracy(cm);
    const auto b = brute(cm);
    EXPECT_NEAR(m.f1, b.f1, 1e-12);
    EXPECT_NEAR(m.accuracy, b.accuracy, 1e-12);
    if (!m.precision_degenerate && !m.recall_degenerate && m.f1 > 0) {
      EXPECT_NEAR(m.f1, 2.0 / (1.0 / m.precision + 1.0 / m.recall), 1e-12);
    }
  }
}

std::vector<Sample> labelled(const std::vector<int>& labels) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.push_back({{static_cast<double>(i), 1, 2, 3, 4}, labels[i]});
  }
  return out;
}

TEST(Evaluate, ReplayedLabelsAreSelfConsistent) {
  const std::vector<int> y = {0, 1, 0, 0, 1, 0, 0, 0};
  const auto r = evaluate_predictions(y, labelled(y));
  EXPECT_EQ(r.metrics.f1, 1.0);
  EXPECT_EQ(r.metrics.accuracy, 1.0);
  EXPECT_EQ(r.oracle_agreement, r.metrics.accuracy);
  EXPECT_EQ(r.n_samples, 8U);
  EXPECT_EQ(r.class_ratio, 0.25);
}

TEST(Evaluate, MajorityConstantPredictor) {
  std::vector<int> y(100, 0);
  for (int i = 0; i < 7; ++i) y[static_cast<std::size_t>(i * 13)] = 1;
  const std::vector<int> p(100, 0);
  const auto r = evaluate_predictions(p, labelled(y));
  EXPECT_NEAR(r.metrics.accuracy, 0.93, 1e-15);
  EXPECT_EQ(r.metrics.f1, 0.0);
  EXPECT_TRUE(r.metrics.precision_degenerate);
}

TEST(Evaluate, AgreementEqualsAccuracy) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> p(50), y(50);
    for (auto& x : p) x = static_cast<int>(rng() % 2);
    for (auto& x : y) x = static_cast<int>(rng() % 2);
    const auto r = evaluate_predictions(p, labelled(y));
    EXPECT_EQ(r.oracle_agreement, r.metrics.accuracy);
  }
}

TEST(Evaluate, ModelReportIsDeterministicAndConsistent) {
  auto mlp = init_mlp<double>(4, {5, 16, 2});
  std::vector<Sample> test = labelled({0, 1, 0, 1, 1, 0, 0, 0, 0, 1});
  const auto a = evaluate_model(mlp, std::span<const Sample>(test));
  const auto b = evaluate_model(mlp, std::span<const Sample>(test));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.confusion.total(), test.size());
  EXPECT_GE(a.metrics.accuracy, 0.0);
  EXPECT_LE(a.metrics.accuracy, 1.0);
  EXPECT_EQ(a.model_fingerprint, model_fingerprint(mlp));
  EXPECT_THROW(evaluate_model(mlp, std::span<const Sample>()), EmptyDatasetError);
}

TEST(Evaluate, JsonFields) {
  const std::vector<int> y = {0, 1};
  const auto j = to_json(evaluate_predictions(std::vector<int>{0, 0}, labelled(y)));
  EXPECT_EQ(j["confusion"]["fn"], 1);
  EXPECT_EQ(j["degenerate"]["precision"], true);
  EXPECT_TRUE(j.contains("dataset_fingerprint"));
}

// ---------------------------------------------------------------------------

TEST(Macs, Architectures) {
  const auto dims = paper_layer_dims();
  EXPECT_EQ(count_nn_macs(std::span<const std::size_t>(dims)), 2'806'440U);
  std::uint64_t by_hand = 5 * 2048 + 2048 * 1024 + 1024 * 512 + 512 * 256 +
                          256 * 128 + 128 * 64 + 64 * 32 + 32 * 16 + 16 * 8 +
                          8 * 4 + 4 * 2;
  EXPECT_EQ(by_hand, 2'806'440U);
  const std::vector<std::size_t> a = {5, 2}, b = {5, 8, 2};
  EXPECT_EQ(count_nn_macs(std::span<const std::size_t>(a)), 10U);
  EXPECT_EQ(count_nn_macs(std::span<const std::size_t>(b)), 56U);
  EXPECT_EQ(count_nn_macs(init_mlp<double>(1, b)), 56U);
}

std::vector<FlightState> ascending_states(std::size_t n) {
  std::vector<FlightState> out;
  for (std::size_t i = 0; i < n; ++i) {
    FlightState s;
    s.altitude = 800.0 + 20.0 * static_cast<double>(i);
    s.v_vertical = 250.0 - 10.0 * static_cast<double>(i);
    out.push_back(s);
  }
  return out;
}

TEST(Benchmark, CountsFollowRk4StageRule) {
  const auto mlp = init_mlp<double>(2, {5, 16, 8, 2});
  const RocketModel model;
  const auto states = ascending_states(6);
  const auto r = benchmark(mlp, model, std::span<const FlightState>(states), 0.01, 30);
  ASSERT_EQ(r.steps_per_oracle_call.size(), states.size());
  std::uint64_t steps = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    EXPECT_EQ(r.rk4_rhs_evals[i], 4 * r.steps_per_oracle_call[i]);
    EXPECT_EQ(r.steps_per_oracle_call[i],
              predict_apogee_detailed(model, states[i], 0.01, false).steps);
    steps += r.steps_per_oracle_call[i];
  }
  EXPECT_EQ(r.rk4_steps_total, steps);
  EXPECT_EQ(r.rk4_rhs_evals_total, 4 * steps);
  EXPECT_EQ(r.nn_macs, 16U * 5 + 8 * 16 + 2 * 8);
}

TEST(Benchmark, HalvingStepDoublesOracleSteps) {
  const auto mlp = init_mlp<double>(2, {5, 4, 2});
  const RocketModel model;
  const auto states = ascending_states(5);
  const auto coarse = benchmark(mlp, model, std::span<const FlightState>(states), 0.02, 30);
  const auto fine = benchmark(mlp, model, std::span<const FlightState>(states), 0.01, 30);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto c = static_cast<std::int64_t>(coarse.steps_per_oracle_call[i]);
    const auto f = static_cast<std::int64_t>(fine.steps_per_oracle_call[i]);
    EXPECT_LE(std::abs(f - 2 * c), 1) << "state " << i;
  }
}

TEST(Benchmark, CountBlockIsDeterministic) {
  const auto mlp = init_mlp<double>(2, {5, 4, 2});
  const auto states = ascending_states(4);
  auto strip = [](nlohmann::ordered_json j) {
    j.erase("nondeterministic");
    return j.dump();
  };
  const auto a = to_json(benchmark(mlp, RocketModel{}, std::span<const FlightState>(states), 0.01, 30));
  const auto b = to_json(benchmark(mlp, RocketModel{}, std::span<const FlightState>(states), 0.01, 30));
  EXPECT_EQ(strip(a), strip(b));
  EXPECT_TRUE(a["nondeterministic"].contains("nn_wall_clock_ns"));
  EXPECT_TRUE(a["nondeterministic"].contains("rk4_wall_clock_ns"));
}

TEST(Benchmark, Preconditions) {
  const auto mlp = init_mlp<double>(2, {5, 4, 2});
  const auto states = ascending_states(2);
  EXPECT_THROW(benchmark(mlp, RocketModel{}, std::span<const FlightState>(states), 0.01, 29),
               PreconditionError);
  EXPECT_THROW(benchmark(mlp, RocketModel{}, std::span<const FlightState>(), 0.01, 30),
               PreconditionError);
}

TEST(Benchmark, LatencyPercentiles) {
  std::vector<std::int64_t> ns(100);
  for (std::size_t i = 0; i < ns.size(); ++i) ns[i] = static_cast<std::int64_t>(100 - i);
  const auto s = detail::latency_stats(ns);
  EXPECT_EQ(s.median_ns, 51);
  EXPECT_EQ(s.p95_ns, 96);
}

}  // namespace
}  // namespace airbrake
