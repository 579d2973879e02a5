// Coast-phase walkthrough: oracle vs stowed airbrakes, then a small
// surrogate network trained on oracle labels.

#include <cstdio>

#include "airbrake/evalbench.hpp"
#include "airbrake/pipeline.hpp"

int main() {
  using namespace airbrake;

  RunConfig cfg;
  const FlightState burnout = cfg.initial_state();

  const auto closed = simulate_flight(cfg.rocket, burnout, cfg.sim.h,
                                      AlwaysClosedController{}, cfg.seed);
  const auto oracle = simulate_flight(cfg.rocket, burnout, cfg.sim.h,
                                      OracleController{cfg.rocket, cfg.sim.oracle_h},
                                      cfg.seed);
  std::printf("target apogee       %8.2f m\n", cfg.rocket.target_apogee);
  std::printf("always-closed       %8.2f m at %.2f s\n", closed.apogee,
              closed.apogee_time);
  std::printf("oracle controller   %8.2f m at %.2f s\n", oracle.apogee,
              oracle.apogee_time);

  // Small data set and network so the demo finishes in seconds.
  cfg.sim.n_flights = 20;
  cfg.sim.sample_stride = 5;
  const auto data = generate_dataset(cfg);
  std::printf("dataset             %zu samples, %.1f%% open\n",
              data.samples.size(), 100.0 * open_fraction(data.samples));

  const PreparedData prepared = prepare_data(data.samples, cfg);
  Mlp<double> mlp = init_mlp<double>(cfg.seed, {5, 64, 32, 16, 2});
  mlp.scaler = prepared.scaler;
  TrainConfig tc = effective_train_config(cfg);
  tc.epochs = 30;
  tc.learning_rate = 1e-3;
  const auto result = train(mlp, prepared.scaled, tc);

  const auto report =
      evaluate_model(result.model, std::span<const Sample>(prepared.raw.test));
  std::printf("surrogate           F1 %.3f, accuracy %.3f on %zu test samples"
              " (best epoch %zu)\n",
              report.metrics.f1, report.metrics.accuracy, report.n_samples,
              result.best_epoch);

  const auto flown = simulate_flight(cfg.rocket, burnout, cfg.sim.h,
                                     MlpController<double>{&result.model}, cfg.seed);
  std::printf("surrogate in loop   %8.2f m\n", flown.apogee);
  std::printf("MACs per inference  %llu\n",
              static_cast<unsigned long long>(count_nn_macs(result.model)));
  return 0;
}
