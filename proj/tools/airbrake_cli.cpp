// airbrake: generate -> train -> evaluate -> simulate -> benchmark.
//
// Exit codes: 0 success, 2 validation (config or unusable data), 3 I/O or
// file format, 4 numerical divergence, 1 anything else.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "airbrake/config.hpp"
#include "airbrake/dataset.hpp"
#include "airbrake/evalbench.hpp"
#include "airbrake/flight.hpp"
#include "airbrake/gradcheck.hpp"
#include "airbrake/model_io.hpp"
#include "airbrake/pipeline.hpp"

namespace {

using namespace airbrake;

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitDivergence = 4;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
};

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config.empty() ? RunConfig{} : load_config(opts.config);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.train.seed = *opts.seed;
  }
  if (opts.threads) cfg.threads = *opts.threads;
  cfg.validate();
  return cfg;
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string());
  }
}

std::string report_path(const RunConfig& cfg, const std::string& out,
                        const char* default_name) {
  if (!out.empty()) return out;
  return (std::filesystem::path(cfg.paths.reports) / default_name).string();
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  ensure_parent(path);
  io::write_file(path, j.dump(2) + "\n");
}

int cmd_generate(const CommonOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const std::string out = opts.out.empty() ? cfg.paths.dataset : opts.out;
  const GeneratedData data = generate_dataset(cfg);
  ensure_parent(out);
  write_csv(data.samples, out);

  nlohmann::ordered_json summary;
  summary["sample_count"] = data.samples.size();
  summary["open_count"] = count_label(data.samples, kOpen);
  summary["class_ratio_open"] = open_fraction(data.samples);
  summary["trajectory_steps"] = data.trajectory_steps;
  summary["n_flights"] = cfg.sim.n_flights;
  summary["seed"] = cfg.seed;
  summary["config"] = to_json(cfg);
  write_json(out + ".summary.json", summary);
  std::cout << "wrote " << data.samples.size() << " samples ("
            << count_label(data.samples, kOpen) << " open) to " << out << "\n";
  return 0;
}

int cmd_train(const CommonOptions& opts, const std::string& data_path,
              std::optional<std::size_t> epochs) {
  RunConfig cfg = resolve_config(opts);
  if (epochs) cfg.train.epochs = *epochs;
  const std::string data = data_path.empty() ? cfg.paths.dataset : data_path;
  const std::string out = opts.out.empty() ? cfg.paths.model : opts.out;
  const auto samples = read_csv(data);

  const auto trained =
      train_pipeline(samples, cfg, [](const EpochRecord& r) {
        std::cout << "epoch " << r.epoch << " train_loss "
                  << io::format_double(r.train_loss) << " val_loss "
                  << io::format_double(r.val_loss) << " val_f1 "
                  << io::format_double(r.val_f1) << std::endl;
      });
  ensure_parent(out);
  save_model(trained.result.model, out, model_meta(cfg));
  io::write_file(out + ".history.csv", history_csv(trained.result.history));

  double best_f1 = 0.0;
  for (const auto& r : trained.result.history) {
    if (r.epoch == trained.result.best_epoch) best_f1 = r.val_f1;
  }
  std::cout << "best epoch " << trained.result.best_epoch
            << " validation F1 " << io::format_double(best_f1) << "\n"
            << "wrote model to " << out << "\n";
  return 0;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& model_path,
                 const std::string& data_path) {
  const RunConfig cfg = resolve_config(opts);
  ModelMeta meta;
  const auto mlp = load_model<double>(
      model_path.empty() ? cfg.paths.model : model_path, &meta);
  const auto samples =
      read_csv(data_path.empty() ? cfg.paths.dataset : data_path);
  const EvalReport report = evaluate_on_test_split(mlp, samples, cfg);
  const std::string out = report_path(cfg, opts.out, "eval_report.json");
  write_json(out, eval_document(report, meta, cfg));
  std::cout << "test F1 " << io::format_double(report.metrics.f1)
            << " accuracy " << io::format_double(report.metrics.accuracy)
            << " (" << report.n_samples << " samples)\n";
  return 0;
}

int cmd_simulate(const CommonOptions& opts, const std::string& controller,
                 const std::string& model_path) {
  const RunConfig cfg = resolve_config(opts);
  const FlightState initial = cfg.initial_state();
  Trajectory traj;
  if (controller == "oracle") {
    traj = simulate_flight(cfg.rocket, initial, cfg.sim.h,
                           OracleController{cfg.rocket, cfg.sim.oracle_h},
                           cfg.seed);
  } else if (controller == "always-closed") {
    traj = simulate_flight(cfg.rocket, initial, cfg.sim.h,
                           AlwaysClosedController{}, cfg.seed);
  } else if (controller == "mlp") {
    if (model_path.empty()) {
      throw ValidationError("--model", "required with --controller mlp");
    }
    const auto mlp = load_model<double>(model_path);
    traj = simulate_flight(cfg.rocket, initial, cfg.sim.h,
                           MlpController<double>{&mlp}, cfg.seed);
  } else {
    throw ValidationError("--controller",
                          "must be oracle, mlp or always-closed");
  }
  const std::string out = report_path(cfg, opts.out, "trajectory.csv");
  ensure_parent(out);
  write_trajectory_csv(traj, out);
  std::cout << "apogee " << io::format_double(traj.apogee) << " m at t = "
            << io::format_double(traj.apogee_time) << " s (target "
            << io::format_double(cfg.rocket.target_apogee) << " m)\n";
  return 0;
}

int cmd_benchmark(const CommonOptions& opts, const std::string& model_path,
                  std::size_t n_states, std::size_t repetitions) {
  const RunConfig cfg = resolve_config(opts);
  const auto mlp =
      load_model<double>(model_path.empty() ? cfg.paths.model : model_path);
  const auto states = benchmark_states(cfg, n_states);
  const BenchReport report =
      benchmark(mlp, cfg.rocket, std::span<const FlightState>(states),
                cfg.sim.oracle_h, repetitions);
  nlohmann::ordered_json j = to_json(report);
  j["seed"] = cfg.seed;
  j["config"] = to_json(cfg);
  const std::string out = report_path(cfg, opts.out, "bench_report.json");
  write_json(out, j);
  std::cout << "nn_macs " << report.nn_macs << ", rk4 rhs evals "
            << report.rk4_rhs_evals_total << " over " << report.n_states
            << " states; median ns nn " << report.nn_latency.median_ns
            << " rk4 " << report.rk4_latency.median_ns << "\n";
  return 0;
}

int cmd_gradcheck(std::size_t seeds, std::size_t batch) {
  const auto r = run_gradcheck_suite(seeds, batch);
  std::cout << "checked " << r.parameters_checked
            << " parameters, max relative error "
            << io::format_double(r.max_relative_error) << "\n";
  return r.max_relative_error < 1e-4 ? 0 : kExitDivergence;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "JSON run configuration");
  cmd->add_option("--seed", opts.seed, "global seed (overrides config)");
  cmd->add_option("--threads", opts.threads,
                  "worker threads for flight generation");
  cmd->add_option("--out", opts.out, "output path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Airbrake RK4 oracle and neural surrogate toolkit"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string data_path;
  std::string model_path;
  std::string controller = "oracle";
  std::optional<std::size_t> epochs;
  std::size_t n_states = 50;
  std::size_t repetitions = 30;
  std::size_t gc_seeds = 20;
  std::size_t gc_batch = 16;

  auto* generate = app.add_subcommand("generate", "simulate flights and write the dataset CSV");
  add_common(generate, opts);

  auto* train_cmd = app.add_subcommand("train", "train the network on a dataset CSV");
  add_common(train_cmd, opts);
  train_cmd->add_option("--data", data_path, "dataset CSV");
  train_cmd->add_option("--epochs", epochs, "override train.epochs");

  auto* evaluate = app.add_subcommand("evaluate", "score a model on the test split");
  add_common(evaluate, opts);
  evaluate->add_option("--model", model_path, "model JSON");
  evaluate->add_option("--data", data_path, "dataset CSV");

  auto* simulate = app.add_subcommand("simulate", "closed-loop flight to apogee");
  add_common(simulate, opts);
  simulate->add_option("--controller", controller, "oracle | mlp | always-closed");
  simulate->add_option("--model", model_path, "model JSON for --controller mlp");

  auto* bench = app.add_subcommand("benchmark", "op counts and latency, network vs RK4");
  add_common(bench, opts);
  bench->add_option("--model", model_path, "model JSON");
  bench->add_option("--states", n_states, "number of benchmark states");
  bench->add_option("--repetitions", repetitions, "timed repetitions (>= 30)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--seeds", gc_seeds, "number of random fixtures");
  gradcheck->add_option("--batch", gc_batch, "batch size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*generate) return cmd_generate(opts);
    if (*train_cmd) return cmd_train(opts, data_path, epochs);
    if (*evaluate) return cmd_evaluate(opts, model_path, data_path);
    if (*simulate) return cmd_simulate(opts, controller, model_path);
    if (*bench) return cmd_benchmark(opts, model_path, n_states, repetitions);
    if (*gradcheck) return cmd_gradcheck(gc_seeds, gc_batch);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const PreconditionError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const EmptyDatasetError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DegenerateFeatureError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InsufficientMinorityError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const StratificationError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitIo;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitIo;
  } catch (const VersionMismatchError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ShapeMismatchError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CorruptedPayloadError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
