#pragma once

// Coast-phase (burnout to apogee) vertical dynamics of a sounding rocket, the
// RK4 apogee predictor, the airbrake decision rule built on it, and a
// closed-loop flight simulator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <atomic>
#include <vector>

#include "airbrake/errors.hpp"
#include "airbrake/integrator.hpp"
#include "airbrake/io.hpp"

namespace airbrake {

/// Physical parameters of the drag model and the control target.
struct RocketModel {
  double dry_mass = 22.0;            // kg
  double cd_clean = 0.45;            // airbrakes stowed
  double cd_airbrake_delta = 1.1;    // added when deployed
  double ref_area = 0.0191;          // m^2, 156 mm airframe
  double airbrake_area = 0.0120;     // m^2, deployed fin area
  double rho0 = 1.225;               // kg/m^3
  double scale_height = 8500.0;      // m
  double g = 9.81;                   // m/s^2
  double target_apogee = 2900.0;     // m
  double deadband = 0.0;             // m
  double lateral_accel_sigma = 0.35; // m/s^2

  /// Throws ValidationError naming `<prefix>.<field>`.
  void validate(const std::string& prefix = "rocket") const {
    auto require = [&](bool ok, const char* field, const char* rule) {
      if (!ok) throw ValidationError(prefix + "." + field, rule);
    };
    require(std::isfinite(dry_mass) && dry_mass > 0, "dry_mass", "must be > 0");
    require(std::isfinite(cd_clean) && cd_clean > 0, "cd_clean", "must be > 0");
    require(std::isfinite(cd_airbrake_delta) && cd_airbrake_delta >= 0,
            "cd_airbrake_delta", "must be >= 0");
    require(std::isfinite(ref_area) && ref_area > 0, "ref_area", "must be > 0");
    require(std::isfinite(airbrake_area) && airbrake_area >= 0,
            "airbrake_area", "must be >= 0");
    require(std::isfinite(rho0) && rho0 >= 0, "rho0", "must be >= 0");
    require(std::isfinite(scale_height) && scale_height > 0, "scale_height",
            "must be > 0");
    require(std::isfinite(g) && g > 0, "g", "must be > 0");
    require(std::isfinite(target_apogee), "target_apogee", "must be finite");
    require(std::isfinite(deadband) && deadband >= 0, "deadband",
            "must be >= 0");
    require(std::isfinite(lateral_accel_sigma) && lateral_accel_sigma >= 0,
            "lateral_accel_sigma", "must be >= 0");
  }
};

/// Rocket state as a sensor package would report it. `accel` is the most
/// recently computed acceleration (x, y lateral; z vertical, net of gravity
/// and drag); `airbrake_open` is the command in force for the next step.
struct FlightState {
  double t = 0.0;
  double altitude = 0.0;
  double v_vertical = 0.0;
  std::array<double, 3> accel{0.0, 0.0, 0.0};
  bool airbrake_open = false;
};

struct Trajectory {
  std::vector<FlightState> samples;
  double apogee = 0.0;
  double apogee_time = 0.0;
};

using CoastState = std::array<double, 2>;  // altitude, vertical velocity

/// y = [altitude, v]; y' = [v, -g - rho(alt) * CdA * v|v| / (2m)] with an
/// exponential atmosphere.
struct CoastDynamics {
  using state_type = CoastState;
  static constexpr std::size_t dimension = 2;

  double g;
  double rho0;
  double scale_height;
  double drag_factor;  // Cd_eff * A_eff / (2m)

  CoastDynamics(const RocketModel& model, bool airbrake_open)
      : g(model.g),
        rho0(model.rho0),
        scale_height(model.scale_height),
        drag_factor((model.cd_clean * model.ref_area +
                     (airbrake_open
                          ? model.cd_airbrake_delta * model.airbrake_area
                          : 0.0)) /
                    (2.0 * model.dry_mass)) {}

  double vertical_acceleration(double altitude, double v) const {
    const double rho = rho0 * std::exp(-altitude / scale_height);
    return -g - rho * drag_factor * v * std::abs(v);
  }

  CoastState operator()(double /*t*/, const CoastState& y) const {
    return {y[1], vertical_acceleration(y[0], y[1])};
  }
};

inline CoastDynamics coast_dynamics(const RocketModel& model,
                                    bool airbrake_open) {
  model.validate();
  return CoastDynamics(model, airbrake_open);
}

/// Wraps a system and counts rhs evaluations.
template <class System>
struct CountingSystem {
  using state_type = typename System::state_type;

  const System& inner;
  std::uint64_t* counter;
  std::size_t dimension = inner.dimension;

  state_type operator()(double t, const state_type& y) const {
    ++*counter;
    return inner(t, y);
  }
};

struct ApogeePrediction {
  double apogee = 0.0;
  double apogee_time = 0.0;
  std::uint64_t steps = 0;
};

/// Integrates the coast with a fixed airbrake setting until v <= 0 and
/// reports the peak altitude over the visited states.
template <class System>
ApogeePrediction predict_apogee_with(const System& sys,
                                     const FlightState& state, double h) {
  if (!(state.v_vertical > 0.0)) {
    throw PreconditionError("apogee prediction requires an ascending state");
  }
  ApogeePrediction out{state.altitude, state.t, 0};
  const Rk4Config cfg{h, 1'000'000};
  out.steps = integrate_visit(
      sys, state.t, CoastState{state.altitude, state.v_vertical}, cfg,
      [](double, const CoastState& y) { return y[1] <= 0.0; },
      [&](double t, const CoastState& y) {
        if (y[0] > out.apogee) {
          out.apogee = y[0];
          out.apogee_time = t;
        }
      });
  return out;
}

inline ApogeePrediction predict_apogee_detailed(const RocketModel& model,
                                                const FlightState& state,
                                                double h, bool assume_open) {
  return predict_apogee_with(coast_dynamics(model, assume_open), state, h);
}

inline double predict_apogee(const RocketModel& model, const FlightState& state,
                             double h, bool assume_open) {
  return predict_apogee_detailed(model, state, h, assume_open).apogee;
}

/// 1 (Open) iff the apogee predicted with airbrakes stowed strictly exceeds
/// target_apogee + deadband.
inline int oracle_label(const RocketModel& model, const FlightState& state,
                        double h) {
  const double predicted = predict_apogee(model, state, h, false);
  return predicted > model.target_apogee + model.deadband ? 1 : 0;
}

struct AlwaysClosedController {
  bool operator()(const FlightState&) const { return false; }
};

struct OracleController {
  RocketModel model;
  double h = 0.01;
  bool operator()(const FlightState& s) const {
    return oracle_label(model, s, h) == 1;
  }
};

/// Closed-loop coast simulation. Each step the controller sees the current
/// state and sets the airbrake; one RK4 step then advances with that setting.
/// Lateral accelerations are zero-mean Gaussian noise drawn from a generator
/// seeded with `seed`. Stops at the first state with v <= 0.
template <class Controller>
Trajectory simulate_flight(const RocketModel& model, const FlightState& initial,
                           double h, const Controller& controller,
                           std::uint64_t seed,
                           std::uint64_t max_steps = 1'000'000) {
  model.validate();
  if (!(initial.v_vertical > 0.0)) {
    throw PreconditionError("simulate_flight requires an ascending state");
  }
  if (!(h > 0.0)) throw PreconditionError("simulate_flight requires h > 0");

  std::mt19937_64 rng(seed);
  const double sigma = model.lateral_accel_sigma;
  std::normal_distribution<double> lateral(0.0, sigma > 0.0 ? sigma : 1.0);
  auto draw_lateral = [&]() { return sigma > 0.0 ? lateral(rng) : 0.0; };

  const CoastDynamics closed(model, false);
  const CoastDynamics open(model, true);

  Trajectory traj;
  FlightState state = initial;
  {
    const CoastDynamics& sys = initial.airbrake_open ? open : closed;
    state.accel = {draw_lateral(), draw_lateral(),
                   sys.vertical_acceleration(state.altitude, state.v_vertical)};
  }
  for (std::uint64_t step = 0; step < max_steps; ++step) {
    state.airbrake_open = controller(state);
    traj.samples.push_back(state);

    const CoastDynamics& sys = state.airbrake_open ? open : closed;
    const CoastState y = rk4_step(sys, state.t,
                                  CoastState{state.altitude, state.v_vertical}, h);
    FlightState next;
    next.t = initial.t + static_cast<double>(step + 1) * h;
    next.altitude = y[0];
    next.v_vertical = y[1];
    const double ax = draw_lateral();
    const double ay = draw_lateral();
    next.accel = {ax, ay, sys.vertical_acceleration(y[0], y[1])};
    state = next;
    if (state.v_vertical <= 0.0) {
      state.airbrake_open = false;
      traj.samples.push_back(state);
      break;
    }
  }
  if (traj.samples.empty() || traj.samples.back().v_vertical > 0.0) {
    throw PreconditionError("simulate_flight exceeded max_steps");
  }
  traj.apogee = traj.samples.front().altitude;
  traj.apogee_time = traj.samples.front().t;
  for (const auto& s : traj.samples) {
    if (s.altitude > traj.apogee) {
      traj.apogee = s.altitude;
      traj.apogee_time = s.t;
    }
  }
  return traj;
}

struct InitialRanges {
  double altitude_min = 500.0;
  double altitude_max = 1500.0;
  double velocity_min = 150.0;
  double velocity_max = 300.0;
};

namespace detail {

// Uniform in [lo, hi] from the top 53 bits; valid for lo == hi.
inline double uniform_between(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace detail

/// Initial burnout state of flight `index` in a batch seeded with `seed`.
inline FlightState batch_initial_state(const InitialRanges& ranges,
                                       std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint64_t>(seed + index),
                    std::uint64_t{0x1c0a57}};
  std::mt19937_64 rng(seq);
  FlightState s;
  s.altitude = detail::uniform_between(rng, ranges.altitude_min,
                                       ranges.altitude_max);
  s.v_vertical = detail::uniform_between(rng, ranges.velocity_min,
                                         ranges.velocity_max);
  return s;
}

/// Simulates `n_flights` independent flights. Flight i draws its burnout state
/// and its noise stream from sub-seed `seed + i`, so each flight is
/// reproducible on its own and the output order never depends on `threads`.
template <class Controller>
std::vector<Trajectory> generate_flight_batch(const RocketModel& model,
                                              std::size_t n_flights,
                                              const InitialRanges& ranges,
                                              double h,
                                              const Controller& controller,
                                              std::uint64_t seed,
                                              unsigned threads = 1) {
  model.validate();
  if (n_flights == 0) throw PreconditionError("n_flights must be >= 1");
  if (!(ranges.altitude_min <= ranges.altitude_max) ||
      !(ranges.velocity_min <= ranges.velocity_max) ||
      ranges.altitude_min < 0.0 || !(ranges.velocity_min > 0.0)) {
    throw PreconditionError(
        "initial ranges must satisfy min <= max, altitude >= 0, velocity > 0");
  }

  std::vector<Trajectory> out(n_flights);
  std::vector<std::exception_ptr> failures(n_flights);
  auto run_one = [&](std::size_t i) {
    try {
      out[i] = simulate_flight(model, batch_initial_state(ranges, seed, i), h,
                               controller, seed + i);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < n_flights; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n_flights; i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

inline constexpr const char* kTrajectoryCsvHeader =
    "t_s,altitude_m,v_vertical_mps,accel_x_mps2,accel_y_mps2,accel_z_mps2,"
    "airbrake_open";

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = kTrajectoryCsvHeader;
  out += '\n';
  for (const auto& s : traj.samples) {
    out += io::format_double(s.t) + ',' + io::format_double(s.altitude) + ',' +
           io::format_double(s.v_vertical) + ',' +
           io::format_double(s.accel[0]) + ',' +
           io::format_double(s.accel[1]) + ',' +
           io::format_double(s.accel[2]) + ',' +
           (s.airbrake_open ? "1" : "0") + '\n';
  }
  return out;
}

inline void write_trajectory_csv(const Trajectory& traj,
                                 const std::string& path) {
  io::write_file(path, trajectory_csv(traj));
}

}  // namespace airbrake
