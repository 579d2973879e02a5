#pragma once

// Fixed-step classical Runge-Kutta (RK4) integration of first-order ODE
// systems y' = f(t, y).
//
// States are any fixed- or dynamic-size contiguous container of doubles with
// size() and operator[] (std::array<double, N>, std::vector<double>).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "airbrake/errors.hpp"

namespace airbrake {

template <class S>
concept OdeState = requires(S s, const S cs, std::size_t i) {
  { cs.size() } -> std::convertible_to<std::size_t>;
  { s[i] } -> std::convertible_to<double&>;
};

/// Adapts a callable `rhs(t, y) -> State` into a system with a known
/// dimension.
template <OdeState State, class Rhs>
struct OdeSystem {
  using state_type = State;

  std::size_t dimension;
  Rhs rhs;

  State operator()(double t, const State& y) const { return rhs(t, y); }
};

template <OdeState State, class Rhs>
OdeSystem<State, Rhs> make_ode_system(std::size_t dimension, Rhs rhs) {
  return {dimension, std::move(rhs)};
}

struct Rk4Config {
  double h = 0.01;
  std::uint64_t max_steps = 1'000'000;
};

template <OdeState State>
struct TimeSeries {
  std::vector<double> times;
  std::vector<State> states;

  std::size_t size() const noexcept { return times.size(); }
};

namespace detail {

template <OdeState State>
bool all_finite(const State& y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) return false;
  }
  return true;
}

// y + a * k
template <OdeState State>
State offset(const State& y, const State& k, double a) {
  State out = y;
  for (std::size_t i = 0; i < y.size(); ++i) out[i] += a * k[i];
  return out;
}

template <class System, OdeState State>
State evaluate_stage(const System& sys, double t, const State& y, double h,
                     const char* stage) {
  State k = sys(t, y);
  if (k.size() != sys.dimension) {
    throw PreconditionError(std::string("rhs returned wrong dimension at ") +
                            stage);
  }
  for (std::size_t i = 0; i < k.size(); ++i) {
    k[i] *= h;
    if (!std::isfinite(k[i])) {
      throw DivergenceError(stage, "non-finite RK4 stage value");
    }
  }
  return k;
}

template <OdeState State>
std::vector<double> to_vector(const State& y) {
  return std::vector<double>(y.begin(), y.end());
}

}  // namespace detail

/// Advances y(t) to y(t + h) with exactly four rhs evaluations weighted
/// (1, 2, 2, 1) / 6.
///
/// Throws PreconditionError if h <= 0 or y has the wrong length, and
/// DivergenceError naming the stage (k1..k4) when a stage goes non-finite.
template <class System, OdeState State>
State rk4_step(const System& sys, double t, const State& y, double h) {
  if (!(h > 0.0)) throw PreconditionError("rk4_step requires h > 0");
  if (y.size() != sys.dimension) {
    throw PreconditionError("state length does not match system dimension");
  }
  const double half = 0.5 * h;
  const State k1 = detail::evaluate_stage(sys, t, y, h, "k1");
  const State k2 =
      detail::evaluate_stage(sys, t + half, detail::offset(y, k1, 0.5), h, "k2");
  const State k3 =
      detail::evaluate_stage(sys, t + half, detail::offset(y, k2, 0.5), h, "k3");
  const State k4 =
      detail::evaluate_stage(sys, t + h, detail::offset(y, k3, 1.0), h, "k4");

  State next = y;
  for (std::size_t i = 0; i < y.size(); ++i) {
    next[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
  }
  return next;
}

/// Steps from (t0, y0) until `stop(t, y)` holds, calling `visit(t, y)` on the
/// initial state and after every step. The predicate is checked only after
/// full steps. Times are t0 + i*h. Returns the number of steps taken.
///
/// On exceeding cfg.max_steps a TruncationError carrying only the last
/// visited state is thrown; integrate_until keeps the full partial record.
template <class System, OdeState State, class Stop, class Visit>
std::uint64_t integrate_visit(const System& sys, double t0, const State& y0,
                              const Rk4Config& cfg, Stop&& stop,
                              Visit&& visit) {
  if (!(cfg.h > 0.0)) throw PreconditionError("Rk4Config.h must be > 0");
  if (cfg.max_steps == 0) {
    throw PreconditionError("Rk4Config.max_steps must be > 0");
  }
  State y = y0;
  double t = t0;
  visit(t, y);
  for (std::uint64_t step = 1; step <= cfg.max_steps; ++step) {
    y = rk4_step(sys, t, y, cfg.h);
    t = t0 + static_cast<double>(step) * cfg.h;
    if (!detail::all_finite(y)) {
      throw DivergenceError("step " + std::to_string(step),
                            "non-finite state");
    }
    visit(t, y);
    if (stop(t, y)) return step;
  }
  throw TruncationError({t}, {detail::to_vector(y)});
}

/// Records the whole trajectory. trajectory[0] is (t0, y0) and the last entry
/// is the first state for which `stop` holds.
template <class System, OdeState State, class Stop>
TimeSeries<State> integrate_until(const System& sys, double t0,
                                  const State& y0, const Rk4Config& cfg,
                                  Stop&& stop) {
  TimeSeries<State> out;
  try {
    integrate_visit(sys, t0, y0, cfg, stop, [&](double t, const State& y) {
      out.times.push_back(t);
      out.states.push_back(y);
    });
  } catch (const TruncationError&) {
    std::vector<std::vector<double>> partial;
    partial.reserve(out.states.size());
    for (const auto& s : out.states) partial.push_back(detail::to_vector(s));
    throw TruncationError(std::move(out.times), std::move(partial));
  }
  return out;
}

/// Integrates `steps` fixed steps of size h and returns the final state.
template <class System, OdeState State>
State integrate_steps(const System& sys, double t0, const State& y0, double h,
                      std::uint64_t steps) {
  State y = y0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    y = rk4_step(sys, t0 + static_cast<double>(i) * h, y, h);
  }
  return y;
}

/// Observed convergence order log2(err(h) / err(h/2)) of the global error at
/// t_end, measured against the analytic solution `exact(t)`.
///
/// Errors are max-norm. Throws IndeterminateOrderError if either error is
/// below 1e-13 (the method is already exact to rounding), PreconditionError
/// if t_end - t0 is not an integer multiple of h_coarse.
template <class System, OdeState State, class Exact>
double empirical_order(const System& sys, double t0, const State& y0,
                       double t_end, double h_coarse, Exact&& exact) {
  constexpr double kNoiseFloor = 1e-13;
  if (!(h_coarse > 0.0) || !(t_end > t0)) {
    throw PreconditionError("empirical_order requires h > 0 and t_end > t0");
  }
  const double span = t_end - t0;
  const auto steps = static_cast<std::uint64_t>(std::llround(span / h_coarse));
  if (steps == 0 ||
      std::abs(static_cast<double>(steps) * h_coarse - span) > 1e-9 * span) {
    throw PreconditionError("t_end - t0 must be a multiple of h_coarse");
  }
  const State reference = exact(t_end);
  auto global_error = [&](double h, std::uint64_t n) {
    const State y = integrate_steps(sys, t0, y0, h, n);
    double err = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      err = std::max(err, std::abs(y[i] - reference[i]));
    }
    return err;
  };
  const double coarse = global_error(h_coarse, steps);
  const double fine = global_error(0.5 * h_coarse, 2 * steps);
  if (coarse < kNoiseFloor || fine < kNoiseFloor) {
    throw IndeterminateOrderError(
        "global error below the 1e-13 noise floor; order not measurable");
  }
  return std::log2(coarse / fine);
}

}  // namespace airbrake
