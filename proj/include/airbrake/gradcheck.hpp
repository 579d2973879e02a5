#pragma once

// Central finite-difference check of backpropagated gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "airbrake/neuralnet.hpp"

namespace airbrake {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

/// Relative error |a - b| / (|a| + |b|), taken as 0 when both vanish.
inline double relative_error(double a, double b) {
  const double denom = std::abs(a) + std::abs(b);
  return denom < 1e-12 ? 0.0 : std::abs(a - b) / denom;
}

/// Compares every analytic gradient of the mean weighted loss with
/// (L(p + eps) - L(p - eps)) / (2 eps) on a standardized batch.
inline GradCheckResult check_gradients(Mlp<double> mlp,
                                       std::span<const Sample> batch,
                                       const ClassWeights& weights,
                                       double eps = 1e-5) {
  const auto analytic = backward_standardized(mlp, batch, weights).grads;
  GradCheckResult out;
  auto probe = [&](double& param, double grad) {
    const double saved = param;
    param = saved + eps;
    const double up = batch_loss_standardized(mlp, batch, weights);
    param = saved - eps;
    const double down = batch_loss_standardized(mlp, batch, weights);
    param = saved;
    const double numeric = (up - down) / (2.0 * eps);
    out.max_relative_error =
        std::max(out.max_relative_error, relative_error(grad, numeric));
    ++out.parameters_checked;
  };
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    auto& w = mlp.weights[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      probe(w.data()[i], analytic.weights[l].data()[i]);
    }
    auto& b = mlp.biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      probe(b.data()[i], analytic.biases[l].data()[i]);
    }
  }
  return out;
}

/// Random network (He weights, N(0, 0.1) biases) and random standardized
/// batch with random labels, all derived from `seed`.
struct GradCheckFixture {
  Mlp<double> mlp;
  std::vector<Sample> batch;
};

inline GradCheckFixture make_gradcheck_fixture(std::uint64_t seed,
                                               std::vector<std::size_t> dims,
                                               std::size_t batch_size) {
  GradCheckFixture f;
  f.mlp = init_mlp<double>(seed, std::move(dims));
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& b : f.mlp.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * normal(rng);
  }
  for (std::size_t i = 0; i < batch_size; ++i) {
    Sample s;
    for (auto& x : s.features) x = normal(rng);
    s.label = static_cast<int>(rng() & 1U);
    f.batch.push_back(s);
  }
  return f;
}

/// The diagnostic behind `airbrake gradcheck`: dims [5, 8, 4, 2], one
/// fixture per seed in [0, n_seeds), paper class weights.
inline GradCheckResult run_gradcheck_suite(std::size_t n_seeds = 20,
                                           std::size_t batch_size = 16,
                                           double eps = 1e-5) {
  GradCheckResult total;
  for (std::size_t seed = 0; seed < n_seeds; ++seed) {
    const auto f = make_gradcheck_fixture(seed, {5, 8, 4, 2}, batch_size);
    const auto r = check_gradients(f.mlp, std::span<const Sample>(f.batch),
                                   ClassWeights{}, eps);
    total.max_relative_error =
        std::max(total.max_relative_error, r.max_relative_error);
    total.parameters_checked += r.parameters_checked;
  }
  return total;
}

}  // namespace airbrake
