#pragma once

// Dense ReLU multilayer perceptron with a softmax output, trained with a
// class-weighted cross-entropy loss and Adam.
//
// Parameters are templated on the scalar type. double is the default and
// the type every reproducibility guarantee is stated for; float is an
// optional fast path.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "airbrake/dataset.hpp"
#include "airbrake/errors.hpp"
#include "airbrake/metrics.hpp"

namespace airbrake {

/// 5 inputs, ten hidden layers halving from 2048 to 4, 2 outputs.
inline std::vector<std::size_t> paper_layer_dims() {
  return {5, 2048, 1024, 512, 256, 128, 64, 32, 16, 8, 4, 2};
}

template <class Scalar = double>
struct Mlp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<std::size_t> layer_dims;
  std::vector<Matrix> weights;  // layer l: dims[l+1] x dims[l]
  std::vector<Vector> biases;
  Scaler scaler;

  std::size_t num_layers() const noexcept { return weights.size(); }

  /// Throws ShapeMismatchError unless every tensor matches layer_dims.
  void check_shapes() const {
    if (layer_dims.size() < 2 || layer_dims.front() != kNumFeatures ||
        layer_dims.back() != 2) {
      throw ShapeMismatchError("layer_dims must run from 5 inputs to 2 outputs");
    }
    if (weights.size() != layer_dims.size() - 1 ||
        biases.size() != layer_dims.size() - 1) {
      throw ShapeMismatchError("layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (static_cast<std::size_t>(weights[l].rows()) != layer_dims[l + 1] ||
          static_cast<std::size_t>(weights[l].cols()) != layer_dims[l] ||
          static_cast<std::size_t>(biases[l].size()) != layer_dims[l + 1]) {
        throw ShapeMismatchError("layer " + std::to_string(l) +
                                 " shape does not match layer_dims");
      }
    }
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.layer_dims != b.layer_dims || !(a.scaler == b.scaler)) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
      if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) {
        return false;
      }
    }
    return true;
  }
};

template <class Scalar>
struct MlpGradients {
  std::vector<typename Mlp<Scalar>::Matrix> weights;
  std::vector<typename Mlp<Scalar>::Vector> biases;
};

/// Per-class multipliers on the per-sample loss of the true class.
struct ClassWeights {
  double closed = 0.90;
  double open = 0.05;

  double of(int label) const noexcept { return label == kOpen ? open : closed; }
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 0.0003;
  double beta1 = 0.87;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  ClassWeights class_weights;
  std::uint64_t seed = 42;
  bool shuffle_each_epoch = true;

  void validate(const std::string& prefix = "train") const {
    auto require = [&](bool ok, const char* field, const char* rule) {
      if (!ok) throw ValidationError(prefix + "." + field, rule);
    };
    require(batch_size >= 1, "batch_size", "must be >= 1");
    require(std::isfinite(learning_rate) && learning_rate >= 0,
            "learning_rate", "must be >= 0");
    require(beta1 >= 0 && beta1 < 1, "beta1", "must lie in [0, 1)");
    require(beta2 >= 0 && beta2 < 1, "beta2", "must lie in [0, 1)");
    require(epsilon > 0, "epsilon", "must be > 0");
    require(class_weights.closed > 0, "class_weight_closed", "must be > 0");
    require(class_weights.open > 0, "class_weight_open", "must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Initialization and inference

/// He initialization: W ~ N(0, 2 / fan_in), b = 0. Entries are drawn layer by
/// layer in row-major order from one generator seeded with `seed`.
template <class Scalar = double>
Mlp<Scalar> init_mlp(std::uint64_t seed,
                     std::vector<std::size_t> dims = paper_layer_dims()) {
  Mlp<Scalar> mlp;
  mlp.layer_dims = std::move(dims);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < mlp.layer_dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(mlp.layer_dims[l]);
    const auto out = static_cast<Eigen::Index>(mlp.layer_dims[l + 1]);
    std::normal_distribution<double> dist(0.0,
                                          std::sqrt(2.0 / static_cast<double>(in)));
    typename Mlp<Scalar>::Matrix w(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) w(r, c) = static_cast<Scalar>(dist(rng));
    }
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Mlp<Scalar>::Vector::Zero(out));
  }
  mlp.check_shapes();
  return mlp;
}

/// Column-wise softmax with max subtraction.
template <class Derived>
auto softmax_columns(const Eigen::MatrixBase<Derived>& logits) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic,
                               Eigen::Dynamic>;
  Matrix out = logits;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    auto col = out.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
  return out;
}

template <class Scalar>
struct ForwardPass {
  // activations[0] is the input batch, activations[l] the post-ReLU output
  // of hidden layer l; probabilities holds the softmax output.
  std::vector<typename Mlp<Scalar>::Matrix> activations;
  typename Mlp<Scalar>::Matrix probabilities;
};

/// Forward pass over a batch whose columns are already-standardized inputs.
template <class Scalar>
ForwardPass<Scalar> forward_standardized(
    const Mlp<Scalar>& mlp, const typename Mlp<Scalar>::Matrix& inputs) {
  ForwardPass<Scalar> pass;
  pass.activations.reserve(mlp.num_layers());
  pass.activations.push_back(inputs);
  const std::size_t last = mlp.num_layers() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    typename Mlp<Scalar>::Matrix z = mlp.weights[l] * pass.activations.back();
    z.colwise() += mlp.biases[l];
    pass.activations.push_back(z.cwiseMax(Scalar(0)));
  }
  typename Mlp<Scalar>::Matrix logits =
      mlp.weights[last] * pass.activations.back();
  logits.colwise() += mlp.biases[last];
  pass.probabilities = softmax_columns(logits);
  return pass;
}

template <class Scalar>
typename Mlp<Scalar>::Matrix standardized_batch(
    std::span<const Sample> samples) {
  typename Mlp<Scalar>::Matrix x(static_cast<Eigen::Index>(kNumFeatures),
                                 static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          static_cast<Scalar>(samples[i].features[j]);
    }
  }
  return x;
}

/// Class probabilities [p_closed, p_open] for raw (unscaled) features.
template <class Scalar>
std::array<double, 2> forward(const Mlp<Scalar>& mlp, const Features& raw) {
  for (double x : raw) {
    if (!std::isfinite(x)) throw PreconditionError("non-finite input feature");
  }
  const Features scaled = mlp.scaler.apply(raw);
  typename Mlp<Scalar>::Matrix x(static_cast<Eigen::Index>(kNumFeatures), 1);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    x(static_cast<Eigen::Index>(j), 0) = static_cast<Scalar>(scaled[j]);
  }
  const auto pass = forward_standardized(mlp, x);
  return {static_cast<double>(pass.probabilities(0, 0)),
          static_cast<double>(pass.probabilities(1, 0))};
}

/// Argmax label; an exact tie resolves to Closed.
inline int label_from_probabilities(double p_closed, double p_open) {
  return p_open > p_closed ? kOpen : kClosed;
}

template <class Scalar>
int predict(const Mlp<Scalar>& mlp, const Features& raw) {
  const auto p = forward(mlp, raw);
  return label_from_probabilities(p[0], p[1]);
}

/// Airbrake controller backed by a trained network.
template <class Scalar = double>
struct MlpController {
  const Mlp<Scalar>* mlp;
  bool operator()(const FlightState& s) const {
    return predict(*mlp, features_of(s)) == kOpen;
  }
};

// ---------------------------------------------------------------------------
// Loss and gradients

inline constexpr double kLogClamp = 1e-12;

/// w_label * -ln(p_label), with p_label clamped at 1e-12.
inline double weighted_ce_loss(double p_label, int label,
                               const ClassWeights& weights) {
  return weights.of(label) * -std::log(std::max(p_label, kLogClamp));
}

template <class Scalar>
struct BatchGradient {
  MlpGradients<Scalar> grads;
  double loss = 0.0;  // mean weighted cross-entropy over the batch
};

/// Exact gradients of the mean weighted cross-entropy over a batch of
/// standardized samples. The softmax and loss are fused: the output
/// pre-activation gradient is w_y (p - onehot(y)) / B.
template <class Scalar>
BatchGradient<Scalar> backward_standardized(const Mlp<Scalar>& mlp,
                                            std::span<const Sample> batch,
                                            const ClassWeights& weights) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  if (batch.empty()) throw PreconditionError("backward needs a non-empty batch");
  const auto pass = forward_standardized(mlp, standardized_batch<Scalar>(batch));
  const auto b = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  BatchGradient<Scalar> out;
  Matrix delta = pass.probabilities;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int y = batch[static_cast<std::size_t>(i)].label;
    out.loss += weighted_ce_loss(static_cast<double>(pass.probabilities(y, i)),
                                 y, weights);
    delta(y, i) -= Scalar(1);
    delta.col(i) *= static_cast<Scalar>(weights.of(y) * inv_b);
  }
  out.loss *= inv_b;

  const std::size_t n = mlp.num_layers();
  out.grads.weights.resize(n);
  out.grads.biases.resize(n);
  for (std::size_t l = n; l-- > 0;) {
    const Matrix& input = pass.activations[l];
    out.grads.weights[l].noalias() = delta * input.transpose();
    out.grads.biases[l] = delta.rowwise().sum();
    if (!out.grads.weights[l].allFinite() || !out.grads.biases[l].allFinite()) {
      throw DivergenceError("layer " + std::to_string(l),
                            "non-finite gradient");
    }
    if (l > 0) {
      Matrix upstream = mlp.weights[l].transpose() * delta;
      delta = (upstream.array() *
               (input.array() > Scalar(0)).template cast<Scalar>())
                  .matrix();
    }
  }
  return out;
}

/// Same as backward_standardized but accepts raw features and applies the
/// network's scaler first.
template <class Scalar>
BatchGradient<Scalar> backward(const Mlp<Scalar>& mlp,
                               std::span<const Sample> batch,
                               const ClassWeights& weights) {
  std::vector<Sample> scaled(batch.begin(), batch.end());
  for (auto& s : scaled) s.features = mlp.scaler.apply(s.features);
  return backward_standardized(mlp, std::span<const Sample>(scaled), weights);
}

/// Mean weighted loss over standardized samples.
template <class Scalar>
double batch_loss_standardized(const Mlp<Scalar>& mlp,
                               std::span<const Sample> samples,
                               const ClassWeights& weights) {
  if (samples.empty()) return 0.0;
  const auto pass =
      forward_standardized(mlp, standardized_batch<Scalar>(samples));
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int y = samples[i].label;
    loss += weighted_ce_loss(
        static_cast<double>(pass.probabilities(y, static_cast<Eigen::Index>(i))),
        y, weights);
  }
  return loss / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Adam

struct AdamHyper {
  double learning_rate = 0.0003;
  double beta1 = 0.87;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline AdamHyper adam_hyper(const TrainConfig& cfg) {
  return {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
}

/// One bias-corrected Adam update of a flat parameter block. `t` is the
/// 1-based step number after incrementing.
template <class Scalar>
void adam_update(std::span<Scalar> params, std::span<const Scalar> grads,
                 std::span<Scalar> m, std::span<Scalar> v, std::uint64_t t,
                 const AdamHyper& hp) {
  if (grads.size() != params.size() || m.size() != params.size() ||
      v.size() != params.size()) {
    throw PreconditionError("Adam buffers disagree in size");
  }
  using Arr = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const auto n = static_cast<Eigen::Index>(params.size());
  Eigen::Map<Arr> theta(params.data(), n);
  Eigen::Map<const Arr> g(grads.data(), n);
  Eigen::Map<Arr> mm(m.data(), n);
  Eigen::Map<Arr> vv(v.data(), n);

  const auto b1 = static_cast<Scalar>(hp.beta1);
  const auto b2 = static_cast<Scalar>(hp.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(hp.beta1, double(t)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(hp.beta2, double(t)));
  const auto lr = static_cast<Scalar>(hp.learning_rate);
  const auto eps = static_cast<Scalar>(hp.epsilon);

  mm = b1 * mm + (Scalar(1) - b1) * g;
  vv = b2 * vv + (Scalar(1) - b2) * g.square();
  theta -= lr * (mm / c1) / ((vv / c2).sqrt() + eps);
}

template <class Scalar>
struct AdamState {
  MlpGradients<Scalar> m;
  MlpGradients<Scalar> v;
  std::uint64_t t = 0;
};

template <class Scalar>
AdamState<Scalar> make_adam_state(const Mlp<Scalar>& mlp) {
  AdamState<Scalar> s;
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    const auto& w = mlp.weights[l];
    const auto& b = mlp.biases[l];
    s.m.weights.push_back(Mlp<Scalar>::Matrix::Zero(w.rows(), w.cols()));
    s.v.weights.push_back(Mlp<Scalar>::Matrix::Zero(w.rows(), w.cols()));
    s.m.biases.push_back(Mlp<Scalar>::Vector::Zero(b.size()));
    s.v.biases.push_back(Mlp<Scalar>::Vector::Zero(b.size()));
  }
  return s;
}

namespace detail {
template <class Dense>
auto flat(Dense& x) {
  return std::span<typename Dense::Scalar>(x.data(),
                                           static_cast<std::size_t>(x.size()));
}
template <class Dense>
auto flat_const(const Dense& x) {
  return std::span<const typename Dense::Scalar>(
      x.data(), static_cast<std::size_t>(x.size()));
}
}  // namespace detail

template <class Scalar>
void adam_step(Mlp<Scalar>& mlp, const MlpGradients<Scalar>& grads,
               AdamState<Scalar>& state, const AdamHyper& hp) {
  if (grads.weights.size() != mlp.num_layers() ||
      state.m.weights.size() != mlp.num_layers()) {
    throw PreconditionError("gradient/optimizer layer count mismatch");
  }
  ++state.t;
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    adam_update(detail::flat(mlp.weights[l]), detail::flat_const(grads.weights[l]),
                detail::flat(state.m.weights[l]), detail::flat(state.v.weights[l]),
                state.t, hp);
    adam_update(detail::flat(mlp.biases[l]), detail::flat_const(grads.biases[l]),
                detail::flat(state.m.biases[l]), detail::flat(state.v.biases[l]),
                state.t, hp);
  }
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

template <class Scalar>
struct TrainResult {
  Mlp<Scalar> model;  // parameters with the best validation F1
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
};

template <class Scalar>
std::vector<int> predict_standardized(const Mlp<Scalar>& mlp,
                                      std::span<const Sample> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const auto chunk =
        samples.subspan(start, std::min(kChunk, samples.size() - start));
    const auto pass =
        forward_standardized(mlp, standardized_batch<Scalar>(chunk));
    for (Eigen::Index i = 0; i < pass.probabilities.cols(); ++i) {
      out.push_back(label_from_probabilities(
          static_cast<double>(pass.probabilities(0, i)),
          static_cast<double>(pass.probabilities(1, i))));
    }
  }
  return out;
}

inline std::vector<int> labels_of(std::span<const Sample> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

/// Mini-batch Adam training on a split whose features are already
/// standardized with `mlp.scaler`. Runs epochs * ceil(N / batch_size)
/// optimizer steps and returns the parameters of the epoch with the highest
/// validation F1 (earliest on ties).
template <class Scalar>
TrainResult<Scalar> train(Mlp<Scalar> mlp, const SplitDataset& data,
                          const TrainConfig& cfg,
                          const std::function<void(const EpochRecord&)>&
                              on_epoch = {}) {
  cfg.validate();
  if (cfg.epochs > 0 && data.train.empty()) {
    throw PreconditionError("training split is empty");
  }
  TrainResult<Scalar> result{mlp, {}, 0};
  AdamState<Scalar> adam = make_adam_state(mlp);
  const AdamHyper hp = adam_hyper(cfg);
  std::mt19937_64 rng(cfg.seed);

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  const std::vector<int> val_labels = labels_of(data.validation);
  double best_f1 = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data.train[order[i]]);
      const std::string where = "epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(batch_index);
      BatchGradient<Scalar> step;
      try {
        step = backward_standardized(mlp, std::span<const Sample>(batch),
                                     cfg.class_weights);
      } catch (const DivergenceError& e) {
        throw DivergenceError(where, e.what());
      }
      if (!std::isfinite(step.loss)) {
        throw DivergenceError(where, "non-finite training loss");
      }
      loss_sum += step.loss * static_cast<double>(batch.size());
      adam_step(mlp, step.grads, adam, hp);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    if (!data.validation.empty()) {
      const std::span<const Sample> val(data.validation);
      rec.val_loss = batch_loss_standardized(mlp, val, cfg.class_weights);
      rec.val_f1 = f1_accuracy(confusion(predict_standardized(mlp, val),
                                         val_labels))
                       .f1;
    }
    result.history.push_back(rec);
    if (rec.val_f1 > best_f1) {
      best_f1 = rec.val_f1;
      result.model = mlp;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss,val_f1\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + ',' + io::format_double(r.train_loss) +
           ',' + io::format_double(r.val_loss) + ',' +
           io::format_double(r.val_f1) + '\n';
  }
  return out;
}

}  // namespace airbrake
