#pragma once

// Versioned JSON model files. Parameters are written at full double
// round-trip precision so save -> load is bit-exact.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "airbrake/errors.hpp"
#include "airbrake/io.hpp"
#include "airbrake/neuralnet.hpp"

namespace airbrake {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::ordered_json to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["epsilon"] = cfg.epsilon;
  j["class_weight_closed"] = cfg.class_weights.closed;
  j["class_weight_open"] = cfg.class_weights.open;
  j["seed"] = cfg.seed;
  j["shuffle_each_epoch"] = cfg.shuffle_each_epoch;
  return j;
}

/// Provenance stored alongside the parameters.
struct ModelMeta {
  nlohmann::ordered_json train_config_echo = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
};

template <class Scalar>
nlohmann::ordered_json model_to_json(const Mlp<Scalar>& mlp,
                                     const ModelMeta& meta = {}) {
  mlp.check_shapes();
  nlohmann::ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["layer_dims"] = mlp.layer_dims;
  j["activation"] = {{"hidden", "relu"}, {"output", "softmax"}};
  j["scaler"] = {{"mean", mlp.scaler.mean}, {"std", mlp.scaler.std}};
  auto weights = nlohmann::ordered_json::array();
  auto biases = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    const auto& w = mlp.weights[l];
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        flat.push_back(static_cast<double>(w(r, c)));
      }
    }
    weights.push_back(std::move(flat));
    std::vector<double> b(static_cast<std::size_t>(mlp.biases[l].size()));
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] = static_cast<double>(mlp.biases[l](static_cast<Eigen::Index>(i)));
    }
    biases.push_back(std::move(b));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["train_config_echo"] = meta.train_config_echo;
  j["seed"] = meta.seed;
  return j;
}

template <class Scalar>
std::string model_to_string(const Mlp<Scalar>& mlp, const ModelMeta& meta = {}) {
  return model_to_json(mlp, meta).dump() + "\n";
}

template <class Scalar>
void save_model(const Mlp<Scalar>& mlp, const std::string& path,
                const ModelMeta& meta = {}) {
  io::write_file(path, model_to_string(mlp, meta));
}

/// Parses a model document. Throws CorruptedPayloadError on malformed JSON or
/// missing/ill-typed fields, VersionMismatchError on an unknown
/// format_version, ShapeMismatchError when tensors disagree with layer_dims.
template <class Scalar = double>
Mlp<Scalar> model_from_string(const std::string& text,
                              ModelMeta* meta = nullptr) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptedPayloadError(std::string("model file is not valid JSON: ") +
                                e.what());
  }
  if (!j.is_object() || !j.contains("format_version") ||
      !j["format_version"].is_number_integer()) {
    throw CorruptedPayloadError("model file lacks an integer format_version");
  }
  if (j["format_version"].get<int>() != kModelFormatVersion) {
    throw VersionMismatchError(
        "unsupported model format_version " +
        std::to_string(j["format_version"].get<long long>()) + ", expected " +
        std::to_string(kModelFormatVersion));
  }

  Mlp<Scalar> mlp;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  try {
    mlp.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const auto& act = j.at("activation");
    if (act.at("hidden").get<std::string>() != "relu" ||
        act.at("output").get<std::string>() != "softmax") {
      throw CorruptedPayloadError("unsupported activation tags");
    }
    mlp.scaler.mean = j.at("scaler").at("mean").get<Features>();
    mlp.scaler.std = j.at("scaler").at("std").get<Features>();
    weights = j.at("weights").get<std::vector<std::vector<double>>>();
    biases = j.at("biases").get<std::vector<std::vector<double>>>();
    if (meta != nullptr) {
      meta->train_config_echo =
          j.value("train_config_echo", nlohmann::ordered_json::object());
      meta->seed = j.value("seed", std::uint64_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptedPayloadError(std::string("malformed model field: ") +
                                e.what());
  }

  const auto& dims = mlp.layer_dims;
  if (dims.size() < 2 || weights.size() != dims.size() - 1 ||
      biases.size() != dims.size() - 1) {
    throw ShapeMismatchError("layer count does not match layer_dims");
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (weights[l].size() != dims[l] * dims[l + 1] ||
        biases[l].size() != dims[l + 1]) {
      throw ShapeMismatchError("layer " + std::to_string(l) +
                               " tensor size does not match layer_dims");
    }
    const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
    const auto cols = static_cast<Eigen::Index>(dims[l]);
    typename Mlp<Scalar>::Matrix w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        w(r, c) = static_cast<Scalar>(
            weights[l][static_cast<std::size_t>(r * cols + c)]);
      }
    }
    typename Mlp<Scalar>::Vector b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      b(r) = static_cast<Scalar>(biases[l][static_cast<std::size_t>(r)]);
    }
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(std::move(b));
  }
  mlp.check_shapes();
  return mlp;
}

template <class Scalar = double>
Mlp<Scalar> load_model(const std::string& path, ModelMeta* meta = nullptr) {
  return model_from_string<Scalar>(io::read_file(path), meta);
}

/// FNV-1a over layer_dims, scaler and every parameter (as double).
template <class Scalar>
std::string model_fingerprint(const Mlp<Scalar>& mlp) {
  io::Fnv1a h;
  for (auto d : mlp.layer_dims) h.update_value(static_cast<std::uint64_t>(d));
  for (double x : mlp.scaler.mean) h.update_value(x);
  for (double x : mlp.scaler.std) h.update_value(x);
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    const auto& w = mlp.weights[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      h.update_value(static_cast<double>(w.data()[i]));
    }
    const auto& b = mlp.biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      h.update_value(static_cast<double>(b.data()[i]));
    }
  }
  return h.hex();
}

}  // namespace airbrake
