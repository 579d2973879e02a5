#pragma once

// Binary classification metrics with Open (1) as the positive class.

#include <cstddef>
#include <cstdint>
#include <span>

#include "airbrake/errors.hpp"

namespace airbrake {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const int> predictions,
                                 std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw PreconditionError("predictions and labels differ in length");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i];
    const int y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1)) {
      throw PreconditionError("labels must be 0 or 1");
    }
    if (p == 1) {
      ++(y == 1 ? cm.tp : cm.fp);
    } else {
      ++(y == 1 ? cm.fn : cm.tn);
    }
  }
  return cm;
}

/// Metrics whose denominator was zero are reported as 0 and flagged.
struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
};

inline ClassificationMetrics f1_accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw PreconditionError("empty confusion matrix");
  ClassificationMetrics m;
  const auto tp = static_cast<double>(cm.tp);
  if (cm.tp + cm.fp == 0) {
    m.precision_degenerate = true;
  } else {
    m.precision = tp / static_cast<double>(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn == 0) {
    m.recall_degenerate = true;
  } else {
    m.recall = tp / static_cast<double>(cm.tp + cm.fn);
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1_degenerate = true;
  }
  m.accuracy =
      static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  return m;
}

}  // namespace airbrake
