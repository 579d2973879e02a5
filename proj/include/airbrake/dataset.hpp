#pragma once

// Supervised dataset built from simulated flights: 5 sensor features per
// sample and the oracle's Open/Closed label.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "airbrake/errors.hpp"
#include "airbrake/flight.hpp"
#include "airbrake/io.hpp"

namespace airbrake {

inline constexpr std::size_t kNumFeatures = 5;
using Features = std::array<double, kNumFeatures>;

inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "altitude_m", "v_vertical_mps", "accel_x_mps2", "accel_y_mps2",
    "accel_z_mps2"};

inline constexpr int kClosed = 0;
inline constexpr int kOpen = 1;

struct Sample {
  Features features{};
  int label = kClosed;

  friend bool operator==(const Sample&, const Sample&) = default;
};

inline Features features_of(const FlightState& s) {
  return {s.altitude, s.v_vertical, s.accel[0], s.accel[1], s.accel[2]};
}

/// One sample per ascending step (v > 0) of each trajectory, keeping every
/// `stride`-th ascending step. Labels come from the oracle with airbrakes
/// treated as stowed.
inline std::vector<Sample> extract_samples(
    const std::vector<Trajectory>& trajectories, const RocketModel& model,
    double h, std::size_t stride = 1) {
  if (trajectories.empty()) {
    throw EmptyDatasetError("no trajectories to extract samples from");
  }
  if (stride == 0) throw PreconditionError("stride must be >= 1");
  std::vector<Sample> out;
  for (const auto& traj : trajectories) {
    std::size_t ascending = 0;
    for (const auto& state : traj.samples) {
      if (!(state.v_vertical > 0.0)) continue;
      if (ascending++ % stride != 0) continue;
      out.push_back({features_of(state), oracle_label(model, state, h)});
    }
  }
  return out;
}

inline std::size_t count_label(const std::vector<Sample>& samples, int label) {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(),
                    [label](const Sample& s) { return s.label == label; }));
}

/// Fraction of samples labeled Open.
inline double open_fraction(const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  return static_cast<double>(count_label(samples, kOpen)) /
         static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Standardization

struct Scaler {
  Features mean{0, 0, 0, 0, 0};
  Features std{1, 1, 1, 1, 1};

  Features apply(const Features& x) const {
    Features out;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      out[j] = (x[j] - mean[j]) / std[j];
    }
    return out;
  }

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

/// Per-feature mean and population (divide-by-N) standard deviation.
inline Scaler fit_scaler(const std::vector<Sample>& samples) {
  if (samples.size() < 2) {
    throw PreconditionError("fit_scaler needs at least 2 samples");
  }
  Scaler s;
  const double n = static_cast<double>(samples.size());
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    double sum = 0.0;
    for (const auto& x : samples) sum += x.features[j];
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& x : samples) {
      const double d = x.features[j] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / n);
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw DegenerateFeatureError(kFeatureNames[j]);
    }
    s.mean[j] = mean;
    s.std[j] = sd;
  }
  return s;
}

inline std::vector<Sample> apply_scaler(const Scaler& scaler,
                                        std::vector<Sample> samples) {
  for (auto& s : samples) s.features = scaler.apply(s.features);
  return samples;
}

// ---------------------------------------------------------------------------
// SMOTE

/// Balances the classes by synthesizing minority samples
/// x + u * (x_nn - x), u ~ U(0, 1), where x_nn is one of the k nearest
/// minority neighbours of x (Euclidean). Originals come first, verbatim.
///
/// Synthetic sample j uses base point j mod n_minority and its own generator
/// seeded from (seed, j), so the result does not depend on evaluation order.
inline std::vector<Sample> smote_oversample(const std::vector<Sample>& samples,
                                            std::size_t k, std::uint64_t seed) {
  const std::size_t n_open = count_label(samples, kOpen);
  const std::size_t n_closed = samples.size() - n_open;
  if (n_open == n_closed) return samples;

  const int minority_label = n_open < n_closed ? kOpen : kClosed;
  std::vector<const Features*> minority;
  for (const auto& s : samples) {
    if (s.label == minority_label) minority.push_back(&s.features);
  }
  const std::size_t m = minority.size();
  if (m < 2) {
    throw InsufficientMinorityError(
        "SMOTE needs at least 2 minority samples, got " + std::to_string(m));
  }
  if (k < 1 || k >= m) {
    throw PreconditionError("SMOTE requires 1 <= k < minority count");
  }

  // k nearest minority neighbours of every minority point; ties by index.
  std::vector<std::vector<std::size_t>> neighbours(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < m; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const double d = (*minority[i])[f] - (*minority[j])[f];
        d2 += d * d;
      }
      dist.emplace_back(d2, j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k),
                      dist.end());
    for (std::size_t r = 0; r < k; ++r) neighbours[i].push_back(dist[r].second);
  }

  const std::size_t needed = std::max(n_open, n_closed) - m;
  std::vector<Sample> out = samples;
  out.reserve(samples.size() + needed);
  for (std::size_t j = 0; j < needed; ++j) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(j)};
    std::mt19937_64 rng(seq);
    const std::size_t base = j % m;
    const std::size_t nn = neighbours[base][rng() % k];
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    Sample s;
    s.label = minority_label;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const double x = (*minority[base])[f];
      s.features[f] = x + u * ((*minority[nn])[f] - x);
    }
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitDataset {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
  std::uint64_t seed = 0;
};

namespace detail {

// Rounds the expected per-split counts of one class (count * size / n) to
// floor or ceil so they sum to `count`. Splits whose expected count lies in
// (0, 1) are rounded up first, then the largest remainders.
inline std::array<std::size_t, 3> apportion_class(
    std::size_t count, const std::array<std::size_t, 3>& sizes, std::size_t n) {
  std::array<std::size_t, 3> alloc{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double ideal = static_cast<double>(count) *
                         static_cast<double>(sizes[s]) / static_cast<double>(n);
    alloc[s] = static_cast<std::size_t>(std::floor(ideal));
    rem[s] = ideal - static_cast<double>(alloc[s]);
    if (alloc[s] == 0 && rem[s] > 0.0) rem[s] += 1.0;  // priority
    used += alloc[s];
  }
  while (used < count) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < 3; ++s) {
      if (rem[s] > rem[best]) best = s;
    }
    ++alloc[best];
    rem[best] = -1.0;
    ++used;
  }
  return alloc;
}

}  // namespace detail

/// Stratified 7:2:1 split: test = round(0.1 N), validation = round(0.2 N),
/// train = the rest. The smaller class is spread over the splits by rounding
/// its expected share in each split up or down, so every class is within one
/// sample of the global proportion in every split. A class with at least 3
/// samples that this rounding leaves out of a split raises
/// StratificationError.
inline SplitDataset split_dataset(const std::vector<Sample>& samples,
                                  std::uint64_t seed) {
  const std::size_t n = samples.size();
  if (n < 10) throw PreconditionError("split_dataset needs at least 10 samples");

  const auto n_test = static_cast<std::size_t>(std::llround(0.1 * n));
  const auto n_val = static_cast<std::size_t>(std::llround(0.2 * n));
  const std::array<std::size_t, 3> sizes{n_test, n_val, n - n_test - n_val};
  const std::array<std::size_t, 2> counts{count_label(samples, kClosed),
                                          count_label(samples, kOpen)};

  // alloc[c][s]: samples of class c in split s (test, validation, train).
  const int minority = counts[kOpen] <= counts[kClosed] ? kOpen : kClosed;
  std::array<std::array<std::size_t, 3>, 2> alloc{};
  alloc[minority] = detail::apportion_class(counts[minority], sizes, n);
  for (std::size_t s = 0; s < 3; ++s) {
    alloc[1 - minority][s] = sizes[s] - alloc[minority][s];
  }

  std::mt19937_64 rng(seed);
  SplitDataset out;
  out.seed = seed;
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (samples[i].label == c) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t t = alloc[c][0];
    const std::size_t v = alloc[c][1];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Sample& s = samples[idx[i]];
      if (i < t) {
        out.test.push_back(s);
      } else if (i < t + v) {
        out.validation.push_back(s);
      } else {
        out.train.push_back(s);
      }
    }
    for (std::size_t s = 0; s < 3; ++s) {
      if (idx.size() >= 3 && sizes[s] >= 2 && alloc[c][s] == 0) {
        throw StratificationError("class " + std::to_string(c) +
                                  " missing from a split");
      }
    }
  }
  std::shuffle(out.train.begin(), out.train.end(), rng);
  std::shuffle(out.validation.begin(), out.validation.end(), rng);
  std::shuffle(out.test.begin(), out.test.end(), rng);
  return out;
}

// ---------------------------------------------------------------------------
// CSV persistence

inline constexpr const char* kDatasetCsvHeader =
    "altitude_m,v_vertical_mps,accel_x_mps2,accel_y_mps2,accel_z_mps2,"
    "airbrake_state";

inline std::string dataset_csv(const std::vector<Sample>& samples) {
  std::string out = kDatasetCsvHeader;
  out += '\n';
  for (const auto& s : samples) {
    for (double x : s.features) {
      out += io::format_double(x);
      out += ',';
    }
    out += s.label == kOpen ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::vector<Sample>& samples,
                      const std::string& path) {
  io::write_file(path, dataset_csv(samples));
}

inline std::vector<Sample> parse_dataset_csv(std::string_view text) {
  std::vector<Sample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!saw_header) {
      if (line != kDatasetCsvHeader) {
        throw SchemaError(line_no, "unexpected dataset header");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = io::split(line, ',');
    if (fields.size() != kNumFeatures + 1) {
      throw SchemaError(line_no, "expected 6 columns, found " +
                                     std::to_string(fields.size()));
    }
    Sample s;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      const auto v = io::parse_double(fields[j]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(line_no, std::string("bad value in column ") +
                                      kFeatureNames[j]);
      }
      s.features[j] = *v;
    }
    if (fields.back() == "0") {
      s.label = kClosed;
    } else if (fields.back() == "1") {
      s.label = kOpen;
    } else {
      throw ParseError(line_no, "airbrake_state must be 0 or 1");
    }
    out.push_back(s);
  }
  if (!saw_header) throw SchemaError(1, "missing dataset header");
  return out;
}

inline std::vector<Sample> read_csv(const std::string& path) {
  return parse_dataset_csv(io::read_file(path));
}

}  // namespace airbrake
