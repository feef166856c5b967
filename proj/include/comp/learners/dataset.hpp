#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace comp::learn {

/// Two learning features: CSI-RSRP (dBm) and CQI.
inline constexpr std::size_t kFeatureCount = 2;
using FeatureRow = std::array<double, kFeatureCount>;

class EmptyDataset : public std::invalid_argument {
 public:
  EmptyDataset() : std::invalid_argument("dataset has too few rows") {}
};

class LengthMismatch : public std::invalid_argument {
 public:
  LengthMismatch() : std::invalid_argument("length mismatch") {}
};

struct Dataset {
  std::vector<FeatureRow> features;
  std::vector<int> labels;  // 0 or 1

  std::size_t size() const noexcept { return features.size(); }
  bool empty() const noexcept { return features.empty(); }

  void push_back(FeatureRow x, int y) {
    features.push_back(x);
    labels.push_back(y);
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features.reserve(rows.size());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(features.at(r), labels.at(r));
    return out;
  }

  std::size_t positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  }
  bool single_class() const { return positives() == 0 || positives() == size(); }
};

/// Min-max scaler to [0, 1]. Constant columns map to 0.5; out-of-range values are clamped.
struct FeatureScaler {
  FeatureRow lo{};
  FeatureRow hi{};

  static FeatureScaler fit(const Dataset& data) {
    if (data.size() < 2) throw EmptyDataset();
    FeatureScaler s;
    s.lo.fill(std::numeric_limits<double>::infinity());
    s.hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto& row : data.features)
      for (std::size_t c = 0; c < kFeatureCount; ++c) {
        s.lo[c] = std::min(s.lo[c], row[c]);
        s.hi[c] = std::max(s.hi[c], row[c]);
      }
    return s;
  }

  FeatureRow transform(const FeatureRow& row) const {
    FeatureRow out{};
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (!(hi[c] > lo[c])) {
        out[c] = 0.5;
        continue;
      }
      out[c] = std::clamp((row[c] - lo[c]) / (hi[c] - lo[c]), 0.0, 1.0);
    }
    return out;
  }

  Dataset transform(const Dataset& data) const {
    Dataset out;
    out.labels = data.labels;
    out.features.reserve(data.size());
    for (const auto& row : data.features) out.features.push_back(transform(row));
    return out;
  }

  nlohmann::json to_json() const { return {{"min", lo}, {"max", hi}}; }
  static FeatureScaler from_json(const nlohmann::json& j) {
    FeatureScaler s;
    s.lo = j.at("min").get<FeatureRow>();
    s.hi = j.at("max").get<FeatureRow>();
    return s;
  }
};

/// Fits bounds on `data` and returns the scaled copy together with the scaler.
inline std::pair<Dataset, FeatureScaler> scale_features(const Dataset& data) {
  auto scaler = FeatureScaler::fit(data);
  return {scaler.transform(data), scaler};
}

/// Fraction of positions where thresholded predictions disagree with labels.
inline double misclassification(std::span<const double> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw LengthMismatch();
  if (labels.empty()) throw EmptyDataset();
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += ((predictions[i] >= 0.5 ? 1 : 0) != labels[i]);
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

}  // namespace comp::learn
