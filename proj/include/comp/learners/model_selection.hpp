#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "comp/learners/dataset.hpp"
#include "comp/learners/mlp.hpp"
#include "comp/learners/svm.hpp"
#include "comp/numerics.hpp"

namespace comp::learn {

enum class LearnerFamily { Dnn, Svm };

inline std::string to_string(LearnerFamily f) { return f == LearnerFamily::Dnn ? "dnn" : "svm"; }

struct DnnHyper {
  std::size_t depth = 1;
  std::size_t width = 3;
  friend bool operator==(const DnnHyper&, const DnnHyper&) = default;
};

struct SvmHyper {
  SvmKernel kernel;
  double box = 1.0;
};

using Hyperparameters = std::variant<DnnHyper, SvmHyper>;

inline std::string describe(const Hyperparameters& h) {
  if (const auto* d = std::get_if<DnnHyper>(&h))
    return "depth=" + std::to_string(d->depth) + " width=" + std::to_string(d->width);
  const auto& s = std::get<SvmHyper>(h);
  char buf[96];
  std::snprintf(buf, sizeof buf, "kernel=%s scale=%g box=%g", s.kernel.name().c_str(), s.kernel.scale, s.box);
  return buf;
}

/// Depth {1,3,5} x width {3,10}, one shared width for every hidden layer.
inline std::vector<Hyperparameters> dnn_grid() {
  std::vector<Hyperparameters> grid;
  for (std::size_t d : {1, 3, 5})
    for (std::size_t w : {3, 10}) grid.emplace_back(DnnHyper{d, w});
  return grid;
}

/// Kernel {gaussian, polynomial p=1..4} x kernel scale {0.1,1,10} x box constraint {0.1,1,10}.
inline std::vector<Hyperparameters> svm_grid() {
  std::vector<SvmKernel> kernels{{KernelType::Gaussian, 1, 1.0}};
  for (int p = 1; p <= 4; ++p) kernels.push_back({KernelType::Polynomial, p, 1.0});
  std::vector<Hyperparameters> grid;
  for (auto k : kernels)
    for (double scale : {0.1, 1.0, 10.0})
      for (double box : {0.1, 1.0, 10.0}) {
        k.scale = scale;
        grid.emplace_back(SvmHyper{k, box});
      }
  return grid;
}

inline std::vector<Hyperparameters> default_grid(LearnerFamily f) {
  return f == LearnerFamily::Dnn ? dnn_grid() : svm_grid();
}

/// Predicts one class everywhere; stands in when a training set holds a single class.
struct ConstantModel {
  int label = 0;
};

/// A fitted classifier of any family. probability() is the sigmoid output for the MLP and
/// the hard 0/1 decision for the SVM and constant models.
class Classifier {
 public:
  Classifier() = default;
  Classifier(MlpModel m) : model_(std::move(m)) {}
  Classifier(SvmModel m) : model_(std::move(m)) {}
  Classifier(ConstantModel m) : model_(m) {}

  double probability(const FeatureRow& scaled) const {
    return std::visit(
        [&](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, MlpModel>) return m.forward(scaled);
          else if constexpr (std::is_same_v<T, SvmModel>) return static_cast<double>(m.predict(scaled));
          else return static_cast<double>(m.label);
        },
        model_);
  }

  std::size_t parameter_count() const {
    return std::visit(
        [](const auto& m) -> std::size_t {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ConstantModel>) return 1;
          else return m.parameter_count();
        },
        model_);
  }

  bool is_constant() const { return std::holds_alternative<ConstantModel>(model_); }
  const auto& variant() const noexcept { return model_; }

  nlohmann::json to_json() const {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ConstantModel>) return {{"family", "constant"}, {"label", m.label}};
          else return m.to_json();
        },
        model_);
  }

  static Classifier from_json(const nlohmann::json& j) {
    const auto family = j.at("family").get<std::string>();
    if (family == "dnn") return MlpModel::from_json(j);
    if (family == "svm") return SvmModel::from_json(j);
    if (family == "constant") return ConstantModel{j.at("label").get<int>()};
    throw std::invalid_argument("Classifier: unknown family " + family);
  }

 private:
  std::variant<ConstantModel, MlpModel, SvmModel> model_;
};

inline int majority_label(const Dataset& data) { return 2 * data.positives() >= data.size() ? 1 : 0; }

struct FitOptions {
  TrainingSchedule schedule;
  SmoOptions smo;
};

/// Trains one grid point on already-scaled data. A single-class training set gives a
/// constant model for either family.
inline Classifier fit_candidate(const Dataset& scaled, const Hyperparameters& hyper, const FitOptions& options) {
  if (scaled.single_class()) return ConstantModel{majority_label(scaled)};
  if (const auto* d = std::get_if<DnnHyper>(&hyper)) return mlp_train(scaled, d->depth, d->width, options.schedule);
  const auto& s = std::get<SvmHyper>(hyper);
  return svm_train(scaled, s.kernel, s.box, options.smo);
}

inline std::vector<double> predict_all(const Classifier& model, const Dataset& scaled) {
  std::vector<double> out;
  out.reserve(scaled.size());
  for (const auto& row : scaled.features) out.push_back(model.probability(row));
  return out;
}

/// Shuffled partition of [0, n) into k disjoint folds whose sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, RngStream& rng) {
  if (k < 2 || n < k) throw std::invalid_argument("kfold_partition: need k >= 2 and n >= k");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i * k / n].push_back(order[i]);
  return folds;
}

/// Shuffled split; the training part holds round(fraction * n) rows.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(std::size_t n, double fraction,
                                                                                      RngStream& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("train_test_split: fraction in (0,1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const auto cut = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  return {std::vector<std::size_t>(order.begin(), order.begin() + cut),
          std::vector<std::size_t>(order.begin() + cut, order.end())};
}

struct CandidateScore {
  Hyperparameters hyper;
  std::vector<double> fold_errors;
  double mean_error = 0.0;
  double mean_parameters = 0.0;
};

struct FitReport {
  Classifier model;
  FeatureScaler scaler;
  Hyperparameters chosen;
  double xi = 1.0;  // held-out misclassification
  std::vector<CandidateScore> candidates;
  std::vector<double> test_predictions;
};

struct GridSearchOptions {
  std::size_t folds = 5;
  double train_fraction = 0.7;
  FitOptions fit;
  std::uint64_t seed = 1;
};

/// Holds out (1 - train_fraction) as a test set, scores every grid point by k-fold CV on
/// the training part (scaling fitted per fold), refits the winner on the whole training
/// part and reports its misclassification on the held-out rows.
inline FitReport grid_search_cv(const Dataset& raw, const std::vector<Hyperparameters>& grid,
                                const GridSearchOptions& options) {
  if (grid.empty()) throw std::invalid_argument("grid_search_cv: empty grid");
  RngStream rng(options.seed);
  auto [train_rows, test_rows] = train_test_split(raw.size(), options.train_fraction, rng);
  if (train_rows.size() < options.folds || test_rows.empty() || options.folds < 2) throw EmptyDataset();
  const Dataset train = raw.subset(train_rows);
  const Dataset test = raw.subset(test_rows);
  const auto folds = kfold_partition(train.size(), options.folds, rng);

  struct FoldData {
    Dataset fit, validate;
  };
  std::vector<FoldData> fold_data;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> fit_rows;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) fit_rows.insert(fit_rows.end(), folds[g].begin(), folds[g].end());
    const Dataset fit_raw = train.subset(fit_rows);
    const auto scaler = FeatureScaler::fit(fit_raw);
    fold_data.push_back({scaler.transform(fit_raw), scaler.transform(train.subset(folds[f]))});
  }

  FitReport report;
  std::size_t best = 0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    CandidateScore score{grid[c], {}, 0.0, 0.0};
    FitOptions fit = options.fit;
    for (std::size_t f = 0; f < fold_data.size(); ++f) {
      fit.schedule.seed = mix64(options.seed ^ (c * 131 + f + 1));
      Classifier model;
      try {
        model = fit_candidate(fold_data[f].fit, grid[c], fit);
      } catch (const std::runtime_error&) {  // NoConvergence, DivergedTraining
        model = ConstantModel{majority_label(fold_data[f].fit)};
      }
      score.fold_errors.push_back(misclassification(predict_all(model, fold_data[f].validate),
                                                    fold_data[f].validate.labels));
      score.mean_parameters += static_cast<double>(model.parameter_count()) / static_cast<double>(fold_data.size());
    }
    score.mean_error = std::accumulate(score.fold_errors.begin(), score.fold_errors.end(), 0.0) /
                       static_cast<double>(score.fold_errors.size());
    report.candidates.push_back(std::move(score));
    const auto& cur = report.candidates.back();
    const auto& inc = report.candidates[best];
    if (c > 0 && (cur.mean_error < inc.mean_error ||
                  (cur.mean_error == inc.mean_error && cur.mean_parameters < inc.mean_parameters)))
      best = c;
  }

  report.chosen = grid[best];
  report.scaler = FeatureScaler::fit(train);
  FitOptions fit = options.fit;
  fit.schedule.seed = mix64(options.seed ^ 0xfeedULL);
  const Dataset train_scaled = report.scaler.transform(train);
  try {
    report.model = fit_candidate(train_scaled, report.chosen, fit);
  } catch (const std::runtime_error&) {
    report.model = ConstantModel{majority_label(train_scaled)};
  }
  report.test_predictions = predict_all(report.model, report.scaler.transform(test));
  report.xi = misclassification(report.test_predictions, test.labels);
  return report;
}

}  // namespace comp::learn
