#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "comp/learners/dataset.hpp"

namespace comp::learn {

enum class KernelType { Gaussian, Polynomial };

/// Inputs are divided by `scale` before the kernel is applied:
/// gaussian exp(-|u - v|^2), polynomial (1 + u.v)^degree.
struct SvmKernel {
  KernelType type = KernelType::Gaussian;
  int degree = 1;
  double scale = 1.0;

  double operator()(const FeatureRow& a, const FeatureRow& b) const {
    const double inv2 = 1.0 / (scale * scale);
    if (type == KernelType::Gaussian) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < kFeatureCount; ++c) d2 += (a[c] - b[c]) * (a[c] - b[c]);
      return std::exp(-d2 * inv2);
    }
    double dot = 0.0;
    for (std::size_t c = 0; c < kFeatureCount; ++c) dot += a[c] * b[c];
    const double base = 1.0 + dot * inv2;
    double out = 1.0;
    for (int k = 0; k < degree; ++k) out *= base;
    return out;
  }

  std::string name() const {
    return type == KernelType::Gaussian ? "gaussian" : "polynomial" + std::to_string(degree);
  }

  nlohmann::json to_json() const {
    return {{"type", type == KernelType::Gaussian ? "gaussian" : "polynomial"}, {"degree", degree}, {"scale", scale}};
  }
  static SvmKernel from_json(const nlohmann::json& j) {
    SvmKernel k;
    const auto t = j.at("type").get<std::string>();
    if (t != "gaussian" && t != "polynomial") throw std::invalid_argument("SvmKernel: unknown type " + t);
    k.type = t == "gaussian" ? KernelType::Gaussian : KernelType::Polynomial;
    k.degree = j.value("degree", 1);
    k.scale = j.at("scale").get<double>();
    return k;
  }
};

class ImbalancedDegenerate : public std::invalid_argument {
 public:
  ImbalancedDegenerate() : std::invalid_argument("SVM training needs both classes present") {}
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence() : std::runtime_error("SMO iteration cap reached before KKT tolerance") {}
};

class SvmModel {
 public:
  SvmModel() = default;
  SvmModel(SvmKernel kernel, double box, std::vector<FeatureRow> support, std::vector<double> coef, double bias)
      : kernel_(kernel), box_(box), support_(std::move(support)), coef_(std::move(coef)), bias_(bias) {}

  /// sum_i alpha_i y_i K(x_i, x) + b
  double decision_value(const FeatureRow& x) const {
    double f = bias_;
    for (std::size_t i = 0; i < support_.size(); ++i) f += coef_[i] * kernel_(support_[i], x);
    return f;
  }
  int predict(const FeatureRow& x) const { return decision_value(x) >= 0.0 ? 1 : 0; }

  const SvmKernel& kernel() const noexcept { return kernel_; }
  double box() const noexcept { return box_; }
  double bias() const noexcept { return bias_; }
  const std::vector<FeatureRow>& support_vectors() const noexcept { return support_; }
  /// alpha_i y_i per support vector.
  const std::vector<double>& coefficients() const noexcept { return coef_; }
  std::size_t parameter_count() const { return support_.size() * (kFeatureCount + 1) + 1; }

  nlohmann::json to_json() const {
    return {{"family", "svm"}, {"kernel", kernel_.to_json()}, {"box", box_},
            {"support_vectors", support_}, {"coefficients", coef_}, {"bias", bias_}};
  }
  static SvmModel from_json(const nlohmann::json& j) {
    auto sv = j.at("support_vectors").get<std::vector<FeatureRow>>();
    auto coef = j.at("coefficients").get<std::vector<double>>();
    if (sv.size() != coef.size()) throw std::invalid_argument("SvmModel: support/coefficient mismatch");
    return SvmModel(SvmKernel::from_json(j.at("kernel")), j.at("box").get<double>(), std::move(sv), std::move(coef),
                    j.at("bias").get<double>());
  }

 private:
  SvmKernel kernel_;
  double box_ = 1.0;
  std::vector<FeatureRow> support_;
  std::vector<double> coef_;
  double bias_ = 0.0;
};

struct SmoOptions {
  double tolerance = 1e-3;  // maximal KKT violation
  std::size_t max_passes = 10'000;  // working-set updates, each one O(n) selection sweep
};

/// Soft-margin C-SVM dual solved by SMO with second-order working-set selection.
/// Solves min 1/2 a'Qa - e'a subject to 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
inline SvmModel svm_train(const Dataset& data, const SvmKernel& kernel, double box, const SmoOptions& options = {}) {
  if (data.empty()) throw EmptyDataset();
  if (data.single_class()) throw ImbalancedDegenerate();
  if (!(box > 0.0) || !(kernel.scale > 0.0)) throw std::invalid_argument("svm_train: box and scale must be positive");
  const std::size_t n = data.size();
  constexpr double kTau = 1e-12;

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = data.labels[i] ? 1.0 : -1.0;
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) k[i * n + j] = k[j * n + i] = kernel(data.features[i], data.features[j]);
  auto kij = [&](std::size_t i, std::size_t j) { return k[i * n + j]; };

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto upper = [&](std::size_t t) { return alpha[t] >= box; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  bool converged = false;
  for (std::size_t pass = 0; pass < options.max_passes; ++pass) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0 ? !upper(t) : !lower(t)) {
        const double v = -y[t] * grad[t];
        if (v >= gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t j = n;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!(y[t] > 0 ? !lower(t) : !upper(t))) continue;
      const double v = y[t] * grad[t];
      gmax2 = std::max(gmax2, v);
      if (i == n) continue;
      const double grad_diff = gmax + v;
      if (grad_diff > 0.0) {
        double quad = kij(i, i) + kij(t, t) - 2.0 * kij(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < options.tolerance || i == n || j == n) {
      converged = true;
      break;
    }

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    const double qij = y[i] * y[j] * kij(i, j);
    if (y[i] != y[j]) {
      double quad = kij(i, i) + kij(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > box) {
          alpha[i] = box;
          alpha[j] = box - diff;
        }
      } else if (alpha[j] > box) {
        alpha[j] = box;
        alpha[i] = box + diff;
      }
    } else {
      double quad = kij(i, i) + kij(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > box) {
        if (alpha[i] > box) {
          alpha[i] = box;
          alpha[j] = sum - box;
        }
        if (alpha[j] > box) {
          alpha[j] = box;
          alpha[i] = sum - box;
        }
      } else {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = sum;
        }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += y[t] * (y[i] * kij(i, t) * di + y[j] * kij(j, t) * dj);
  }
  if (!converged) throw NoConvergence();

  // Bias from free variables, or the midpoint of the feasible interval when none are free.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      sum_free += yg;
    }
  }
  const double rho = free_count > 0 ? sum_free / static_cast<double>(free_count) : 0.5 * (ub + lb);

  std::vector<FeatureRow> support;
  std::vector<double> coef;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0.0) {
      support.push_back(data.features[t]);
      coef.push_back(alpha[t] * y[t]);
    }
  return SvmModel(kernel, box, std::move(support), std::move(coef), -rho);
}

}  // namespace comp::learn
