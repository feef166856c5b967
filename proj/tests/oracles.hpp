#pragma once

// Reference computations shared by the unit tests and the acceptance run. Each one takes
// a different route to the quantity it checks.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "comp/learners/model_selection.hpp"
#include "comp/phy.hpp"

namespace comp::oracle {

using learn::Dataset;
using learn::MlpModel;
using learn::SvmKernel;

/// Independent route to the per-stream ZF SNR: row norms of the Moore-Penrose pseudo-inverse.
inline std::vector<double> pinv_snr(const ComplexMatrix& h, const std::vector<double>& g, const std::vector<double>& p,
                                    const std::vector<double>& d, double alpha, double sigma2, std::size_t n_t) {
  Eigen::MatrixXcd m(h.rows(), h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c) m(r, c) = h(r, c);
  const Eigen::MatrixXcd w = m.completeOrthogonalDecomposition().pseudoInverse();
  std::vector<double> out;
  for (std::size_t j = 0; j < h.cols(); ++j)
    out.push_back(g[j] * p[j] * std::pow(d[j], -alpha) / (n_t * sigma2) / w.row(j).squaredNorm());
  return out;
}

/// ||A X - I|| in the max-row-sum norm.
inline double residual_inf_norm(const ComplexMatrix& a, const ComplexMatrix& x) {
  const auto prod = a * x;
  double worst = 0.0;
  for (std::size_t r = 0; r < prod.rows(); ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < prod.cols(); ++c) row += std::abs(prod(r, c) - (r == c ? 1.0 : 0.0));
    worst = std::max(worst, row);
  }
  return worst;
}

/// Summed BCE through the forward pass only; the finite-difference side of the check.
inline double forward_loss(const MlpModel& m, const Dataset& d) {
  std::vector<double> p;
  for (const auto& x : d.features) p.push_back(m.forward(x));
  return learn::bce_loss(d.labels, p);
}

/// Dual C-SVM by projected gradient with an exact projection onto {0 <= a <= C, y'a = 0}.
struct DenseQpSolution {
  std::vector<double> alpha;
  double bias = 0.0;
};

inline DenseQpSolution dense_qp(const Dataset& d, const SvmKernel& k, double box) {
  const std::size_t n = d.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = d.labels[i] ? 1.0 : -1.0;
  std::vector<double> q(n * n);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      q[i * n + j] = y[i] * y[j] * k(d.features[i], d.features[j]);
      if (i == j) trace += q[i * n + j];
    }
  auto project = [&](std::vector<double> v) {
    double lo = -1e6, hi = 1e6;
    std::vector<double> a(n);
    for (int it = 0; it < 100; ++it) {
      const double lambda = 0.5 * (lo + hi);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = std::clamp(v[i] - lambda * y[i], 0.0, box);
        s += y[i] * a[i];
      }
      (s > 0 ? lo : hi) = lambda;
    }
    return a;
  };
  std::vector<double> a(n, 0.0), grad(n);
  const double step = 1.0 / trace;
  for (int it = 0; it < 50000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double g = -1.0;
      for (std::size_t j = 0; j < n; ++j) g += q[i * n + j] * a[j];
      grad[i] = g;
    }
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a[i] - step * grad[i];
    const auto next = project(v);
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) moved = std::max(moved, std::abs(next[i] - a[i]));
    a = next;
    if (moved < 1e-13) break;
  }
  DenseQpSolution out{a, 0.0};
  double sum = 0.0, lo = -1e300, hi = 1e300;
  int free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < n; ++j) f += a[j] * y[j] * k(d.features[j], d.features[i]);
    const double r = y[i] - f;  // bias that puts row i exactly on its margin
    if (a[i] > 1e-6 * box && a[i] < box * (1 - 1e-6)) {
      sum += r;
      ++free;
    } else if ((a[i] <= 1e-6 * box) == (y[i] > 0)) {
      lo = std::max(lo, r);  // y f >= 1 needed
    } else {
      hi = std::min(hi, r);
    }
  }
  out.bias = free ? sum / free : 0.5 * (lo + hi);
  return out;
}

}  // namespace comp::oracle
