#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace comp {

using Complex = std::complex<double>;

/// Raised when H*H is too ill-conditioned for zero-forcing.
class SingularChannel : public std::runtime_error {
 public:
  explicit SingularChannel(double condition)
      : std::runtime_error("Gram matrix condition estimate " + std::to_string(condition) +
                           " exceeds limit"),
        condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Dense row-major complex matrix sized for the handful of antennas a link uses.
class ComplexMatrix {
 public:
  ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("ComplexMatrix: empty dimension");
  }
  ComplexMatrix(std::size_t rows, std::size_t cols, std::initializer_list<Complex> entries)
      : ComplexMatrix(rows, cols) {
    if (entries.size() != rows * cols) throw std::invalid_argument("ComplexMatrix: entry count");
    std::copy(entries.begin(), entries.end(), data_.begin());
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const Complex> entries() const noexcept { return data_; }

  /// Columns [first, first + count) as a new matrix.
  ComplexMatrix columns(std::size_t first, std::size_t count) const {
    if (first + count > cols_ || count == 0) throw std::out_of_range("ComplexMatrix::columns");
    ComplexMatrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
    return out;
  }

  bool all_finite() const {
    for (const auto& z : data_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Complex> data_;
};

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("ComplexMatrix multiply: shape mismatch");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline ComplexMatrix hermitian(const ComplexMatrix& m) {
  ComplexMatrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = std::conj(m(r, c));
  return out;
}

/// Largest absolute entry of (a - b).
inline double max_abs_difference(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_difference: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i)
    worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
  return worst;
}

inline constexpr double kSingularConditionLimit = 1e12;

/// Inverse of a square matrix by Gauss-Jordan elimination with partial pivoting.
/// The condition estimate is the max/min pivot magnitude ratio.
inline ComplexMatrix invert(const ComplexMatrix& a, double condition_limit = kSingularConditionLimit) {
  if (a.rows() != a.cols()) throw std::invalid_argument("invert: matrix not square");
  const std::size_t n = a.rows();
  ComplexMatrix work = a;
  ComplexMatrix inv = ComplexMatrix::identity(n);
  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    const double magnitude = std::abs(work(pivot, col));
    max_pivot = std::max(max_pivot, magnitude);
    min_pivot = std::min(min_pivot, magnitude);
    if (magnitude == 0.0 || max_pivot / min_pivot > condition_limit)
      throw SingularChannel(magnitude == 0.0 ? std::numeric_limits<double>::infinity()
                                             : max_pivot / min_pivot);
    if (pivot != col)
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(work(col, c), work(pivot, c));
        std::swap(inv(col, c), inv(pivot, c));
      }
    const Complex scale = 1.0 / work(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      work(col, c) *= scale;
      inv(col, c) *= scale;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const Complex factor = work(r, col);
      if (factor == Complex{}) continue;
      for (std::size_t c = 0; c < n; ++c) {
        work(r, c) -= factor * work(col, c);
        inv(r, c) -= factor * inv(col, c);
      }
    }
  }
  return inv;
}

/// (H*H)^{-1}, the core of the zero-forcing combiner (H*H)^{-1} H*.
/// Throws SingularChannel when the Gram matrix is numerically rank deficient.
inline ComplexMatrix gram_inverse(const ComplexMatrix& h) {
  if (h.rows() < h.cols()) throw SingularChannel(std::numeric_limits<double>::infinity());
  ComplexMatrix gram = hermitian(h) * h;
  ComplexMatrix inv = invert(gram);
  // Symmetrize away rounding so the result is exactly Hermitian with a real diagonal.
  for (std::size_t i = 0; i < inv.rows(); ++i) {
    inv(i, i) = Complex(inv(i, i).real(), 0.0);
    for (std::size_t j = i + 1; j < inv.cols(); ++j) {
      const Complex avg = 0.5 * (inv(i, j) + std::conj(inv(j, i)));
      inv(i, j) = avg;
      inv(j, i) = std::conj(avg);
    }
  }
  return inv;
}

/// Zero-forcing combiner W = (H*H)^{-1} H*.
inline ComplexMatrix zf_combiner(const ComplexMatrix& h) { return gram_inverse(h) * hermitian(h); }

// ---------------------------------------------------------------------------
// Random numbers

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Reproducible random stream: std::mt19937_64 (output fully specified by the C++
/// standard) with hand-written uniform and normal transforms, so draws are identical
/// across standard libraries. Substreams are keyed by SplitMix64-mixed tags.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent stream for a (tag, a, b) key, e.g. ("fading", ue, tti).
  RngStream substream(std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0) const {
    return RngStream(mix64(mix64(mix64(seed_ ^ mix64(tag)) ^ a) ^ (b + 0x5851f42d4c957f2dULL)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::index: empty range");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal by the Box-Muller transform (cached second variate).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Circularly symmetric standard complex Gaussian, E|z|^2 = 1.
  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[index(i)]);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// i.i.d. CN(0,1) entries: an n_r x n_t Rayleigh fading channel.
inline ComplexMatrix sample_rayleigh_channel(RngStream& rng, std::size_t n_r, std::size_t n_t) {
  ComplexMatrix h(n_r, n_t);
  for (std::size_t r = 0; r < n_r; ++r)
    for (std::size_t c = 0; c < n_t; ++c) h(r, c) = rng.complex_normal();
  return h;
}

}  // namespace comp
