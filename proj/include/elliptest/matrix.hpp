#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "elliptest/error.hpp"

namespace elliptest {

/// Minimal dense row-major matrix. Only what the estimator pipeline needs;
/// dimensions beyond a few hundred are out of scope.
class matrix {
 public:
  matrix() = default;
  matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static matrix identity(std::size_t n) {
    matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  matrix transpose() const {
    matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  matrix& operator+=(const matrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  matrix& operator-=(const matrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  matrix& operator*=(double c) {
    for (double& v : data_) v *= c;
    return *this;
  }

  friend matrix operator+(matrix a, const matrix& b) { return a += b; }
  friend matrix operator-(matrix a, const matrix& b) { return a -= b; }
  friend matrix operator*(matrix a, double c) { return a *= c; }
  friend matrix operator*(double c, matrix a) { return a *= c; }

  friend matrix operator*(const matrix& a, const matrix& b) {
    if (a.cols_ != b.rows_) throw dimension_mismatch_error("matrix product shape mismatch");
    matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    }
    return c;
  }

 private:
  void check_same_shape(const matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw dimension_mismatch_error("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double frob_dist(const matrix& a, const matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw dimension_mismatch_error("frob_dist: shape mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) {
    const double d = a.data()[k] - b.data()[k];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Eigendecomposition of a symmetric matrix: values descending, columns of
/// `vectors` are the matching orthonormal eigenvectors.
struct eigen_decomposition {
  std::vector<double> values;
  matrix vectors;
};

/// Cyclic Jacobi for symmetric matrices. Converges quadratically once the
/// off-diagonal mass is small; plenty for the moderate dimensions in scope.
inline eigen_decomposition jacobi_eigen_symmetric(const matrix& input, int max_sweeps = 64) {
  const std::size_t n = input.rows();
  matrix a = input;
  matrix v = matrix::identity(n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  const double frob = std::max(input.frobenius_norm(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= 1e-15 * frob) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  eigen_decomposition eig;
  eig.values.resize(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });
  eig.vectors = matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    eig.values[j] = diag[order[j]];
    for (std::size_t i = 0; i < n; ++i) eig.vectors(i, j) = v(i, order[j]);
  }
  return eig;
}

/// Symmetric positive-definite matrix with its eigendecomposition attached.
/// Immutable after construction; eigenvalue validation is relative to the
/// largest eigenvalue so the whole pipeline stays scale invariant.
class spd_matrix {
 public:
  explicit spd_matrix(matrix entries) {
    const std::size_t p = entries.rows();
    if (p == 0 || entries.cols() != p)
      throw dimension_mismatch_error("spd_matrix: entries must be square and non-empty");
    double asym = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) {
        const double d = entries(i, j) - entries(j, i);
        asym += 2.0 * d * d;
      }
    const double frob = std::max(entries.frobenius_norm(), 1e-300);
    if (std::sqrt(asym) > 1e-12 * frob)
      throw not_symmetric_error("spd_matrix: entries are not symmetric");
    // symmetrize exactly so the eigensolver sees a symmetric input
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) {
        const double m = 0.5 * (entries(i, j) + entries(j, i));
        entries(i, j) = m;
        entries(j, i) = m;
      }
    eig_ = jacobi_eigen_symmetric(entries);
    if (eig_.values.back() <= static_cast<double>(p) * 1e-12 * eig_.values.front())
      throw not_positive_definite_error("spd_matrix: smallest eigenvalue is not positive");
    entries_ = std::move(entries);
  }

  static spd_matrix identity(std::size_t p) { return spd_matrix(matrix::identity(p)); }

  std::size_t dim() const { return entries_.rows(); }
  const matrix& entries() const { return entries_; }
  const eigen_decomposition& eig() const { return eig_; }
  double trace() const { return entries_.trace(); }
  double min_eigenvalue() const { return eig_.values.back(); }
  double max_eigenvalue() const { return eig_.values.front(); }

  /// V f(diag) V^T for a spectral map f with positive values.
  spd_matrix spectral_map(double (*f)(double)) const {
    const std::size_t p = dim();
    matrix out(p, p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < p; ++k)
          s += eig_.vectors(i, k) * f(eig_.values[k]) * eig_.vectors(j, k);
        out(i, j) = s;
        out(j, i) = s;
      }
    return spd_matrix(std::move(out));
  }

  spd_matrix inverse() const {
    return spectral_map(+[](double x) { return 1.0 / x; });
  }
  spd_matrix sqrt() const {
    return spectral_map(+[](double x) { return std::sqrt(x); });
  }
  spd_matrix inv_sqrt() const {
    return spectral_map(+[](double x) { return 1.0 / std::sqrt(x); });
  }

 private:
  matrix entries_;
  eigen_decomposition eig_;
};

inline spd_matrix spd_from_entries(const matrix& entries) { return spd_matrix(entries); }

inline double frob_dist(const spd_matrix& a, const spd_matrix& b) {
  return frob_dist(a.entries(), b.entries());
}

}  // namespace elliptest
