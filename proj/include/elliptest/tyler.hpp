#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "elliptest/error.hpp"
#include "elliptest/matrix.hpp"
#include "elliptest/sample.hpp"

namespace elliptest {

namespace detail {

/// Lower Cholesky factor; returns false when a pivot drops below the floor.
inline bool cholesky_factor(const matrix& a, matrix& lower, double pivot_floor) {
  const std::size_t p = a.rows();
  lower = matrix(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      if (i == j) {
        if (s <= pivot_floor) return false;
        lower(i, i) = std::sqrt(s);
      } else {
        lower(i, j) = s / lower(j, j);
      }
    }
  }
  return true;
}

inline void cholesky_solve(const matrix& lower, const double* x, double* z) {
  const std::size_t p = lower.rows();
  for (std::size_t i = 0; i < p; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * z[k];
    z[i] = s / lower(i, i);
  }
  for (std::size_t ii = p; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t k = ii + 1; k < p; ++k) s -= lower(k, ii) * z[k];
    z[ii] = s / lower(ii, ii);
  }
}

/// One application of the fixed-point map: (p/n) sum of x x^T / (x^T T^{-1} x).
/// Degeneracy surfaces here, either as a failed factorization backed by a
/// genuinely singular spectrum or as a vanishing quadratic form.
inline matrix scatter_map(const unit_sample& sample, const matrix& t) {
  const std::size_t n = sample.size();
  const std::size_t p = sample.dim();
  matrix lower(p, p);
  if (!cholesky_factor(t, lower, 1e-12 * static_cast<double>(p))) {
    const eigen_decomposition eig = jacobi_eigen_symmetric(t);
    if (eig.values.back() <= 1e-12 * static_cast<double>(p) * eig.values.front())
      throw degenerate_sample_error("tyler_fit: iterate lost rank, sample lies near a subspace");
    throw degenerate_sample_error("tyler_fit: scatter iterate could not be factored");
  }
  matrix m(p, p);
  std::vector<double> z(p);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = sample.point(i);
    cholesky_solve(lower, x, z.data());
    double q = 0.0;
    for (std::size_t j = 0; j < p; ++j) q += x[j] * z[j];
    if (!(q > 1e-300))
      throw degenerate_sample_error("tyler_fit: observation orthogonal to the scatter range");
    const double w = 1.0 / q;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = j; k < p; ++k) m(j, k) += w * x[j] * x[k];
  }
  const double scale = static_cast<double>(p) / static_cast<double>(n);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j; k < p; ++k) {
      m(j, k) *= scale;
      m(k, j) = m(j, k);
    }
  return m;
}

}  // namespace detail

struct tyler_config {
  std::size_t max_iters = 500;
  double tol = 1e-11;
  std::optional<double> trace_target;  // defaults to the dimension
};

struct tyler_result {
  spd_matrix estimate;
  std::size_t iterations;
  double final_residual;
  unit_sample whitened;
};

/// Relative fixed-point defect of a candidate scatter matrix.
inline double tyler_residual(const unit_sample& sample, const spd_matrix& scatter) {
  const matrix mapped = detail::scatter_map(sample, scatter.entries());
  return frob_dist(mapped, scatter.entries()) / scatter.entries().frobenius_norm();
}

/// Distribution-free whitening: rows are pushed through the inverse square
/// root of the scatter and re-projected to the sphere.
inline unit_sample whiten(const unit_sample& sample, const spd_matrix& scatter) {
  if (scatter.dim() != sample.dim())
    throw dimension_mismatch_error("whiten: scatter dimension does not match sample");
  const matrix root = scatter.inv_sqrt().entries();
  return unit_sample::from_raw_rows(sample.rows() * root);
}

/// Fixed-point iteration from the identity. Existence and uniqueness up to
/// scale hold almost surely once n exceeds the dimension, which is enforced
/// up front rather than detected by a stall.
inline tyler_result tyler_fit(const unit_sample& sample, const tyler_config& cfg = {}) {
  const std::size_t n = sample.size();
  const std::size_t p = sample.dim();
  if (p < 2) throw not_enough_samples_error("tyler_fit: dimension must be at least 2");
  if (n <= p) throw not_enough_samples_error("tyler_fit: need more observations than dimensions");
  if (!(cfg.tol > 0.0)) throw non_positive_argument_error("tyler_fit: tol must be positive");

  const double pd = static_cast<double>(p);
  matrix t = matrix::identity(p);
  double step = 0.0;
  double defect = 0.0;
  bool converged = false;
  std::size_t iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    matrix mapped = detail::scatter_map(sample, t);
    const double t_norm = t.frobenius_norm();
    defect = frob_dist(mapped, t) / t_norm;
    mapped *= pd / mapped.trace();
    step = frob_dist(mapped, t) / t_norm;
    t = std::move(mapped);
    if (step <= cfg.tol && defect <= 10.0 * cfg.tol) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged)
    throw no_convergence_error("tyler_fit: fixed-point iteration did not reach tolerance");

  spd_matrix estimate(t);
  const double residual = tyler_residual(sample, estimate);
  unit_sample whitened = whiten(sample, estimate);
  if (cfg.trace_target && *cfg.trace_target > 0.0) {
    matrix scaled = estimate.entries();
    scaled *= *cfg.trace_target / estimate.trace();
    estimate = spd_matrix(std::move(scaled));
  }
  return tyler_result{std::move(estimate), iter, residual, std::move(whitened)};
}

/// Convenience entry for data in general position: rows are projected to the
/// sphere first, which also makes the fit invariant to per-row scaling.
inline tyler_result tyler_fit_raw(const matrix& raw, const tyler_config& cfg = {}) {
  return tyler_fit(unit_sample::from_raw_rows(raw), cfg);
}

}  // namespace elliptest
