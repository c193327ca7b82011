#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "elliptest/error.hpp"
#include "elliptest/matrix.hpp"
#include "elliptest/rng.hpp"
#include "elliptest/sample.hpp"

namespace elliptest {

namespace detail {

inline void fill_gaussian_row(matrix& m, std::size_t i, philox_stream& stream) {
  for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = stream.next_gaussian();
}

inline matrix gaussian_matrix(std::size_t n, std::size_t p, philox_stream& stream) {
  matrix g(n, p);
  for (std::size_t i = 0; i < n; ++i) fill_gaussian_row(g, i, stream);
  return g;
}

}  // namespace detail

inline unit_sample sample_uniform_sphere(std::size_t p, std::size_t n, seed_spec seed) {
  if (p < 1 || n < 1)
    throw non_positive_argument_error("sample_uniform_sphere: p and n must be positive");
  philox_stream stream(seed);
  return unit_sample::from_raw_rows(detail::gaussian_matrix(n, p, stream));
}

/// Angular central Gaussian draws: a centred Gaussian with scatter omega,
/// radially projected onto the sphere.
inline unit_sample sample_acg(const spd_matrix& omega, std::size_t n, seed_spec seed) {
  if (n < 1) throw non_positive_argument_error("sample_acg: n must be positive");
  const matrix root = omega.sqrt().entries();
  philox_stream stream(seed);
  matrix rows = detail::gaussian_matrix(n, omega.dim(), stream);
  return unit_sample::from_raw_rows(rows * root.transpose());
}

/// Radius distribution for elliptical draws. The chi law reproduces the
/// Gaussian; student mixes in an independent chi-square denominator; custom
/// interpolates a tabulated quantile function on an even probability grid.
class radial_law {
 public:
  static radial_law chi() { return radial_law(kind::chi, 0.0, {}); }

  static radial_law student(double dof) {
    if (!(dof > 0.0)) throw non_positive_argument_error("radial_law: dof must be positive");
    return radial_law(kind::student, dof, {});
  }

  static radial_law from_quantiles(std::vector<double> grid) {
    if (grid.size() < 2)
      throw non_positive_argument_error("radial_law: quantile grid needs at least 2 points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(grid[i] >= 0.0) || (i > 0 && grid[i] < grid[i - 1]))
        throw non_positive_argument_error("radial_law: quantile grid must be non-negative and non-decreasing");
    }
    return radial_law(kind::custom, 0.0, std::move(grid));
  }

  double draw(philox_stream& stream, std::size_t p) const {
    switch (kind_) {
      case kind::chi:
        return std::sqrt(stream.next_chisq(static_cast<double>(p)));
      case kind::student: {
        const double num = stream.next_chisq(static_cast<double>(p));
        const double den = stream.next_chisq(dof_) / dof_;
        return std::sqrt(num / den);
      }
      case kind::custom: {
        const double u = stream.next_double() * static_cast<double>(grid_.size() - 1);
        const std::size_t lo = std::min(static_cast<std::size_t>(u), grid_.size() - 2);
        const double frac = u - static_cast<double>(lo);
        return grid_[lo] + frac * (grid_[lo + 1] - grid_[lo]);
      }
    }
    return 0.0;
  }

 private:
  enum class kind { chi, student, custom };

  radial_law(kind k, double dof, std::vector<double> grid)
      : kind_(k), dof_(dof), grid_(std::move(grid)) {}

  kind kind_;
  double dof_;
  std::vector<double> grid_;
};

/// Elliptical draws y = mu + r * omega^(1/2) w with w uniform on the sphere
/// and r from the given radial law. Returned rows live in R^p, not on the
/// sphere; normalization is the caller's decision.
inline matrix sample_elliptical(const std::vector<double>& mu, const spd_matrix& omega,
                                const radial_law& radial, std::size_t n, seed_spec seed) {
  const std::size_t p = omega.dim();
  if (mu.size() != p) throw dimension_mismatch_error("sample_elliptical: mu has wrong length");
  if (n < 1) throw non_positive_argument_error("sample_elliptical: n must be positive");
  const matrix root = omega.sqrt().entries();
  philox_stream stream(seed);
  matrix out(n, p);
  std::vector<double> g(p);
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      g[j] = stream.next_gaussian();
      norm2 += g[j] * g[j];
    }
    const double norm = std::sqrt(norm2);
    if (!(norm > 1e-150)) throw degenerate_sample_error("sample_elliptical: degenerate direction");
    const double r = radial.draw(stream, p);
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += root(j, k) * g[k];
      out(i, j) = mu[j] + r * s / norm;
    }
  }
  return out;
}

/// Location-shifted alternative used in the power study: spherical directions
/// scaled to unit radius, displaced by offset_scale along the diagonal.
inline matrix sample_offset_alternative(std::size_t p, std::size_t n, double offset_scale,
                                        const spd_matrix& omega, seed_spec seed) {
  if (omega.dim() != p)
    throw dimension_mismatch_error("sample_offset_alternative: omega has wrong dimension");
  std::vector<double> mu(p, offset_scale / std::sqrt(static_cast<double>(p)));
  // radius identically one: a two-point grid with equal endpoints
  const radial_law unit_radius = radial_law::from_quantiles({1.0, 1.0});
  return sample_elliptical(mu, omega, unit_radius, n, seed);
}

}  // namespace elliptest
