#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "elliptest/error.hpp"
#include "elliptest/rng.hpp"
#include "elliptest/sample.hpp"
#include "elliptest/samplers.hpp"
#include "elliptest/special.hpp"

namespace elliptest {

namespace detail {

struct pair_sums {
  double psi = 0.0;   // sum of arccos(x_i . x_j) over i < j
  double sine = 0.0;  // sum of sqrt(1 - (x_i . x_j)^2) over i < j
  double sq = 0.0;    // sum of (x_i . x_j)^2 over i < j
};

inline pair_sums accumulate_pairs(const unit_sample& sample) {
  const std::size_t n = sample.size();
  const std::size_t p = sample.dim();
  pair_sums sums;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = sample.point(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = sample.point(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < p; ++k) dot += xi[k] * xj[k];
      dot = std::clamp(dot, -1.0, 1.0);
      sums.psi += std::acos(dot);
      sums.sine += std::sqrt(std::max(0.0, 1.0 - dot * dot));
      sums.sq += dot * dot;
    }
  }
  return sums;
}

/// (Gamma(alpha + 1/2) / Gamma(alpha + 1))^2 with alpha = p/2 - 1; the
/// normalizer that gives the sine statistic mean one half in any dimension.
inline double sine_normalizer_sq(std::size_t p) {
  const double alpha = 0.5 * static_cast<double>(p) - 1.0;
  const double lg = std::lgamma(alpha + 0.5) - std::lgamma(alpha + 1.0);
  return std::exp(2.0 * lg);
}

}  // namespace detail

inline std::vector<double> pairwise_angles(const unit_sample& sample) {
  const std::size_t n = sample.size();
  const std::size_t p = sample.dim();
  std::vector<double> angles;
  angles.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < p; ++k) dot += sample.point(i)[k] * sample.point(j)[k];
      angles.push_back(std::acos(std::clamp(dot, -1.0, 1.0)));
    }
  return angles;
}

inline double ajne(const unit_sample& sample) {
  const double n = static_cast<double>(sample.size());
  return 0.25 * n - detail::accumulate_pairs(sample).psi / (detail::pi * n);
}

inline double gine(const unit_sample& sample) {
  const double n = static_cast<double>(sample.size());
  const double p = static_cast<double>(sample.dim());
  const double c2 = detail::sine_normalizer_sq(sample.dim());
  return 0.5 * n - (p - 1.0) / (2.0 * n) * c2 * detail::accumulate_pairs(sample).sine;
}

/// Tr(S^2) for S the sample second-moment matrix of the rows. Equals 1/p
/// exactly when the rows form a tight frame, and exceeds it otherwise.
inline double trace_s2(const unit_sample& sample) {
  const double n = static_cast<double>(sample.size());
  return (n + 2.0 * detail::accumulate_pairs(sample).sq) / (n * n);
}

struct stat_pair {
  double t_ajne = 0.0;
  double t_gine = 0.0;
  double combined = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;
  double mean_angle = 0.0;
  double trace_s2 = 0.0;
  double weight_ajne = 1.0;
  double weight_gine = 1.0;
};

inline stat_pair combined_statistic(const unit_sample& sample, double weight_ajne = 1.0,
                                    double weight_gine = 1.0) {
  if (!(weight_ajne >= 0.0) || !(weight_gine >= 0.0) || weight_ajne + weight_gine <= 0.0)
    throw invalid_weights_error("combined_statistic: weights must be non-negative and not both zero");
  const std::size_t n = sample.size();
  const std::size_t p = sample.dim();
  const detail::pair_sums sums = detail::accumulate_pairs(sample);
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);

  stat_pair out;
  out.n = n;
  out.p = p;
  out.t_ajne = 0.25 * nd - sums.psi / (detail::pi * nd);
  out.t_gine = 0.5 * nd - (pd - 1.0) / (2.0 * nd) * detail::sine_normalizer_sq(p) * sums.sine;
  out.combined = weight_ajne * out.t_ajne + weight_gine * out.t_gine;
  out.mean_angle = n >= 2 ? sums.psi / (0.5 * nd * (nd - 1.0)) : 0.0;
  out.trace_s2 = (nd + 2.0 * sums.sq) / (nd * nd);
  out.weight_ajne = weight_ajne;
  out.weight_gine = weight_gine;
  return out;
}

struct hemisphere_estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo version of the hemisphere-count form: average of
/// (N(u) - n/2)^2 / n over uniform directions u, where N(u) counts points in
/// the open hemisphere around u. Converges to the pairwise-angle statistic.
inline hemisphere_estimate ajne_hemisphere_mc(const unit_sample& sample, std::size_t n_dirs,
                                              seed_spec seed) {
  if (n_dirs < 2)
    throw non_positive_argument_error("ajne_hemisphere_mc: need at least 2 directions");
  const std::size_t n = sample.size();
  const std::size_t p = sample.dim();
  philox_stream stream(seed);
  std::vector<double> dir(p);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < n_dirs; ++k) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      dir[j] = stream.next_gaussian();
      norm2 += dir[j] * dir[j];
    }
    const double inv_norm = 1.0 / std::sqrt(norm2);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < p; ++j) dot += sample.point(i)[j] * dir[j];
      if (dot * inv_norm > 0.0) ++count;
    }
    const double excess = static_cast<double>(count) - 0.5 * static_cast<double>(n);
    const double y = excess * excess / static_cast<double>(n);
    const double delta = y - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (y - mean);
  }
  hemisphere_estimate out;
  out.value = mean;
  out.std_error = std::sqrt(m2 / (static_cast<double>(n_dirs - 1) * static_cast<double>(n_dirs)));
  return out;
}

}  // namespace elliptest
