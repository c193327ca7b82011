#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "elliptest/error.hpp"

namespace elliptest {

/// Limiting tail Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double ks_asymptotic_tail(double lambda) {
  if (lambda <= 0.05) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * lambda * lambda * static_cast<double>(k) * k);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Critical scaled statistic from the one-term tail inversion.
inline double ks_critical_value(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw non_positive_argument_error("ks_critical_value: alpha must lie in (0, 1)");
  return std::sqrt(-0.5 * std::log(0.5 * alpha));
}

struct ks_result {
  double statistic = 0.0;  // sup-distance D
  double scaled = 0.0;     // sqrt(effective n) * D
  double p_value = 1.0;    // asymptotic
};

inline ks_result ks_one_sample(std::vector<double> data,
                               const std::function<double(double)>& cdf) {
  if (data.size() < 2)
    throw non_positive_argument_error("ks_one_sample: need at least 2 observations");
  std::sort(data.begin(), data.end());
  const double n = static_cast<double>(data.size());
  double d = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double f = cdf(data[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  ks_result out;
  out.statistic = d;
  out.scaled = std::sqrt(n) * d;
  out.p_value = ks_asymptotic_tail(out.scaled);
  return out;
}

inline ks_result ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw non_positive_argument_error("ks_two_sample: need at least 2 observations per sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  ks_result out;
  out.statistic = d;
  out.scaled = std::sqrt(na * nb / (na + nb)) * d;
  out.p_value = ks_asymptotic_tail(out.scaled);
  return out;
}

}  // namespace elliptest
