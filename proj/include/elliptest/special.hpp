#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "elliptest/error.hpp"

namespace elliptest {

namespace detail {

constexpr double pi = 3.14159265358979323846;

}  // namespace detail

inline double log_gamma(double x) {
  if (!(x > 0.0)) throw non_positive_argument_error("log_gamma: argument must be positive");
  return std::lgamma(x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

/// Exact binomial coefficient; throws once the value leaves int64 range.
inline std::int64_t binom(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0) throw non_positive_argument_error("binom: negative argument");
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 res = 1;
  const unsigned __int128 limit = static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max());
  for (std::int64_t i = 1; i <= k; ++i) {
    res = res * static_cast<unsigned __int128>(n - k + i);
    res /= static_cast<unsigned __int128>(i);
    if (res > limit) throw error("binom: result exceeds 64-bit range");
  }
  return static_cast<std::int64_t>(res);
}

/// Multiplicity of the degree-b eigenspace on the unit sphere in dimension
/// a + 1, written as the sum of two binomials.
inline std::int64_t nu_dof(std::int64_t a, std::int64_t b) {
  if (a < 1 || b < 1) throw non_positive_argument_error("nu_dof: arguments must be at least 1");
  const std::int64_t first = binom(a + b - 2, a - 1);
  const std::int64_t second = binom(a + b - 1, a - 1);
  if (first > std::numeric_limits<std::int64_t>::max() - second)
    throw error("nu_dof: result exceeds 64-bit range");
  return first + second;
}

struct gegenbauer_spec {
  double alpha = 0.5;
  int order = 0;
};

namespace detail {

inline double signed_pow(double base, int exponent) {
  double mag = std::pow(std::abs(base), static_cast<double>(exponent));
  if (base < 0.0 && (exponent & 1)) mag = -mag;
  return mag;
}

}  // namespace detail

/// Direct evaluation from the finite hypergeometric sum. At alpha == 0 the
/// usual normalization degenerates, so the Chebyshev limit (2/q) T_q is used
/// instead; both entry points share that convention.
inline double gegenbauer_series(const gegenbauer_spec& spec, double z) {
  if (spec.alpha < 0.0)
    throw non_positive_argument_error("gegenbauer_series: alpha must be non-negative");
  if (spec.order < 0)
    throw non_positive_argument_error("gegenbauer_series: order must be non-negative");
  const int q = spec.order;
  if (q == 0) return 1.0;
  const double alpha = spec.alpha;
  double sum = 0.0;
  for (int k = 0; 2 * k <= q; ++k) {
    const double log_num =
        (alpha == 0.0) ? log_gamma(static_cast<double>(q - k))
                       : log_gamma(q - k + alpha) - log_gamma(alpha);
    const double log_mag = log_num - log_gamma(k + 1.0) - log_gamma(q - 2 * k + 1.0);
    double term = std::exp(log_mag) * detail::signed_pow(2.0 * z, q - 2 * k);
    if (k & 1) term = -term;
    sum += term;
  }
  return sum;
}

/// Three-term recurrence in the order; matches gegenbauer_series to roundoff
/// but costs O(q) flops per point.
inline double gegenbauer_recurrence(const gegenbauer_spec& spec, double z) {
  if (spec.alpha < 0.0)
    throw non_positive_argument_error("gegenbauer_recurrence: alpha must be non-negative");
  if (spec.order < 0)
    throw non_positive_argument_error("gegenbauer_recurrence: order must be non-negative");
  const int q = spec.order;
  const double alpha = spec.alpha;
  if (q == 0) return 1.0;

  double prev;  // order q-2 value during the loop
  double cur;
  int start;
  if (alpha == 0.0) {
    // seeded past order 2 because the alpha -> 0 limit of the q = 2 step
    // does not commute with the limit applied to the order-0 seed
    if (q == 1) return 2.0 * z;
    prev = 2.0 * z;
    cur = 2.0 * z * z - 1.0;
    start = 3;
  } else {
    prev = 1.0;
    cur = 2.0 * alpha * z;
    if (q == 1) return cur;
    start = 2;
  }
  for (int m = start; m <= q; ++m) {
    const double next =
        (2.0 * z * (m + alpha - 1.0) * cur - (m + 2.0 * alpha - 2.0) * prev) / m;
    prev = cur;
    cur = next;
  }
  return cur;
}

struct gamma2_result {
  double value = 0.0;
  double truncation_error = 0.0;
  int terms_used = 0;
};

namespace detail {

inline double gamma2_log_term(int p, int q) {
  const double pd = p;
  const double qd = q;
  return std::log(pd - 1.0) + std::log(2.0 * qd - 1.0) + std::log(4.0 * qd + pd - 2.0) -
         std::log(pd - 2.0) - std::log(2.0 * qd + pd - 1.0) - std::log(4.0 * pi) +
         2.0 * (std::lgamma(0.5 * (pd - 1.0)) + std::lgamma(qd - 0.5) -
                std::lgamma(qd + 0.5 * (pd - 1.0))) +
         std::lgamma(qd + 0.5 * pd) - std::lgamma(0.5 * pd - 1.0) - std::lgamma(qd);
}

}  // namespace detail

/// Alternating series for the second squared-coefficient sum of the sine
/// kernel. Terms decay like q^(1 - p/2), so convergence is slow in low
/// dimensions; the reported truncation error is the first omitted term.
inline gamma2_result gamma2(int p, int terms, double tol = 0.0) {
  if (p < 3) throw non_positive_argument_error("gamma2: dimension must be at least 3");
  if (terms < 2) throw non_positive_argument_error("gamma2: need at least two terms");
  gamma2_result out;
  double sum = 0.0;
  double mag = 0.0;
  int q = 1;
  for (; q <= terms; ++q) {
    mag = std::exp(detail::gamma2_log_term(p, q));
    sum += (q & 1) ? mag : -mag;
    if (tol > 0.0 && mag < tol) {
      ++q;
      break;
    }
  }
  if (tol > 0.0 && !(mag < tol))
    throw no_convergence_error("gamma2: partial sums did not stabilize within tolerance");
  out.value = sum;
  out.terms_used = q - 1;
  out.truncation_error = std::exp(detail::gamma2_log_term(p, q));
  return out;
}

}  // namespace elliptest
