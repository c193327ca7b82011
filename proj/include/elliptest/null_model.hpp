#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "elliptest/error.hpp"
#include "elliptest/rng.hpp"
#include "elliptest/special.hpp"

namespace elliptest {

enum class statistic_kind { ajne, gine };

/// The printed Ajne coefficient contains a factor that reads "(2q-2)"; taken
/// literally the q = 1 weight vanishes and the mixture mean collapses, while
/// the factorial reading reproduces the classical circle weights and the
/// exact mean 1/4. Both are available; auto_select lets the mean decide.
enum class ajne_variant { auto_select, factorial, literal };

struct mixture_term {
  double weight = 0.0;
  std::int64_t dof = 0;
};

struct null_model {
  statistic_kind kind = statistic_kind::ajne;
  int p = 0;
  int truncation_q = 0;
  std::vector<mixture_term> terms;
  double tail_mass_bound = 0.0;
  ajne_variant resolved_variant = ajne_variant::factorial;

  double mean() const {
    double s = 0.0;
    for (const mixture_term& t : terms) s += t.weight * static_cast<double>(t.dof);
    return s;
  }
};

namespace detail {

inline double ajne_log_weight_sq(int p, int q, bool factorial) {
  const double alpha = 0.5 * p - 1.0;
  const double middle = factorial ? std::lgamma(2.0 * q - 1.0) : std::log(2.0 * q - 2.0);
  const double half =
      (p - 2.0) * 0.6931471805599453 + std::lgamma(alpha + 1.0) + std::lgamma(q + alpha) +
      middle - std::log(pi) - std::lgamma(static_cast<double>(q)) -
      std::lgamma(2.0 * q + p - 2.0);
  return 2.0 * half;
}

inline double gine_log_weight_sq(int p, int q) {
  const double alpha = 0.5 * p - 1.0;
  return std::log(p - 1.0) + std::log(2.0 * q - 1.0) - std::log(8.0 * pi) -
         std::log(2.0 * q + p - 1.0) +
         2.0 * (std::lgamma(alpha + 0.5) + std::lgamma(q - 0.5) - std::lgamma(q + alpha + 0.5));
}

inline mixture_term nth_term(statistic_kind kind, int p, int q, bool ajne_factorial) {
  mixture_term t;
  if (kind == statistic_kind::ajne) {
    t.weight = (q == 1 && !ajne_factorial) ? 0.0 : std::exp(ajne_log_weight_sq(p, q, ajne_factorial));
    t.dof = nu_dof(p - 1, 2 * q - 1);
  } else {
    t.weight = std::exp(gine_log_weight_sq(p, q));
    t.dof = nu_dof(p - 1, 2 * q);
  }
  return t;
}

inline std::vector<mixture_term> term_table(statistic_kind kind, int p, int truncation_q,
                                            bool ajne_factorial) {
  std::vector<mixture_term> terms;
  terms.reserve(static_cast<std::size_t>(truncation_q));
  for (int q = 1; q <= truncation_q; ++q)
    terms.push_back(nth_term(kind, p, q, ajne_factorial));
  return terms;
}

inline double term_mean(const std::vector<mixture_term>& terms) {
  double s = 0.0;
  for (const mixture_term& t : terms) s += t.weight * static_cast<double>(t.dof);
  return s;
}

}  // namespace detail

/// Truncated weighted chi-square mixture for the i.i.d. null law of one
/// statistic. The tail bound sums the next five dropped mean contributions;
/// with enforce_tail_bound the model refuses to stand on a truncation that
/// visibly misses mass.
inline null_model build_null(statistic_kind kind, int p, int truncation_q,
                             ajne_variant variant = ajne_variant::auto_select,
                             bool enforce_tail_bound = true) {
  if (p < 3) throw non_positive_argument_error("build_null: dimension must be at least 3");
  if (truncation_q < 1)
    throw non_positive_argument_error("build_null: truncation_q must be at least 1");

  null_model model;
  model.kind = kind;
  model.p = p;
  model.truncation_q = truncation_q;

  if (kind == statistic_kind::ajne) {
    ajne_variant resolved = variant;
    if (variant == ajne_variant::auto_select) {
      const double mean_factorial =
          detail::term_mean(detail::term_table(kind, p, truncation_q, true));
      const double mean_literal =
          detail::term_mean(detail::term_table(kind, p, truncation_q, false));
      resolved = std::abs(mean_factorial - 0.25) <= std::abs(mean_literal - 0.25)
                     ? ajne_variant::factorial
                     : ajne_variant::literal;
    }
    model.resolved_variant = resolved;
    model.terms = detail::term_table(kind, p, truncation_q, resolved == ajne_variant::factorial);
  } else {
    model.resolved_variant = ajne_variant::factorial;
    model.terms = detail::term_table(kind, p, truncation_q, true);
  }

  // drop the q = 1 literal zero so stored weights stay strictly positive
  if (kind == statistic_kind::ajne && model.resolved_variant == ajne_variant::literal &&
      !model.terms.empty() && model.terms.front().weight == 0.0)
    model.terms.erase(model.terms.begin());

  const bool fact = model.resolved_variant == ajne_variant::factorial;
  for (int q = truncation_q + 1; q <= truncation_q + 5; ++q) {
    const mixture_term t = detail::nth_term(kind, p, q, fact);
    model.tail_mass_bound += t.weight * static_cast<double>(t.dof);
  }

  if (enforce_tail_bound && model.tail_mass_bound > 0.01 * model.mean())
    throw truncation_too_small_error("build_null: dropped mixture mass exceeds 1% of the mean");
  return model;
}

namespace detail {

constexpr std::size_t mixture_block = 4096;

/// One mixture draw per call; draws are grouped in fixed blocks, each block
/// owning its own stream, so a block-parallel run reproduces the sequential
/// order exactly.
inline std::vector<double> mixture_draws(const null_model& model, std::size_t mc_draws,
                                         seed_spec seed) {
  std::vector<double> draws(mc_draws);
  const std::size_t blocks = (mc_draws + mixture_block - 1) / mixture_block;
  for (std::size_t b = 0; b < blocks; ++b) {
    philox_stream stream(seed.with_stream(seed.stream_id + b));
    const std::size_t hi = std::min(mc_draws, (b + 1) * mixture_block);
    for (std::size_t d = b * mixture_block; d < hi; ++d) {
      double s = 0.0;
      for (const mixture_term& t : model.terms)
        s += t.weight * stream.next_chisq(static_cast<double>(t.dof));
      draws[d] = s;
    }
  }
  return draws;
}

}  // namespace detail

inline double mixture_quantile(const null_model& model, double prob, std::size_t mc_draws,
                               seed_spec seed) {
  if (!(prob > 0.0) || !(prob < 1.0))
    throw non_positive_argument_error("mixture_quantile: prob must lie in (0, 1)");
  if (mc_draws < 100000)
    throw non_positive_argument_error("mixture_quantile: need at least 1e5 draws");
  std::vector<double> draws = detail::mixture_draws(model, mc_draws, seed);
  std::sort(draws.begin(), draws.end());
  const double idx = std::ceil(prob * static_cast<double>(mc_draws)) - 1.0;
  const std::size_t i = static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(mc_draws - 1)));
  return draws[i];
}

inline double mixture_pvalue(const null_model& model, double observed, std::size_t mc_draws,
                             seed_spec seed) {
  if (mc_draws < 100000)
    throw non_positive_argument_error("mixture_pvalue: need at least 1e5 draws");
  const std::vector<double> draws = detail::mixture_draws(model, mc_draws, seed);
  std::size_t count = 0;
  for (double d : draws)
    if (d >= observed) ++count;
  return static_cast<double>(count + 1) / static_cast<double>(mc_draws + 1);
}

struct gap_prediction {
  int p = 0;
  double predicted_gap = 0.0;  // 1/8 + 1/(16 p)
  double gamma2_half = 0.0;    // series value
};

/// Predicted downward shift of the sine statistic's mean after whitening.
inline gap_prediction gine_gap(int p) {
  if (p < 3) throw non_positive_argument_error("gine_gap: dimension must be at least 3");
  gap_prediction out;
  out.p = p;
  out.predicted_gap = 0.125 + 1.0 / (16.0 * static_cast<double>(p));
  out.gamma2_half = 0.5 * gamma2(p, 400).value;
  return out;
}

}  // namespace elliptest
