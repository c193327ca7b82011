#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elliptest/detail/parallel.hpp"
#include "elliptest/engine.hpp"
#include "elliptest/error.hpp"
#include "elliptest/kolmogorov.hpp"
#include "elliptest/matrix.hpp"
#include "elliptest/null_model.hpp"
#include "elliptest/rng.hpp"
#include "elliptest/samplers.hpp"
#include "elliptest/statistics.hpp"
#include "elliptest/tyler.hpp"

namespace elliptest {

/// Null-distribution comparison: per replicate, one i.i.d. spherical sample
/// scored directly and one independent sample pushed through the estimation
/// pipeline, tracking both statistics in both arms.
struct fig1_spec {
  std::size_t p = 8;
  std::size_t n = 1000;
  std::size_t reps = 2000;
  seed_spec seed{};
  tyler_config tyler{};
  std::optional<spd_matrix> omega;  // scatter for the whitened arm; identity if empty
  unsigned threads = 0;
};

struct fig1_result {
  std::vector<double> ajne_iid;
  std::vector<double> gine_iid;
  std::vector<double> ajne_whitened;
  std::vector<double> gine_whitened;
  double mean_ajne_iid = 0.0;
  double mean_ajne_whitened = 0.0;
  double mean_gine_iid = 0.0;
  double mean_gine_whitened = 0.0;
  double gine_mean_gap = 0.0;
  ks_result ajne_ks;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

inline fig1_result run_fig1(const fig1_spec& spec) {
  if (spec.reps < 2) throw non_positive_argument_error("run_fig1: need at least 2 replicates");
  if (spec.n <= spec.p) throw sample_too_small_error("run_fig1: need n > p");
  if (spec.omega && spec.omega->dim() != spec.p)
    throw dimension_mismatch_error("run_fig1: omega dimension does not match p");

  fig1_result out;
  out.ajne_iid.resize(spec.reps);
  out.gine_iid.resize(spec.reps);
  out.ajne_whitened.resize(spec.reps);
  out.gine_whitened.resize(spec.reps);

  detail::parallel_for_index(spec.reps, spec.threads, [&](std::size_t r) {
    const seed_spec iid_seed = spec.seed.with_stream(spec.seed.stream_id + 2 * r);
    const seed_spec fit_seed = spec.seed.with_stream(spec.seed.stream_id + 2 * r + 1);

    const unit_sample iid = sample_uniform_sphere(spec.p, spec.n, iid_seed);
    const stat_pair direct = combined_statistic(iid);
    out.ajne_iid[r] = direct.t_ajne;
    out.gine_iid[r] = direct.t_gine;

    const unit_sample data = spec.omega ? sample_acg(*spec.omega, spec.n, fit_seed)
                                        : sample_uniform_sphere(spec.p, spec.n, fit_seed);
    const tyler_result fit = tyler_fit(data, spec.tyler);
    const stat_pair whitened = combined_statistic(fit.whitened);
    out.ajne_whitened[r] = whitened.t_ajne;
    out.gine_whitened[r] = whitened.t_gine;
  });

  out.mean_ajne_iid = detail::mean_of(out.ajne_iid);
  out.mean_ajne_whitened = detail::mean_of(out.ajne_whitened);
  out.mean_gine_iid = detail::mean_of(out.gine_iid);
  out.mean_gine_whitened = detail::mean_of(out.gine_whitened);
  out.gine_mean_gap = out.mean_gine_iid - out.mean_gine_whitened;
  out.ajne_ks = ks_two_sample(out.ajne_iid, out.ajne_whitened);
  return out;
}

/// Confidence-band study: combined statistic under null and location-shifted
/// alternative, with and without the estimation pipeline, across a grid of
/// sample sizes.
struct fig2_spec {
  std::size_t p = 5;
  std::vector<std::size_t> n_grid;  // empty picks 6, 9, ..., 60
  std::size_t reps = 2000;
  double offset_scale = 0.05;
  double band_low = 0.025;
  double band_high = 0.975;
  seed_spec seed{};
  tyler_config tyler{2000, 1e-11, {}};
  std::optional<spd_matrix> omega;
  unsigned threads = 0;
};

struct fig2_band {
  std::size_t n = 0;
  std::string arm;
  double q_low = 0.0;
  double q_high = 0.0;
  double mean = 0.0;
};

struct fig2_result {
  std::vector<fig2_band> bands;
};

namespace detail {

inline const char* fig2_arm_name(std::size_t arm) {
  switch (arm) {
    case 0: return "iid_null";
    case 1: return "iid_alt";
    case 2: return "whitened_null";
    default: return "whitened_alt";
  }
}

}  // namespace detail

inline std::vector<std::size_t> default_fig2_grid(std::size_t p) {
  std::vector<std::size_t> grid;
  for (std::size_t n = p + 1; n <= 60; ++n)
    if ((n - p - 1) % 3 == 0) grid.push_back(n);
  return grid;
}

inline fig2_result run_fig2(const fig2_spec& spec) {
  if (spec.reps < 2) throw non_positive_argument_error("run_fig2: need at least 2 replicates");
  if (!(spec.band_low > 0.0) || !(spec.band_high < 1.0) || !(spec.band_low < spec.band_high))
    throw non_positive_argument_error("run_fig2: band probabilities must satisfy 0 < low < high < 1");
  if (spec.omega && spec.omega->dim() != spec.p)
    throw dimension_mismatch_error("run_fig2: omega dimension does not match p");
  const std::vector<std::size_t> grid =
      spec.n_grid.empty() ? default_fig2_grid(spec.p) : spec.n_grid;
  for (std::size_t n : grid)
    if (n <= spec.p) throw sample_too_small_error("run_fig2: every grid n must exceed p");

  const spd_matrix omega = spec.omega ? *spec.omega : spd_matrix::identity(spec.p);

  fig2_result out;
  out.bands.reserve(grid.size() * 4);
  std::vector<double> values(spec.reps);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const std::size_t n = grid[g];
    for (std::size_t arm = 0; arm < 4; ++arm) {
      const std::uint64_t base =
          spec.seed.stream_id + (static_cast<std::uint64_t>(g) * 4 + arm) * spec.reps;
      detail::parallel_for_index(spec.reps, spec.threads, [&](std::size_t r) {
        const seed_spec seed = spec.seed.with_stream(base + r);
        const bool alternative = (arm == 1 || arm == 3);
        const bool whitened = (arm >= 2);
        matrix raw = alternative
                         ? sample_offset_alternative(spec.p, n, spec.offset_scale, omega, seed)
                         : sample_acg(omega, n, seed).rows();
        if (whitened) {
          const tyler_result fit = tyler_fit_raw(raw, spec.tyler);
          values[r] = combined_statistic(fit.whitened).combined;
        } else {
          values[r] = combined_statistic(unit_sample::from_raw_rows(std::move(raw))).combined;
        }
      });
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      fig2_band band;
      band.n = n;
      band.arm = detail::fig2_arm_name(arm);
      band.q_low = detail::sorted_quantile(sorted, spec.band_low);
      band.q_high = detail::sorted_quantile(sorted, spec.band_high);
      band.mean = detail::mean_of(sorted);
      out.bands.push_back(std::move(band));
    }
  }
  return out;
}

namespace detail {

inline nlohmann::json seed_to_json(const seed_spec& seed) {
  return {{"master_seed", seed.master_seed}, {"stream_id", seed.stream_id}};
}

inline nlohmann::json tyler_config_to_json(const tyler_config& t) {
  return {{"max_iters", t.max_iters}, {"tol", t.tol}};
}

}  // namespace detail

/// Writes <prefix>.csv (one row per replicate and arm) and <prefix>.json
/// (resolved spec plus summary), both byte-stable for a fixed spec.
inline void write_fig1_outputs(const fig1_spec& spec, const fig1_result& result,
                               const std::string& prefix) {
  std::ofstream csv(prefix + ".csv", std::ios::binary);
  if (!csv) throw input_error("cannot write " + prefix + ".csv");
  csv << "replicate,sequence_kind,t_ajne,t_gine\n";
  for (std::size_t r = 0; r < result.ajne_iid.size(); ++r) {
    csv << r << ",iid," << format_double(result.ajne_iid[r]) << ','
        << format_double(result.gine_iid[r]) << '\n';
    csv << r << ",whitened," << format_double(result.ajne_whitened[r]) << ','
        << format_double(result.gine_whitened[r]) << '\n';
  }

  const gap_prediction prediction = gine_gap(static_cast<int>(spec.p));
  nlohmann::json j{
      {"spec",
       {{"name", "fig1_null_distributions"},
        {"p", spec.p},
        {"n", spec.n},
        {"reps", spec.reps},
        {"seed", detail::seed_to_json(spec.seed)},
        {"tyler", detail::tyler_config_to_json(spec.tyler)},
        {"omega", spec.omega ? matrix_to_json(spec.omega->entries()) : nlohmann::json("identity")}}},
      {"summary",
       {{"mean_ajne_iid", result.mean_ajne_iid},
        {"mean_ajne_whitened", result.mean_ajne_whitened},
        {"mean_gine_iid", result.mean_gine_iid},
        {"mean_gine_whitened", result.mean_gine_whitened},
        {"gine_mean_gap", result.gine_mean_gap},
        {"predicted_gap", prediction.predicted_gap},
        {"gamma2_half", prediction.gamma2_half},
        {"ajne_ks",
         {{"statistic", result.ajne_ks.statistic},
          {"scaled", result.ajne_ks.scaled},
          {"p_value", result.ajne_ks.p_value}}}}}};
  std::ofstream json_out(prefix + ".json", std::ios::binary);
  if (!json_out) throw input_error("cannot write " + prefix + ".json");
  json_out << j.dump(2) << '\n';
}

inline void write_fig2_outputs(const fig2_spec& spec, const fig2_result& result,
                               const std::string& prefix) {
  std::ofstream csv(prefix + ".csv", std::ios::binary);
  if (!csv) throw input_error("cannot write " + prefix + ".csv");
  csv << "n,arm,q_low,q_high,mean\n";
  for (const fig2_band& band : result.bands)
    csv << band.n << ',' << band.arm << ',' << format_double(band.q_low) << ','
        << format_double(band.q_high) << ',' << format_double(band.mean) << '\n';

  nlohmann::json bands = nlohmann::json::array();
  for (const fig2_band& band : result.bands)
    bands.push_back({{"n", band.n},
                     {"arm", band.arm},
                     {"q_low", band.q_low},
                     {"q_high", band.q_high},
                     {"mean", band.mean}});
  const std::vector<std::size_t> grid =
      spec.n_grid.empty() ? default_fig2_grid(spec.p) : spec.n_grid;
  nlohmann::json j{
      {"spec",
       {{"name", "fig2_confidence_bands"},
        {"p", spec.p},
        {"n_grid", grid},
        {"reps", spec.reps},
        {"offset_scale", spec.offset_scale},
        {"band_low", spec.band_low},
        {"band_high", spec.band_high},
        {"seed", detail::seed_to_json(spec.seed)},
        {"tyler", detail::tyler_config_to_json(spec.tyler)},
        {"omega", spec.omega ? matrix_to_json(spec.omega->entries()) : nlohmann::json("identity")}}},
      {"bands", std::move(bands)}};
  std::ofstream json_out(prefix + ".json", std::ios::binary);
  if (!json_out) throw input_error("cannot write " + prefix + ".json");
  json_out << j.dump(2) << '\n';
}

}  // namespace elliptest
