#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "elliptest/detail/parallel.hpp"
#include "elliptest/error.hpp"
#include "elliptest/io.hpp"
#include "elliptest/matrix.hpp"
#include "elliptest/null_model.hpp"
#include "elliptest/rng.hpp"
#include "elliptest/sample.hpp"
#include "elliptest/samplers.hpp"
#include "elliptest/statistics.hpp"
#include "elliptest/tyler.hpp"

namespace elliptest {

enum class calibration_mode { mc_null, series };
enum class test_verdict { consistent_with_ellipticity, rejected };

struct test_config {
  double significance = 0.05;
  calibration_mode calibration = calibration_mode::mc_null;
  std::size_t mc_null_reps = 2000;
  double weight_ajne = 1.0;
  double weight_gine = 1.0;
  bool center = false;
  seed_spec seed{};
  tyler_config tyler{};
  int series_truncation_q = 50;
  std::size_t series_mc_draws = 200000;
  std::string cache_dir;  // empty disables the null-table cache
  unsigned threads = 0;   // 0 picks the hardware count
};

struct calibration_summary {
  calibration_mode mode = calibration_mode::mc_null;
  std::size_t reps = 0;  // table replicates, or mixture draws in series mode
  int terms = 0;         // series truncation, 0 in mc_null mode
  double critical_value = 0.0;
};

struct test_diagnostics {
  double trace_s2 = 0.0;
  std::size_t tyler_iterations = 0;
  double tyler_residual = 0.0;
};

struct test_report {
  test_verdict verdict;
  double p_value;
  stat_pair statistic;
  spd_matrix scatter_estimate;
  calibration_summary calibration;
  test_diagnostics diagnostics;
  test_config config;
};

/// Sorted empirical null table of the combined statistic, built by running
/// the estimation pipeline end to end on uniform draws. Whitening makes the
/// null law free of the true scatter, so one table serves every instance of
/// the same (n, p, weights).
inline std::vector<double> calibrate_null(std::size_t p, std::size_t n, const test_config& cfg) {
  if (p < 2) throw sample_too_small_error("calibrate_null: dimension must be at least 2");
  if (n <= p) throw sample_too_small_error("calibrate_null: need n > p");
  if (cfg.mc_null_reps < 100)
    throw non_positive_argument_error("calibrate_null: need at least 100 replicates");
  std::vector<double> table(cfg.mc_null_reps);
  detail::parallel_for_index(cfg.mc_null_reps, cfg.threads, [&](std::size_t r) {
    const unit_sample uniform =
        sample_uniform_sphere(p, n, cfg.seed.with_stream(cfg.seed.stream_id + r));
    const tyler_result fit = tyler_fit(uniform, cfg.tyler);
    table[r] = combined_statistic(fit.whitened, cfg.weight_ajne, cfg.weight_gine).combined;
  });
  std::sort(table.begin(), table.end());
  return table;
}

namespace detail {

inline std::string null_table_key(std::size_t p, std::size_t n, const test_config& cfg) {
  return "p=" + std::to_string(p) + ";n=" + std::to_string(n) +
         ";wa=" + format_double(cfg.weight_ajne) + ";wg=" + format_double(cfg.weight_gine) +
         ";reps=" + std::to_string(cfg.mc_null_reps) +
         ";master=" + std::to_string(cfg.seed.master_seed) +
         ";stream=" + std::to_string(cfg.seed.stream_id) +
         ";tol=" + format_double(cfg.tyler.tol) +
         ";iters=" + std::to_string(cfg.tyler.max_iters);
}

inline std::string null_table_path(const std::string& cache_dir, const std::string& key) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv64(key)));
  return cache_dir + "/null_table_" + hex + ".json";
}

}  // namespace detail

/// Cache-aware table lookup; falls back to a fresh computation whenever the
/// cached file is missing, unreadable or keyed differently.
inline std::vector<double> calibrate_null_cached(std::size_t p, std::size_t n,
                                                 const test_config& cfg) {
  if (cfg.cache_dir.empty()) return calibrate_null(p, n, cfg);
  const std::string key = detail::null_table_key(p, n, cfg);
  const std::string path = detail::null_table_path(cfg.cache_dir, key);
  {
    std::ifstream in(path);
    if (in) {
      try {
        const nlohmann::json j = nlohmann::json::parse(in);
        if (j.at("key").get<std::string>() == key) {
          std::vector<double> table = j.at("table").get<std::vector<double>>();
          if (table.size() == cfg.mc_null_reps) return table;
        }
      } catch (const nlohmann::json::exception&) {
        // fall through to recompute; a truncated cache file is not fatal
      }
    }
  }
  std::vector<double> table = calibrate_null(p, n, cfg);
  std::error_code ec;
  std::filesystem::create_directories(cfg.cache_dir, ec);
  nlohmann::json j{{"key", key},
                   {"p", p},
                   {"n", n},
                   {"weights", {cfg.weight_ajne, cfg.weight_gine}},
                   {"reps", cfg.mc_null_reps},
                   {"seed", {{"master_seed", cfg.seed.master_seed}, {"stream_id", cfg.seed.stream_id}}},
                   {"table", table}};
  std::ofstream out(path);
  if (out) out << j.dump() << '\n';
  return table;
}

namespace detail {

inline double sorted_quantile(const std::vector<double>& sorted, double prob) {
  const double idx = std::ceil(prob * static_cast<double>(sorted.size())) - 1.0;
  const std::size_t i = static_cast<std::size_t>(
      std::clamp(idx, 0.0, static_cast<double>(sorted.size() - 1)));
  return sorted[i];
}

/// Upper-tail rank against a sorted table: count/(reps + 1). A value below
/// the whole table maps to reps/(reps + 1), one above it to exactly 0.
inline double table_pvalue(const std::vector<double>& sorted, double observed) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), observed);
  const std::size_t count_ge = static_cast<std::size_t>(sorted.end() - it);
  return static_cast<double>(count_ge) / static_cast<double>(sorted.size() + 1);
}

}  // namespace detail

/// Full goodness-of-fit pipeline on raw data rows: project to the sphere,
/// fit the scatter, whiten, score, calibrate, decide.
inline test_report run_test(const matrix& raw, const test_config& cfg) {
  const std::size_t n = raw.rows();
  const std::size_t p = raw.cols();
  if (p < 3) throw sample_too_small_error("run_test: dimension must be at least 3");
  if (n <= p) throw sample_too_small_error("run_test: need more observations than dimensions");
  if (!(cfg.significance > 0.0) || !(cfg.significance < 1.0))
    throw non_positive_argument_error("run_test: significance must lie in (0, 1)");

  matrix data = raw;
  if (cfg.center) {
    for (std::size_t j = 0; j < p; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += data(i, j);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) data(i, j) -= mean;
    }
  }

  tyler_result fit = tyler_fit(unit_sample::from_raw_rows(std::move(data)), cfg.tyler);
  const stat_pair stat = combined_statistic(fit.whitened, cfg.weight_ajne, cfg.weight_gine);

  double p_value = 1.0;
  calibration_summary cal;
  if (cfg.calibration == calibration_mode::mc_null) {
    const std::vector<double> table = calibrate_null_cached(p, n, cfg);
    p_value = detail::table_pvalue(table, stat.combined);
    cal.mode = calibration_mode::mc_null;
    cal.reps = table.size();
    cal.critical_value = detail::sorted_quantile(table, 1.0 - cfg.significance);
  } else {
    if (cfg.series_mc_draws < 100000)
      throw non_positive_argument_error("run_test: series mode needs at least 1e5 mixture draws");
    struct component {
      statistic_kind kind;
      double weight;
      double observed;
      std::uint64_t stream_offset;
    };
    std::vector<component> active;
    if (cfg.weight_ajne > 0.0)
      active.push_back({statistic_kind::ajne, cfg.weight_ajne, stat.t_ajne, 0x40000000ull});
    if (cfg.weight_gine > 0.0)
      active.push_back({statistic_kind::gine, cfg.weight_gine, stat.t_gine, 0x50000000ull});
    const double share = cfg.significance / static_cast<double>(active.size());
    double p_sum = 0.0;
    double critical = 0.0;
    for (const component& c : active) {
      const null_model model =
          build_null(c.kind, static_cast<int>(p), cfg.series_truncation_q);
      std::vector<double> draws = detail::mixture_draws(
          model, cfg.series_mc_draws, cfg.seed.with_stream(cfg.seed.stream_id + c.stream_offset));
      std::size_t count_ge = 0;
      for (double d : draws)
        if (d >= c.observed) ++count_ge;
      p_sum += static_cast<double>(count_ge + 1) / static_cast<double>(draws.size() + 1);
      std::sort(draws.begin(), draws.end());
      critical += c.weight * detail::sorted_quantile(draws, 1.0 - share);
    }
    p_value = std::min(1.0, p_sum);
    cal.mode = calibration_mode::series;
    cal.reps = cfg.series_mc_draws;
    cal.terms = cfg.series_truncation_q;
    cal.critical_value = critical;
  }

  const test_verdict verdict = p_value < cfg.significance ? test_verdict::rejected
                                                          : test_verdict::consistent_with_ellipticity;
  const test_diagnostics diag{stat.trace_s2, fit.iterations, fit.final_residual};
  return test_report{verdict, p_value, stat, std::move(fit.estimate), cal, diag, cfg};
}

inline const char* test_verdict_name(test_verdict v) {
  return v == test_verdict::rejected ? "rejected" : "consistent_with_ellipticity";
}

inline const char* calibration_mode_name(calibration_mode m) {
  return m == calibration_mode::mc_null ? "mc_null" : "series";
}

inline nlohmann::json test_report_to_json(const test_report& r) {
  nlohmann::json cal{{"mode", calibration_mode_name(r.calibration.mode)},
                     {"critical_value", r.calibration.critical_value}};
  if (r.calibration.mode == calibration_mode::mc_null) {
    cal["reps"] = r.calibration.reps;
  } else {
    cal["terms"] = r.calibration.terms;
    cal["mc_draws"] = r.calibration.reps;
  }
  return nlohmann::json{
      {"verdict", test_verdict_name(r.verdict)},
      {"p_value", r.p_value},
      {"statistic",
       {{"t_ajne", r.statistic.t_ajne},
        {"t_gine", r.statistic.t_gine},
        {"combined", r.statistic.combined},
        {"n", r.statistic.n},
        {"p", r.statistic.p},
        {"mean_angle", r.statistic.mean_angle},
        {"trace_s2", r.statistic.trace_s2},
        {"weight_ajne", r.statistic.weight_ajne},
        {"weight_gine", r.statistic.weight_gine}}},
      {"scatter_estimate", matrix_to_json(r.scatter_estimate.entries())},
      {"calibration_detail", std::move(cal)},
      {"diagnostics",
       {{"trace_s2", r.diagnostics.trace_s2},
        {"tyler_iterations", r.diagnostics.tyler_iterations},
        {"tyler_residual", r.diagnostics.tyler_residual}}},
      {"config",
       {{"significance", r.config.significance},
        {"calibration", calibration_mode_name(r.config.calibration)},
        {"mc_null_reps", r.config.mc_null_reps},
        {"weights", {r.config.weight_ajne, r.config.weight_gine}},
        {"center", r.config.center},
        {"seed", {{"master_seed", r.config.seed.master_seed}, {"stream_id", r.config.seed.stream_id}}},
        {"tyler", {{"max_iters", r.config.tyler.max_iters}, {"tol", r.config.tyler.tol}}},
        {"series_truncation_q", r.config.series_truncation_q},
        {"series_mc_draws", r.config.series_mc_draws}}}};
}

}  // namespace elliptest
