// Integration gate for the whole pipeline. Each criterion prints one
// [PASS]/[FAIL] line with the measured numbers; the exit code is the number
// of failed criteria. Every randomized criterion is executed twice with the
// same seeds and the final criterion checks the two passes agree bit for bit.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "elliptest/engine.hpp"
#include "elliptest/experiments.hpp"
#include "elliptest/io.hpp"
#include "elliptest/null_model.hpp"
#include "elliptest/samplers.hpp"
#include "elliptest/statistics.hpp"
#include "elliptest/tyler.hpp"

using namespace elliptest;

namespace {

constexpr std::uint64_t master = 1902;
const char* cache_dir = "acceptance_null_cache";

// one-sided normal quantile at 0.001, frozen
constexpr double z_one_sided_001 = 3.090232306167813;

struct outcome {
  bool pass = false;
  std::string detail;
  std::string digest;
};

struct digest_builder {
  std::string data;
  void add(double x) {
    data += format_double(x);
    data += ',';
  }
  void add(bool b) { data += b ? "T," : "F,"; }
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return std::string(buf);
}

spd_matrix random_scatter(std::size_t p, seed_spec seed) {
  const unit_sample basis = sample_uniform_sphere(p, 3 * p, seed);
  matrix g = basis.rows().transpose() * basis.rows();
  for (std::size_t i = 0; i < p; ++i) g(i, i) += 0.05;
  return spd_matrix(std::move(g));
}

struct fit_record {
  std::size_t p;
  double residual;
  double trace_defect;
  double whitening_defect;
};

std::vector<fit_record> scatter_fit_sweep() {
  std::vector<fit_record> records;
  std::uint64_t stream = 1000;
  for (std::size_t p : {3, 5, 8}) {
    for (std::size_t k = 0; k < 50; ++k) {
      const spd_matrix omega = random_scatter(p, {master, stream++});
      const unit_sample sample = sample_acg(omega, 10 * p, {master, stream++});
      const tyler_result fit = tyler_fit(sample);
      records.push_back({p, fit.final_residual,
                         std::abs(fit.estimate.trace() - static_cast<double>(p)),
                         std::abs(trace_s2(fit.whitened) - 1.0 / static_cast<double>(p))});
    }
  }
  return records;
}

outcome criterion_fixed_point() {
  double worst_residual = 0.0, worst_trace = 0.0;
  digest_builder d;
  for (const fit_record& r : scatter_fit_sweep()) {
    worst_residual = std::max(worst_residual, r.residual);
    worst_trace = std::max(worst_trace, r.trace_defect);
    d.add(r.residual);
    d.add(r.trace_defect);
  }
  outcome out;
  out.pass = worst_residual <= 1e-9 && worst_trace <= 1e-10;
  out.detail = fmt("150 fits, max residual %.2e (<= 1e-09), max |tr T - p| %.2e (<= 1e-10)",
                   worst_residual, worst_trace);
  out.digest = d.data;
  return out;
}

outcome criterion_whitening_identity() {
  double worst = 0.0;
  digest_builder d;
  for (const fit_record& r : scatter_fit_sweep()) {
    worst = std::max(worst, r.whitening_defect);
    d.add(r.whitening_defect);
  }
  outcome out;
  out.pass = worst <= 1e-9;
  out.detail = fmt("150 fits, max |tr(S^2) - 1/p| %.2e (<= 1e-09)", worst);
  out.digest = d.data;
  return out;
}

outcome criterion_frame_bound() {
  double worst_margin = 1.0;
  bool ok = true;
  digest_builder d;
  for (std::size_t k = 0; k < 10000; ++k) {
    const std::size_t p = 2 + k % 7;
    const std::size_t n = p + k % 17;
    const unit_sample sample = sample_uniform_sphere(p, n, {master, 30000 + k});
    const double margin = trace_s2(sample) - 1.0 / static_cast<double>(p);
    worst_margin = std::min(worst_margin, margin);
    ok = ok && margin >= -1e-12;
    d.add(margin);
  }
  outcome out;
  out.pass = ok;
  out.detail = fmt("10000 samples (p in 2..8, n >= p), min tr(S^2) - 1/p = %.3e", worst_margin);
  out.digest = d.data;
  return out;
}

fig1_result shared_null_run() {
  fig1_spec spec;
  spec.p = 8;
  spec.n = 1000;
  spec.reps = 2000;
  spec.seed = {master, 40000};
  return run_fig1(spec);
}

outcome criterion_gine_gap(const fig1_result& r) {
  const gap_prediction ref = gine_gap(8);
  outcome out;
  out.pass = r.gine_mean_gap >= 0.113 && r.gine_mean_gap <= 0.153;
  out.detail = fmt(
      "measured gap %.4f vs window [0.113, 0.153] (iid mean %.4f, whitened mean %.4f; "
      "reference predictions: %.4f asymptote, %.4f series)",
      r.gine_mean_gap, r.mean_gine_iid, r.mean_gine_whitened, ref.predicted_gap,
      ref.gamma2_half);
  digest_builder d;
  d.add(r.gine_mean_gap);
  d.add(r.mean_gine_iid);
  d.add(r.mean_gine_whitened);
  out.digest = d.data;
  return out;
}

outcome criterion_ajne_invariance(const fig1_result& r) {
  outcome out;
  out.pass = r.ajne_ks.p_value > 0.001;
  out.detail = fmt("two-sample KS scaled %.4f, p = %.4f (> 0.001 required)", r.ajne_ks.scaled,
                   r.ajne_ks.p_value);
  digest_builder d;
  d.add(r.ajne_ks.statistic);
  d.add(r.ajne_ks.p_value);
  out.digest = d.data;
  return out;
}

outcome criterion_gine_dominance(const fig1_result& r) {
  std::vector<double> pooled = r.gine_iid;
  pooled.insert(pooled.end(), r.gine_whitened.begin(), r.gine_whitened.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> iid = r.gine_iid, whitened = r.gine_whitened;
  std::sort(iid.begin(), iid.end());
  std::sort(whitened.begin(), whitened.end());
  const double reps = static_cast<double>(iid.size());

  auto ecdf = [](const std::vector<double>& sorted, double x) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) -
                               sorted.begin()) /
           static_cast<double>(sorted.size());
  };

  double worst = 1.0;
  bool ok = true;
  digest_builder d;
  for (int k = 1; k <= 50; ++k) {
    const std::size_t idx = static_cast<std::size_t>(
        std::ceil(static_cast<double>(k) / 51.0 * static_cast<double>(pooled.size())) - 1);
    const double x = pooled[idx];
    const double f_whitened = ecdf(whitened, x);
    const double f_iid = ecdf(iid, x);
    const double pool = 0.5 * (f_whitened + f_iid);
    const double se = std::sqrt(std::max(pool * (1.0 - pool) * 2.0 / reps, 1e-300));
    const double slack = (f_whitened - f_iid) + z_one_sided_001 * se;
    worst = std::min(worst, slack);
    ok = ok && slack >= 0.0;
    d.add(f_whitened - f_iid);
  }
  outcome out;
  out.pass = ok;
  out.detail = fmt("F_whitened >= F_iid on 50 pooled quantiles, min slack %.4f", worst);
  out.digest = d.data;
  return out;
}

outcome criterion_row_sum_clt() {
  const std::size_t p = 5, n = 2000, reps = 1000;
  std::vector<std::vector<double>> sums(p, std::vector<double>(reps));
  const double scale = std::sqrt(static_cast<double>(p) / static_cast<double>(n));
  digest_builder d;
  for (std::size_t r = 0; r < reps; ++r) {
    const unit_sample u = sample_uniform_sphere(p, n, {master, 70000 + r});
    const tyler_result fit = tyler_fit(u);
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += fit.whitened.point(i)[j];
      sums[j][r] = scale * s;
      d.add(sums[j][r]);
    }
  }
  double worst_ks_p = 1.0;
  for (std::size_t j = 0; j < p; ++j) {
    const ks_result ks = ks_one_sample(sums[j], [](double x) { return normal_cdf(x); });
    worst_ks_p = std::min(worst_ks_p, ks.p_value);
  }
  std::vector<double> mean(p, 0.0);
  for (std::size_t j = 0; j < p; ++j)
    for (double v : sums[j]) mean[j] += v / static_cast<double>(reps);
  double worst_cov = 0.0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j; k < p; ++k) {
      double c = 0.0;
      for (std::size_t r = 0; r < reps; ++r)
        c += (sums[j][r] - mean[j]) * (sums[k][r] - mean[k]);
      c /= static_cast<double>(reps - 1);
      worst_cov = std::max(worst_cov, std::abs(c - (j == k ? 1.0 : 0.0)));
    }
  outcome out;
  out.pass = worst_ks_p > 0.001 && worst_cov <= 0.15;
  out.detail = fmt("min per-coordinate KS p = %.4f (> 0.001), max |cov - I| = %.4f (<= 0.15)",
                   worst_ks_p, worst_cov);
  out.digest = d.data;
  return out;
}

outcome criterion_ajne_mean() {
  const std::size_t n = 200, reps = 5000, p = 5;
  double s = 0.0, s2 = 0.0;
  digest_builder d;
  for (std::size_t r = 0; r < reps; ++r) {
    const double t = ajne(sample_uniform_sphere(p, n, {master, 80000 + r}));
    s += t;
    s2 += t * t;
    d.add(t);
  }
  const double mean = s / static_cast<double>(reps);
  const double sd = std::sqrt(s2 / static_cast<double>(reps) - mean * mean);
  const double se = sd / std::sqrt(static_cast<double>(reps));
  outcome out;
  out.pass = std::abs(mean - 0.25) <= 3.0 * se;
  out.detail = fmt("MC mean %.5f vs 0.25, |diff| = %.2f SE (<= 3 SE, SE = %.5f)", mean,
                   std::abs(mean - 0.25) / se, se);
  out.digest = d.data;
  return out;
}

outcome criterion_coefficient_oracle() {
  const int truncation_q = 500;
  const std::size_t n = 400, reps = 2000;
  bool ok = true;
  std::string detail;
  digest_builder d;
  std::uint64_t stream = 90000;
  for (int p : {3, 5, 8}) {
    const null_model gine_model = build_null(statistic_kind::gine, p, truncation_q);
    double s = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double t = gine(sample_uniform_sphere(static_cast<std::size_t>(p), n,
                                                  {master, stream++}));
      s += t;
      s2 += t * t;
    }
    const double mc = s / static_cast<double>(reps);
    const double se =
        std::sqrt(s2 / static_cast<double>(reps) - mc * mc) / std::sqrt(static_cast<double>(reps));
    const bool gine_ok = std::abs(mc - gine_model.mean()) <= 3.0 * se;

    const null_model ajne_model = build_null(statistic_kind::ajne, p, truncation_q);
    const mixture_term& last = ajne_model.terms.back();
    const double majorant = 2.0 * truncation_q * last.weight * static_cast<double>(last.dof);
    const bool ajne_ok = std::abs(ajne_model.mean() - 0.25) <= majorant;

    ok = ok && gine_ok && ajne_ok;
    detail += fmt("p=%d gine |mc %.5f - mix %.5f| = %.2f SE; ajne |mix - 1/4| %.1e <= %.1e. ", p,
                  mc, gine_model.mean(), std::abs(mc - gine_model.mean()) / se,
                  std::abs(ajne_model.mean() - 0.25), majorant);
    d.add(mc);
    d.add(gine_model.mean());
    d.add(ajne_model.mean());
  }
  outcome out;
  out.pass = ok;
  out.detail = detail;
  out.digest = d.data;
  return out;
}

struct band_pair {
  fig2_band null_band;
  fig2_band alt_band;
};

band_pair bands_for(const fig2_result& r, const std::string& arm) {
  band_pair out;
  for (const fig2_band& b : r.bands) {
    if (b.arm == arm + "_null") out.null_band = b;
    if (b.arm == arm + "_alt") out.alt_band = b;
  }
  return out;
}

fig2_result offset_band_run(double offset_scale, std::uint64_t stream) {
  fig2_spec spec;
  spec.p = 5;
  spec.n_grid = {15};
  spec.reps = 2000;
  spec.offset_scale = offset_scale;
  spec.seed = {master, stream};
  return run_fig2(spec);
}

outcome criterion_band_separation() {
  const fig2_result r = offset_band_run(0.05, 100000);
  const band_pair iid = bands_for(r, "iid");
  const band_pair whitened = bands_for(r, "whitened");
  const bool iid_disjoint = iid.alt_band.q_low > iid.null_band.q_high;
  const bool whitened_disjoint = whitened.alt_band.q_low > whitened.null_band.q_high;

  const fig2_result ref = offset_band_run(1.0, 110000);
  const band_pair ref_iid = bands_for(ref, "iid");
  const band_pair ref_whitened = bands_for(ref, "whitened");

  outcome out;
  out.pass = iid_disjoint && whitened_disjoint;
  out.detail = fmt(
      "offset 0.05, n=15: iid null [%.3f, %.3f] vs alt [%.3f, %.3f]%s; whitened null "
      "[%.3f, %.3f] vs alt [%.3f, %.3f]%s | offset 1.0 reference: iid disjoint %s, "
      "whitened disjoint %s",
      iid.null_band.q_low, iid.null_band.q_high, iid.alt_band.q_low, iid.alt_band.q_high,
      iid_disjoint ? " (disjoint)" : " (overlap)", whitened.null_band.q_low,
      whitened.null_band.q_high, whitened.alt_band.q_low, whitened.alt_band.q_high,
      whitened_disjoint ? " (disjoint)" : " (overlap)",
      ref_iid.alt_band.q_low > ref_iid.null_band.q_high ? "yes" : "no",
      ref_whitened.alt_band.q_low > ref_whitened.null_band.q_high ? "yes" : "no");
  digest_builder d;
  for (const fig2_band& b : r.bands) {
    d.add(b.q_low);
    d.add(b.q_high);
    d.add(b.mean);
  }
  for (const fig2_band& b : ref.bands) {
    d.add(b.q_low);
    d.add(b.q_high);
  }
  out.digest = d.data;
  return out;
}

outcome criterion_size_and_power() {
  matrix scatter(5, 5);
  for (std::size_t i = 0; i < 5; ++i) scatter(i, i) = 1.0 + 0.6 * static_cast<double>(i);
  scatter(0, 1) = scatter(1, 0) = 0.4;
  const spd_matrix omega(std::move(scatter));

  test_config size_cfg;
  size_cfg.mc_null_reps = 2000;
  size_cfg.seed = {master, 130000};
  size_cfg.cache_dir = cache_dir;
  std::size_t size_rejections = 0;
  const std::size_t size_runs = 400;
  for (std::size_t k = 0; k < size_runs; ++k) {
    const unit_sample data = sample_acg(omega, 200, {master, 120000 + k});
    if (run_test(data.rows(), size_cfg).verdict == test_verdict::rejected) ++size_rejections;
  }
  const double size_freq = static_cast<double>(size_rejections) / static_cast<double>(size_runs);

  test_config power_cfg;
  power_cfg.mc_null_reps = 2000;
  power_cfg.seed = {master, 150000};
  power_cfg.cache_dir = cache_dir;
  std::size_t power_rejections = 0;
  const std::size_t power_runs = 200;
  for (std::size_t k = 0; k < power_runs; ++k) {
    const matrix data = sample_offset_alternative(5, 2000, 0.05, spd_matrix::identity(5),
                                                  {master, 140000 + k});
    if (run_test(data, power_cfg).verdict == test_verdict::rejected) ++power_rejections;
  }
  const double power_freq =
      static_cast<double>(power_rejections) / static_cast<double>(power_runs);

  outcome out;
  out.pass = size_freq >= 0.02 && size_freq <= 0.09 && power_freq > 0.9;
  out.detail = fmt(
      "size %zu/%zu = %.4f (window [0.02, 0.09]); power %zu/%zu = %.4f (> 0.9 required)",
      size_rejections, size_runs, size_freq, power_rejections, power_runs, power_freq);
  digest_builder d;
  d.add(size_freq);
  d.add(power_freq);
  out.digest = d.data;
  return out;
}

struct criterion_row {
  int id;
  const char* name;
  outcome result;
};

std::vector<criterion_row> run_all() {
  std::vector<criterion_row> rows;
  rows.push_back({1, "tyler-fixed-point", criterion_fixed_point()});
  rows.push_back({2, "whitening-identity", criterion_whitening_identity()});
  rows.push_back({3, "frame-bound", criterion_frame_bound()});
  const fig1_result shared = shared_null_run();
  rows.push_back({4, "gine-mean-gap", criterion_gine_gap(shared)});
  rows.push_back({5, "ajne-null-invariance", criterion_ajne_invariance(shared)});
  rows.push_back({6, "gine-dominance", criterion_gine_dominance(shared)});
  rows.push_back({7, "row-sum-clt", criterion_row_sum_clt()});
  rows.push_back({8, "ajne-mean", criterion_ajne_mean()});
  rows.push_back({9, "coefficient-oracle", criterion_coefficient_oracle()});
  rows.push_back({10, "band-separation", criterion_band_separation()});
  rows.push_back({11, "size-and-power", criterion_size_and_power()});
  return rows;
}

}  // namespace

int main() {
  std::error_code ec;
  std::filesystem::remove_all(cache_dir, ec);

  const std::vector<criterion_row> first = run_all();
  int failures = 0;
  for (const criterion_row& row : first) {
    if (!row.result.pass) ++failures;
    std::printf("[%s] %02d %s: %s\n", row.result.pass ? "PASS" : "FAIL", row.id, row.name,
                row.result.detail.c_str());
  }

  const std::vector<criterion_row> second = run_all();
  bool deterministic = true;
  for (std::size_t i = 0; i < first.size(); ++i)
    deterministic = deterministic && first[i].result.digest == second[i].result.digest;
  if (!deterministic) ++failures;
  std::printf("[%s] 12 determinism: two full passes with the same seeds %s\n",
              deterministic ? "PASS" : "FAIL",
              deterministic ? "are byte-identical" : "differ");

  std::printf("acceptance: %d/12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
