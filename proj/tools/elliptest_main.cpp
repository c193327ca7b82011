// Command-line front end: goodness-of-fit test on CSV data, scatter fit,
// mixture coefficients, the two simulation studies, and null-table caching.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "elliptest/elliptest.hpp"

namespace {

using config_map = std::map<std::string, std::string>;
using config_applier = std::function<void(const config_map&)>;

template <typename T>
void parse_config_value(const std::string& key, const std::string& text, T& target) {
  std::istringstream in(text);
  in >> target;
  if (in.fail() || !(in >> std::ws).eof())
    throw elliptest::input_error("config: cannot parse value for '" + key + "': " + text);
}

void parse_config_value(const std::string&, const std::string& text, std::string& target) {
  target = text;
}

void parse_config_value(const std::string& key, const std::string& text, bool& target) {
  if (text == "true" || text == "1")
    target = true;
  else if (text == "false" || text == "0")
    target = false;
  else
    throw elliptest::input_error("config: boolean key '" + key + "' must be true/false/1/0");
}

template <typename T>
void parse_config_value(const std::string& key, const std::string& text, std::vector<T>& target) {
  target.clear();
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    T value;
    parse_config_value(key, item, value);
    target.push_back(value);
  }
  if (target.empty()) throw elliptest::input_error("config: empty list for '" + key + "'");
}

/// Binds a key so a config file can fill any option the command line left
/// unset; flags always win.
template <typename T>
void bind_config(std::vector<config_applier>& appliers, CLI::Option* opt, std::string key,
                 T& target) {
  appliers.push_back([opt, key = std::move(key), &target](const config_map& cfg) {
    const auto it = cfg.find(key);
    if (it == cfg.end() || opt->count() > 0) return;
    parse_config_value(key, it->second, target);
  });
}

struct seed_flags {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  elliptest::seed_spec spec() const { return {master, stream}; }
};

void add_seed_flags(CLI::App* cmd, std::vector<config_applier>& appliers, seed_flags& seed) {
  bind_config(appliers, cmd->add_option("--seed", seed.master, "Master seed"), "seed",
              seed.master);
  bind_config(appliers,
              cmd->add_option("--stream", seed.stream, "Base stream id (advanced)"), "stream",
              seed.stream);
}

void apply_config(const std::string& path, const std::vector<config_applier>& appliers) {
  if (path.empty()) return;
  const config_map cfg = elliptest::read_config_file(path);
  for (const config_applier& apply : appliers) apply(cfg);
}

void emit_json(const nlohmann::json& j, const std::string& json_out) {
  std::cout << j.dump(2) << '\n';
  if (!json_out.empty()) {
    std::ofstream out(json_out, std::ios::binary);
    if (!out) throw elliptest::input_error("cannot write " + json_out);
    out << j.dump(2) << '\n';
  }
}

elliptest::calibration_mode parse_calibration(const std::string& name) {
  if (name == "mc_null") return elliptest::calibration_mode::mc_null;
  if (name == "series") return elliptest::calibration_mode::series;
  throw elliptest::input_error("unknown calibration mode: " + name);
}

elliptest::ajne_variant parse_variant(const std::string& name) {
  if (name == "auto") return elliptest::ajne_variant::auto_select;
  if (name == "factorial") return elliptest::ajne_variant::factorial;
  if (name == "literal") return elliptest::ajne_variant::literal;
  throw elliptest::input_error("unknown ajne variant: " + name);
}

elliptest::statistic_kind parse_kind(const std::string& name) {
  if (name == "ajne") return elliptest::statistic_kind::ajne;
  if (name == "gine") return elliptest::statistic_kind::gine;
  throw elliptest::input_error("unknown statistic kind: " + name);
}

struct test_args {
  std::string input;
  std::string config_file;
  std::string json_out;
  std::string calibration = "mc_null";
  std::string cache_dir;
  double alpha = 0.05;
  std::size_t reps = 2000;
  std::vector<double> weights{1.0, 1.0};
  bool center = false;
  bool strict = false;
  seed_flags seed;
  double tyler_tol = 1e-11;
  std::size_t tyler_max_iters = 500;
  int series_terms = 50;
  std::size_t series_draws = 200000;
  unsigned threads = 0;
};

int run_test_command(const test_args& args) {
  if (args.input.empty()) throw elliptest::input_error("test: --input is required");
  if (args.weights.size() != 2)
    throw elliptest::input_error("test: --weights takes exactly two values");
  const elliptest::matrix raw = elliptest::read_csv_matrix_file(args.input);

  elliptest::test_config cfg;
  cfg.significance = args.alpha;
  cfg.calibration = parse_calibration(args.calibration);
  cfg.mc_null_reps = args.reps;
  cfg.weight_ajne = args.weights[0];
  cfg.weight_gine = args.weights[1];
  cfg.center = args.center;
  cfg.seed = args.seed.spec();
  cfg.tyler.tol = args.tyler_tol;
  cfg.tyler.max_iters = args.tyler_max_iters;
  cfg.series_truncation_q = args.series_terms;
  cfg.series_mc_draws = args.series_draws;
  cfg.cache_dir = args.cache_dir;
  cfg.threads = args.threads;

  const elliptest::test_report report = elliptest::run_test(raw, cfg);
  emit_json(elliptest::test_report_to_json(report), args.json_out);
  return (args.strict && report.verdict == elliptest::test_verdict::rejected) ? 1 : 0;
}

struct fit_args {
  std::string input;
  std::string config_file;
  std::string json_out;
  double tol = 1e-11;
  std::size_t max_iters = 500;
};

int run_fit_command(const fit_args& args) {
  if (args.input.empty()) throw elliptest::input_error("fit: --input is required");
  const elliptest::matrix raw = elliptest::read_csv_matrix_file(args.input);
  elliptest::tyler_config cfg;
  cfg.tol = args.tol;
  cfg.max_iters = args.max_iters;
  const elliptest::tyler_result fit = elliptest::tyler_fit_raw(raw, cfg);
  nlohmann::json j{{"scatter_estimate", elliptest::matrix_to_json(fit.estimate.entries())},
                   {"trace", fit.estimate.trace()},
                   {"iterations", fit.iterations},
                   {"final_residual", fit.final_residual},
                   {"n", raw.rows()},
                   {"p", raw.cols()},
                   {"tol", cfg.tol},
                   {"max_iters", cfg.max_iters}};
  emit_json(j, args.json_out);
  return 0;
}

struct coeffs_args {
  std::string kind;
  std::string variant = "auto";
  std::string json_out;
  std::string config_file;
  int p = 0;
  int terms = 50;
};

int run_coeffs_command(const coeffs_args& args) {
  if (args.kind.empty()) throw elliptest::input_error("coeffs: --kind is required");
  if (args.p == 0) throw elliptest::input_error("coeffs: --p is required");
  // the tail-mass gate is for calibration use; printing a short table is fine
  const elliptest::null_model model = elliptest::build_null(
      parse_kind(args.kind), args.p, args.terms, parse_variant(args.variant), false);
  nlohmann::json j = elliptest::null_model_to_json(model);
  j["mixture_mean"] = model.mean();
  emit_json(j, args.json_out);
  return 0;
}

struct fig1_args {
  std::string config_file;
  std::string output = "fig1";
  std::size_t p = 8;
  std::size_t n = 1000;
  std::size_t reps = 2000;
  seed_flags seed;
  double tyler_tol = 1e-11;
  std::size_t tyler_max_iters = 500;
  unsigned threads = 0;
};

int run_fig1_command(const fig1_args& args) {
  elliptest::fig1_spec spec;
  spec.p = args.p;
  spec.n = args.n;
  spec.reps = args.reps;
  spec.seed = args.seed.spec();
  spec.tyler.tol = args.tyler_tol;
  spec.tyler.max_iters = args.tyler_max_iters;
  spec.threads = args.threads;
  const elliptest::fig1_result result = elliptest::run_fig1(spec);
  elliptest::write_fig1_outputs(spec, result, args.output);
  nlohmann::json j{{"csv", args.output + ".csv"},
                   {"json", args.output + ".json"},
                   {"gine_mean_gap", result.gine_mean_gap},
                   {"ajne_ks_p_value", result.ajne_ks.p_value}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct fig2_args {
  std::string config_file;
  std::string output = "fig2";
  std::size_t p = 5;
  std::size_t reps = 2000;
  double offset_scale = 0.05;
  std::vector<std::size_t> n_grid;
  double band_low = 0.025;
  double band_high = 0.975;
  seed_flags seed;
  double tyler_tol = 1e-11;
  std::size_t tyler_max_iters = 2000;
  unsigned threads = 0;
};

int run_fig2_command(const fig2_args& args) {
  elliptest::fig2_spec spec;
  spec.p = args.p;
  spec.n_grid = args.n_grid;
  spec.reps = args.reps;
  spec.offset_scale = args.offset_scale;
  spec.band_low = args.band_low;
  spec.band_high = args.band_high;
  spec.seed = args.seed.spec();
  spec.tyler.tol = args.tyler_tol;
  spec.tyler.max_iters = args.tyler_max_iters;
  spec.threads = args.threads;
  const elliptest::fig2_result result = elliptest::run_fig2(spec);
  elliptest::write_fig2_outputs(spec, result, args.output);
  nlohmann::json j{{"csv", args.output + ".csv"},
                   {"json", args.output + ".json"},
                   {"bands", result.bands.size()}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct calibrate_args {
  std::string config_file;
  std::string cache_dir;
  std::string json_out;
  std::size_t p = 0;
  std::size_t n = 0;
  std::size_t reps = 2000;
  std::vector<double> weights{1.0, 1.0};
  seed_flags seed;
  unsigned threads = 0;
};

int run_calibrate_command(const calibrate_args& args) {
  if (args.p == 0 || args.n == 0)
    throw elliptest::input_error("calibrate: --p and --n are required");
  if (args.weights.size() != 2)
    throw elliptest::input_error("calibrate: --weights takes exactly two values");
  elliptest::test_config cfg;
  cfg.mc_null_reps = args.reps;
  cfg.weight_ajne = args.weights[0];
  cfg.weight_gine = args.weights[1];
  cfg.seed = args.seed.spec();
  cfg.cache_dir = args.cache_dir;
  cfg.threads = args.threads;
  const std::vector<double> table = elliptest::calibrate_null_cached(args.p, args.n, cfg);
  nlohmann::json j{{"p", args.p},
                   {"n", args.n},
                   {"reps", args.reps},
                   {"weights", args.weights},
                   {"seed", {{"master_seed", args.seed.master}, {"stream_id", args.seed.stream}}},
                   {"min", table.front()},
                   {"max", table.back()},
                   {"q95", elliptest::detail::sorted_quantile(table, 0.95)}};
  if (!args.cache_dir.empty())
    j["cache_file"] = elliptest::detail::null_table_path(
        args.cache_dir, elliptest::detail::null_table_key(args.p, args.n, cfg));
  if (!args.json_out.empty()) {
    nlohmann::json full = j;
    full["table"] = table;
    std::ofstream out(args.json_out, std::ios::binary);
    if (!out) throw elliptest::input_error("cannot write " + args.json_out);
    out << full.dump(2) << '\n';
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ellipticity goodness-of-fit testing for multivariate samples"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "elliptest 1.0.0");

  test_args targs;
  std::vector<config_applier> test_cfg;
  CLI::App* test_cmd = app.add_subcommand("test", "Run the ellipticity test on CSV data");
  bind_config(test_cfg, test_cmd->add_option("--input", targs.input, "CSV file, one row per observation"), "input", targs.input);
  bind_config(test_cfg, test_cmd->add_option("--alpha", targs.alpha, "Significance level"), "alpha", targs.alpha);
  bind_config(test_cfg, test_cmd->add_option("--calibration", targs.calibration, "mc_null or series"), "calibration", targs.calibration);
  bind_config(test_cfg, test_cmd->add_option("--reps", targs.reps, "Monte Carlo null replicates"), "reps", targs.reps);
  bind_config(test_cfg, test_cmd->add_option("--weights", targs.weights, "Statistic weights w_ajne w_gine")->expected(2)->delimiter(','), "weights", targs.weights);
  bind_config(test_cfg, test_cmd->add_flag("--center", targs.center, "Subtract column means first"), "center", targs.center);
  bind_config(test_cfg, test_cmd->add_option("--json-out", targs.json_out, "Also write the report here"), "json-out", targs.json_out);
  bind_config(test_cfg, test_cmd->add_option("--cache-dir", targs.cache_dir, "Directory for cached null tables"), "cache-dir", targs.cache_dir);
  bind_config(test_cfg, test_cmd->add_option("--tyler-tol", targs.tyler_tol, "Fixed-point tolerance"), "tyler-tol", targs.tyler_tol);
  bind_config(test_cfg, test_cmd->add_option("--tyler-max-iters", targs.tyler_max_iters, "Fixed-point iteration cap"), "tyler-max-iters", targs.tyler_max_iters);
  bind_config(test_cfg, test_cmd->add_option("--series-terms", targs.series_terms, "Mixture truncation in series mode"), "series-terms", targs.series_terms);
  bind_config(test_cfg, test_cmd->add_option("--series-draws", targs.series_draws, "Mixture draws in series mode"), "series-draws", targs.series_draws);
  bind_config(test_cfg, test_cmd->add_option("--threads", targs.threads, "Worker threads (0 = auto)"), "threads", targs.threads);
  test_cmd->add_flag("--strict", targs.strict, "Exit 1 when the verdict is rejected");
  add_seed_flags(test_cmd, test_cfg, targs.seed);
  test_cmd->add_option("--config", targs.config_file, "key=value file mirroring these flags");

  fit_args fargs;
  std::vector<config_applier> fit_cfg;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the scatter matrix only");
  bind_config(fit_cfg, fit_cmd->add_option("--input", fargs.input, "CSV file"), "input", fargs.input);
  bind_config(fit_cfg, fit_cmd->add_option("--tol", fargs.tol, "Fixed-point tolerance"), "tol", fargs.tol);
  bind_config(fit_cfg, fit_cmd->add_option("--max-iters", fargs.max_iters, "Iteration cap"), "max-iters", fargs.max_iters);
  bind_config(fit_cfg, fit_cmd->add_option("--json-out", fargs.json_out, "Also write the result here"), "json-out", fargs.json_out);
  fit_cmd->add_option("--config", fargs.config_file, "key=value file mirroring these flags");

  coeffs_args cargs;
  std::vector<config_applier> coeffs_cfg;
  CLI::App* coeffs_cmd = app.add_subcommand("coeffs", "Print mixture weights and dofs");
  bind_config(coeffs_cfg, coeffs_cmd->add_option("--kind", cargs.kind, "ajne or gine"), "kind", cargs.kind);
  bind_config(coeffs_cfg, coeffs_cmd->add_option("--p", cargs.p, "Dimension"), "p", cargs.p);
  bind_config(coeffs_cfg, coeffs_cmd->add_option("--terms", cargs.terms, "Truncation order"), "terms", cargs.terms);
  bind_config(coeffs_cfg, coeffs_cmd->add_option("--ajne-variant", cargs.variant, "auto, factorial or literal"), "ajne-variant", cargs.variant);
  coeffs_cmd->add_option("--json-out", cargs.json_out, "Also write the table here");
  coeffs_cmd->add_option("--config", cargs.config_file, "key=value file mirroring these flags");

  fig1_args f1args;
  std::vector<config_applier> fig1_cfg;
  CLI::App* fig1_cmd = app.add_subcommand("fig1", "Null-distribution comparison experiment");
  bind_config(fig1_cfg, fig1_cmd->add_option("--p", f1args.p, "Dimension"), "p", f1args.p);
  bind_config(fig1_cfg, fig1_cmd->add_option("--n", f1args.n, "Sample size"), "n", f1args.n);
  bind_config(fig1_cfg, fig1_cmd->add_option("--reps", f1args.reps, "Replicates"), "reps", f1args.reps);
  bind_config(fig1_cfg, fig1_cmd->add_option("--output", f1args.output, "Output prefix"), "output", f1args.output);
  bind_config(fig1_cfg, fig1_cmd->add_option("--tyler-tol", f1args.tyler_tol, "Fixed-point tolerance"), "tyler-tol", f1args.tyler_tol);
  bind_config(fig1_cfg, fig1_cmd->add_option("--tyler-max-iters", f1args.tyler_max_iters, "Fixed-point iteration cap"), "tyler-max-iters", f1args.tyler_max_iters);
  bind_config(fig1_cfg, fig1_cmd->add_option("--threads", f1args.threads, "Worker threads (0 = auto)"), "threads", f1args.threads);
  add_seed_flags(fig1_cmd, fig1_cfg, f1args.seed);
  fig1_cmd->add_option("--config", f1args.config_file, "key=value file mirroring these flags");

  fig2_args f2args;
  std::vector<config_applier> fig2_cfg;
  CLI::App* fig2_cmd = app.add_subcommand("fig2", "Confidence-band experiment");
  bind_config(fig2_cfg, fig2_cmd->add_option("--p", f2args.p, "Dimension"), "p", f2args.p);
  bind_config(fig2_cfg, fig2_cmd->add_option("--reps", f2args.reps, "Replicates per grid point and arm"), "reps", f2args.reps);
  bind_config(fig2_cfg, fig2_cmd->add_option("--offset-scale", f2args.offset_scale, "Location shift of the alternative"), "offset-scale", f2args.offset_scale);
  bind_config(fig2_cfg, fig2_cmd->add_option("--n-grid", f2args.n_grid, "Comma-separated sample sizes")->delimiter(','), "n-grid", f2args.n_grid);
  bind_config(fig2_cfg, fig2_cmd->add_option("--band-low", f2args.band_low, "Lower band probability"), "band-low", f2args.band_low);
  bind_config(fig2_cfg, fig2_cmd->add_option("--band-high", f2args.band_high, "Upper band probability"), "band-high", f2args.band_high);
  bind_config(fig2_cfg, fig2_cmd->add_option("--output", f2args.output, "Output prefix"), "output", f2args.output);
  bind_config(fig2_cfg, fig2_cmd->add_option("--tyler-tol", f2args.tyler_tol, "Fixed-point tolerance"), "tyler-tol", f2args.tyler_tol);
  bind_config(fig2_cfg, fig2_cmd->add_option("--tyler-max-iters", f2args.tyler_max_iters, "Fixed-point iteration cap"), "tyler-max-iters", f2args.tyler_max_iters);
  bind_config(fig2_cfg, fig2_cmd->add_option("--threads", f2args.threads, "Worker threads (0 = auto)"), "threads", f2args.threads);
  add_seed_flags(fig2_cmd, fig2_cfg, f2args.seed);
  fig2_cmd->add_option("--config", f2args.config_file, "key=value file mirroring these flags");

  calibrate_args calargs;
  std::vector<config_applier> cal_cfg;
  CLI::App* cal_cmd = app.add_subcommand("calibrate", "Precompute a null table");
  bind_config(cal_cfg, cal_cmd->add_option("--p", calargs.p, "Dimension"), "p", calargs.p);
  bind_config(cal_cfg, cal_cmd->add_option("--n", calargs.n, "Sample size"), "n", calargs.n);
  bind_config(cal_cfg, cal_cmd->add_option("--reps", calargs.reps, "Table replicates"), "reps", calargs.reps);
  bind_config(cal_cfg, cal_cmd->add_option("--weights", calargs.weights, "Statistic weights")->expected(2)->delimiter(','), "weights", calargs.weights);
  bind_config(cal_cfg, cal_cmd->add_option("--cache-dir", calargs.cache_dir, "Cache directory"), "cache-dir", calargs.cache_dir);
  bind_config(cal_cfg, cal_cmd->add_option("--json-out", calargs.json_out, "Write the full table here"), "json-out", calargs.json_out);
  bind_config(cal_cfg, cal_cmd->add_option("--threads", calargs.threads, "Worker threads (0 = auto)"), "threads", calargs.threads);
  add_seed_flags(cal_cmd, cal_cfg, calargs.seed);
  cal_cmd->add_option("--config", calargs.config_file, "key=value file mirroring these flags");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (test_cmd->parsed()) {
      apply_config(targs.config_file, test_cfg);
      return run_test_command(targs);
    }
    if (fit_cmd->parsed()) {
      apply_config(fargs.config_file, fit_cfg);
      return run_fit_command(fargs);
    }
    if (coeffs_cmd->parsed()) {
      apply_config(cargs.config_file, coeffs_cfg);
      return run_coeffs_command(cargs);
    }
    if (fig1_cmd->parsed()) {
      apply_config(f1args.config_file, fig1_cfg);
      return run_fig1_command(f1args);
    }
    if (fig2_cmd->parsed()) {
      apply_config(f2args.config_file, fig2_cfg);
      return run_fig2_command(f2args);
    }
    if (cal_cmd->parsed()) {
      apply_config(calargs.config_file, cal_cfg);
      return run_calibrate_command(calargs);
    }
  } catch (const elliptest::input_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const elliptest::error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
