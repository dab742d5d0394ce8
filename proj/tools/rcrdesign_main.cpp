/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 *
 * Command-line front end: criterion evaluation, design optimization,
 * figure-data sweeps, data simulation, Monte Carlo validation, and the
 * closed-form-vs-oracle regression gate. Emits JSON records on stdout and CSV
 * files for sweeps. Exit codes: 0 success, 1 check failure, 2 invalid input,
 * 3 I/O failure.
 */
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rcr/rcr.hpp"

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitIoError = 3;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) {
  throw CliError{code, message};
}

/// Model-parameter options shared by most subcommands. Flags override config
/// file values; exactly one of (u, v) or (q, rho) must arrive.
struct ParamOptions {
  std::optional<double> sigma1_sq, sigma2_sq, u, v, q, rho;
  std::optional<int> obs_per_individual, num_individuals;
  std::string config_path;

  void register_on(CLI::App* cmd, bool with_population_size = true) {
    cmd->add_option("--sigma1-sq", sigma1_sq,
                    "observational error variance, group 1 (default 1)");
    cmd->add_option("--sigma2-sq", sigma2_sq,
                    "observational error variance, group 2 (default 1)");
    cmd->add_option("--u", u, "random-effect dispersion, group 1");
    cmd->add_option("--v", v, "random-effect dispersion, group 2");
    cmd->add_option("--q", q, "dispersion ratio u/v (use with --rho)");
    cmd->add_option("--rho", rho, "rescaled dispersion u/(1+u) (use with --q)");
    cmd->add_option("--K", obs_per_individual, "observations per individual");
    if (with_population_size)
      cmd->add_option("--N", num_individuals, "total number of individuals");
    cmd->add_option("--config", config_path,
                    "JSON file with defaults for any of these options");
  }

  /// Pull unset fields from the config file, then check mutual exclusion.
  void merge_config() {
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) fail(kExitIoError, "cannot open config file: " + config_path);
    json config;
    try {
      in >> config;
    } catch (const json::exception& e) {
      fail(kExitInvalidInput, "config file is not valid JSON: " + std::string(e.what()));
    }
    const auto pull_double = [&](const char* key, std::optional<double>& slot) {
      if (!slot && config.contains(key)) slot = config.at(key).get<double>();
    };
    const auto pull_int = [&](const char* key, std::optional<int>& slot) {
      if (!slot && config.contains(key)) slot = config.at(key).get<int>();
    };
    pull_double("sigma1_sq", sigma1_sq);
    pull_double("sigma2_sq", sigma2_sq);
    pull_double("u", u);
    pull_double("v", v);
    pull_double("q", q);
    pull_double("rho", rho);
    pull_int("K", obs_per_individual);
    pull_int("N", num_individuals);
  }

  /// Resolve to concrete dispersions. Validation failures exit with code 2.
  rcr::ModelParams<double> resolve(std::optional<int> forced_n = std::nullopt) {
    merge_config();
    const bool has_uv = u.has_value() || v.has_value();
    const bool has_qrho = q.has_value() || rho.has_value();
    if (has_uv && has_qrho)
      fail(kExitInvalidInput,
           "give either (--u, --v) or (--q, --rho), not a mixture of both");
    double du = 0.0, dv = 0.0;
    if (has_qrho) {
      if (!q || !rho)
        fail(kExitInvalidInput, "(--q, --rho) must be supplied together");
      if (!(*rho > 0.0 && *rho < 1.0))
        fail(kExitInvalidInput, "rho must lie strictly inside (0, 1)");
      if (!(*q > 0.0)) fail(kExitInvalidInput, "q must be positive");
      du = *rho / (1.0 - *rho);
      dv = du / *q;
    } else {
      if (!u || !v)
        fail(kExitInvalidInput,
             "dispersions missing: give (--u, --v) or (--q, --rho)");
      du = *u;
      dv = *v;
    }
    const int n = forced_n ? *forced_n : num_individuals.value_or(0);
    if (n == 0) fail(kExitInvalidInput, "N (total individuals) is required");
    if (!obs_per_individual)
      fail(kExitInvalidInput, "K (observations per individual) is required");
    try {
      return rcr::ModelParams<double>(sigma1_sq.value_or(1.0),
                                      sigma2_sq.value_or(1.0), du, dv,
                                      *obs_per_individual, n);
    } catch (const std::invalid_argument& e) {
      fail(kExitInvalidInput, e.what());
    }
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

rcr::CriterionKind parse_kind_or_fail(const std::string& kind) {
  try {
    return rcr::parse_criterion(kind);
  } catch (const std::invalid_argument& e) {
    fail(kExitInvalidInput, e.what());
  }
}

double evaluate_or_fail(rcr::CriterionKind kind, double w,
                        const rcr::ModelParams<double>& params) {
  try {
    return rcr::evaluate_criterion(kind, rcr::ApproxDesign<double>(w), params);
  } catch (const std::domain_error& e) {
    fail(kExitInvalidInput, e.what());
  }
}

// ---------------------------------------------------------------------------
// criterion
// ---------------------------------------------------------------------------

struct CriterionArgs {
  ParamOptions params;
  std::string kind;
  double w = 0.0;
  bool check_oracle = false;
};

int run_criterion(CriterionArgs& args) {
  const auto kind = parse_kind_or_fail(args.kind);
  const auto params = args.params.resolve();
  const double value = evaluate_or_fail(kind, args.w, params);
  json out{{"criterion", rcr::to_string(kind)}, {"w", args.w}, {"value", value}};

  bool pass = true;
  if (args.check_oracle) {
    const double scaled = args.w * params.num_individuals;
    const int n1 = static_cast<int>(std::lround(scaled));
    if (std::abs(scaled - n1) > 1e-9 || n1 < 1 || n1 >= params.num_individuals)
      fail(kExitInvalidInput,
           "--check-oracle requires w to match an exact design (w = n1/N)");
    const rcr::ExactDesign design(n1, params.num_individuals - n1);
    double reference = 0.0;
    switch (kind) {
      case rcr::CriterionKind::estimation_a:
        reference = params.obs_per_individual * params.num_individuals *
                    rcr::population_contrast_variance(params, design);
        break;
      case rcr::CriterionKind::prediction_a:
        reference = params.obs_per_individual *
                    rcr::contrast_mse_matrix(params, design).trace();
        break;
      case rcr::CriterionKind::prediction_d:
        if (!params.equal_error_variances())
          fail(kExitInvalidInput,
               "--check-oracle for pred-d needs equal error variances (the "
               "log-det offset is only design-independent there)");
        reference = rcr::contrast_mse_matrix(params, design).log_det() -
                    rcr::prediction_d_logdet_offset(params);
        break;
    }
    const double deviation =
        std::abs(value - reference) / std::max(1.0, std::abs(reference));
    pass = deviation <= 1e-8;
    out["oracle_check"] = {
        {"reference", reference}, {"rel_deviation", deviation}, {"pass", pass}};
  }
  print_json(out);
  return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

struct OptimizeArgs {
  ParamOptions params;
  std::string kind;
  double tol = 1e-10;
};

int run_optimize(OptimizeArgs& args) {
  const auto kind = parse_kind_or_fail(args.kind);
  const auto params = args.params.resolve();
  rcr::OptimizationResult<double> best;
  try {
    best = rcr::minimize_criterion(kind, params, args.tol);
  } catch (const std::exception& e) {
    fail(kExitInvalidInput, e.what());
  }
  const auto design =
      rcr::round_to_exact(best.w_star, params.num_individuals, kind, params);
  double eff_balanced = 0.0;
  const rcr::ApproxDesign<double> balanced(0.5);
  switch (kind) {
    case rcr::CriterionKind::estimation_a:
      eff_balanced = best.criterion_value / rcr::phi_estimation(balanced, params);
      break;
    case rcr::CriterionKind::prediction_a:
      eff_balanced = rcr::efficiency_a(balanced, params);
      break;
    case rcr::CriterionKind::prediction_d:
      eff_balanced = rcr::efficiency_d(balanced, params);
      break;
  }
  print_json(json{{"criterion", rcr::to_string(kind)},
                  {"w_star", best.w_star},
                  {"n1", design.group1_size},
                  {"n2", design.group2_size},
                  {"method", rcr::to_string(best.method)},
                  {"criterion_value", best.criterion_value},
                  {"eff_balanced", eff_balanced}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  ParamOptions params;
  std::string kind = "pred-a";
  std::string out_path;
  std::string out_dir = ".";
  double rho_min = 0.005;
  double rho_max = 0.995;
  double rho_step = 0.005;
  bool figures = false;
  int threads = 0;
};

std::vector<double> build_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo > 0.0) || !(hi < 1.0) || !(lo <= hi))
    fail(kExitInvalidInput, "rho grid must satisfy 0 < min <= max < 1, step > 0");
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double rho = lo + i * step;
    if (rho > hi + 1e-12) break;
    grid.push_back(rho);
  }
  return grid;
}

void write_rows_or_fail(const std::string& path,
                        const std::vector<rcr::SweepRow<double>>& rows) {
  std::ofstream out(path);
  if (!out) fail(kExitIoError, "cannot open output file: " + path);
  rcr::write_sweep(out, rows);
  if (!out) fail(kExitIoError, "failed while writing: " + path);
}

int run_sweep(SweepArgs& args) {
  const int threads = rcr::resolve_threads(args.threads);
  args.params.merge_config();
  const double sigma1 = args.params.sigma1_sq.value_or(1.0);
  const double sigma2 = args.params.sigma2_sq.value_or(1.0);

  if (args.figures) {
    if (sigma1 != sigma2)
      fail(kExitInvalidInput,
           "figure mode assumes equal error variances for both groups");
    rcr::SweepConfig<double> config;
    config.sigma1_sq = sigma1;
    config.sigma2_sq = sigma2;
    config.obs_per_individual = args.params.obs_per_individual.value_or(5);
    config.num_individuals = args.params.num_individuals.value_or(60);
    config.rho_grid = rcr::default_rho_grid<double>();
    config.rho_grid.push_back(0.999);  // large-dispersion endpoint

    const std::filesystem::path dir(args.out_dir);
    const auto sweep_for = [&](rcr::CriterionKind kind) {
      std::vector<rcr::SweepRow<double>> all;
      for (const double q : {3.0, 1.0, 0.3}) {
        config.dispersion_ratio = q;
        const auto rows = rcr::run_sweep(config, kind, threads);
        all.insert(all.end(), rows.begin(), rows.end());
      }
      return all;
    };
    const auto rows_a = sweep_for(rcr::CriterionKind::prediction_a);
    const auto rows_d = sweep_for(rcr::CriterionKind::prediction_d);
    write_rows_or_fail((dir / "wstar_pred_a.csv").string(), rows_a);
    write_rows_or_fail((dir / "wstar_pred_d.csv").string(), rows_d);
    write_rows_or_fail((dir / "eff_pred_a.csv").string(), rows_a);
    write_rows_or_fail((dir / "eff_pred_d.csv").string(), rows_d);
    std::cerr << "wrote 4 sweep files to " << dir.string() << '\n';
    return kExitOk;
  }

  if (!args.params.q)
    fail(kExitInvalidInput, "sweep requires --q (or --figures)");
  rcr::SweepConfig<double> config;
  config.dispersion_ratio = *args.params.q;
  config.sigma1_sq = sigma1;
  config.sigma2_sq = sigma2;
  config.obs_per_individual = args.params.obs_per_individual.value_or(5);
  config.num_individuals = args.params.num_individuals.value_or(60);
  config.rho_grid = build_grid(args.rho_min, args.rho_max, args.rho_step);
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    fail(kExitInvalidInput, e.what());
  }
  const auto rows = rcr::run_sweep(config, parse_kind_or_fail(args.kind), threads);
  if (args.out_path.empty())
    rcr::write_sweep(std::cout, rows);
  else
    write_rows_or_fail(args.out_path, rows);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

struct OracleCheckArgs {
  ParamOptions params;
  int max_size = 4;
  int draws = 20;
  std::uint64_t seed = 7321;
  double tolerance = 1e-8;
  bool include_det = false;
};

double matrix_rel_dev(const rcr::MatrixX<double>& a, const rcr::MatrixX<double>& b) {
  const double scale = std::max(1e-300, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

int run_oracle_check(OracleCheckArgs& args) {
  args.params.merge_config();
  const auto& fixed = args.params;
  if ((fixed.u && !(*fixed.u > 0.0)) || (fixed.v && !(*fixed.v > 0.0)))
    fail(kExitInvalidInput, "oracle requires positive dispersions");
  if (args.max_size < 1 || args.draws < 1)
    fail(kExitInvalidInput, "--max-size and --draws must be positive");

  std::mt19937_64 engine(args.seed);
  std::uniform_real_distribution<double> dispersion(0.1, 10.0);
  std::uniform_real_distribution<double> sigma(0.2, 5.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  double dev_blue = 0.0, dev_blup = 0.0, dev_mse = 0.0, dev_joint = 0.0;
  for (int n1 = 1; n1 <= args.max_size; ++n1)
    for (int n2 = 1; n2 <= args.max_size; ++n2)
      for (int k = 1; k <= args.max_size; ++k)
        for (int draw = 0; draw < args.draws; ++draw) {
          const rcr::ModelParams<double> params(
              fixed.sigma1_sq.value_or(sigma(engine)),
              fixed.sigma2_sq.value_or(sigma(engine)),
              fixed.u.value_or(dispersion(engine)),
              fixed.v.value_or(dispersion(engine)), k, n1 + n2);
          const rcr::ExactDesign design(n1, n2);
          const auto model = rcr::assemble(params, design);

          rcr::MatrixX<double> values(n1 + n2, k);
          for (int i = 0; i < n1 + n2; ++i)
            for (int r = 0; r < k; ++r) values(i, r) = noise(engine);
          const rcr::ObservationSet<double> data(n1, values);
          rcr::VectorX<double> y(model.num_obs());
          for (int i = 0; i < n1 + n2; ++i)
            for (int r = 0; r < k; ++r) y[i * k + r] = values(i, r);

          const auto solution = rcr::solve_mme(model, y);
          dev_blue = std::max(
              dev_blue,
              std::abs((solution.beta_hat[0] - solution.beta_hat[1]) -
                       rcr::population_contrast_blue(data)) /
                  std::max(1.0, std::abs(rcr::population_contrast_blue(data))));
          const auto theta = solution.theta_hat();
          for (int i = 0; i < n1 + n2; ++i) {
            const double closed = rcr::individual_contrast_blup(data, params, i);
            dev_blup = std::max(dev_blup,
                                std::abs((theta[2 * i] - theta[2 * i + 1]) - closed) /
                                    std::max(1.0, std::abs(closed)));
          }

          const auto joint = rcr::joint_mse(model);
          const auto oracle_mse = rcr::alpha_mse_from_theta(
              rcr::theta_mse(joint, design));
          dev_mse = std::max(
              dev_mse, matrix_rel_dev(oracle_mse,
                                      rcr::contrast_mse_matrix(params, design).dense()));

          // C-block closed forms
          const int n = n1 + n2;
          rcr::MatrixX<double> expected =
              rcr::MatrixX<double>::Zero(2 * n + 2, 2 * n + 2);
          expected(0, 0) =
              params.sigma1_sq * (k * params.dispersion1 + 1) / (double(k) * n1);
          expected(1, 1) =
              params.sigma2_sq * (k * params.dispersion2 + 1) / (double(k) * n2);
          for (int i = 0; i < n1; ++i) {
            expected(0, 2 + 2 * i) = -params.sigma1_sq * params.dispersion1 / n1;
            expected(2 + 2 * i, 0) = expected(0, 2 + 2 * i);
          }
          for (int i = n1; i < n; ++i) {
            expected(1, 2 + 2 * i + 1) = -params.sigma2_sq * params.dispersion2 / n2;
            expected(2 + 2 * i + 1, 1) = expected(1, 2 + 2 * i + 1);
          }
          const double s1 = params.sigma1_sq, s2 = params.sigma2_sq;
          const double u = params.dispersion1, v = params.dispersion2;
          const double kk = k;
          for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n1; ++j)
              expected(2 + 2 * i, 2 + 2 * j) +=
                  s1 * kk * u * u / (n1 * (kk * u + 1));
            expected(2 + 2 * i, 2 + 2 * i) += s1 * u / (kk * u + 1);
            expected(2 + 2 * i + 1, 2 + 2 * i + 1) += s2 * v;
          }
          for (int i = n1; i < n; ++i) {
            for (int j = n1; j < n; ++j)
              expected(2 + 2 * i + 1, 2 + 2 * j + 1) +=
                  s2 * kk * v * v / (n2 * (kk * v + 1));
            expected(2 + 2 * i + 1, 2 + 2 * i + 1) += s2 * v / (kk * v + 1);
            expected(2 + 2 * i, 2 + 2 * i) += s1 * u;
          }
          dev_joint = std::max(dev_joint, matrix_rel_dev(joint.matrix, expected));
        }

  json out{{"grid", {{"max_size", args.max_size}, {"draws", args.draws}}},
           {"max_rel_dev",
            {{"blue", dev_blue},
             {"blup", dev_blup},
             {"mse_matrix", dev_mse},
             {"joint_mse", dev_joint}}},
           {"tolerance", args.tolerance}};

  bool pass = dev_blue <= args.tolerance && dev_blup <= args.tolerance &&
              dev_mse <= args.tolerance && dev_joint <= args.tolerance;

  if (args.include_det) {
    // measured offset between the D-criterion and the exact-design log det,
    // for equal error variances: constant across designs of the same model
    double max_offset_error = 0.0, max_spread = 0.0;
    double sample_offset = 0.0;
    for (int n = 2; n <= std::max(4, 2 * args.max_size); ++n)
      for (int k = 1; k <= std::min(3, args.max_size); ++k)
        for (int draw = 0; draw < 5; ++draw) {
          const double s = fixed.sigma1_sq.value_or(sigma(engine));
          const rcr::ModelParams<double> params(
              s, s, fixed.u.value_or(dispersion(engine)),
              fixed.v.value_or(dispersion(engine)), k, n);
          const double predicted = rcr::prediction_d_logdet_offset(params);
          sample_offset = predicted;
          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
          for (int n1 = 1; n1 < n; ++n1) {
            const rcr::ExactDesign design(n1, n - n1);
            const double measured =
                rcr::contrast_mse_matrix(params, design).log_det() -
                rcr::phi_prediction_d(
                    rcr::ApproxDesign<double>(design.allocation_rate()), params);
            lo = std::min(lo, measured);
            hi = std::max(hi, measured);
            max_offset_error =
                std::max(max_offset_error, std::abs(measured - predicted));
          }
          max_spread = std::max(max_spread, hi - lo);
        }
    out["det_offset"] = {{"sample_value", sample_offset},
                         {"max_abs_error_vs_closed_form", max_offset_error},
                         {"max_spread_across_designs", max_spread},
                         {"note",
                          "log det(MSE) - phi_D is constant across designs for "
                          "equal error variances; the closed form is "
                          "log(sigma^2 K N (u+v+Kuv) / (K(u+v)+1))"}};
    pass = pass && max_offset_error <= args.tolerance && max_spread <= args.tolerance;
  }

  out["pass"] = pass;
  print_json(out);
  return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// simulate / validate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  ParamOptions params;
  int group1_size = 0;
  int group2_size = 0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  std::uint64_t seed = 20240901;
  std::int64_t replicate_index = 0;
  std::string out_path;
  std::string sidecar_path;
  std::string estimate_path;
};

int run_estimate(SimulateArgs& args) {
  std::ifstream in(args.estimate_path);
  if (!in) fail(kExitIoError, "cannot open dataset: " + args.estimate_path);
  rcr::ObservationSet<double> data(1, rcr::MatrixX<double>::Zero(1, 1));
  try {
    data = rcr::read_observations(in);
  } catch (const std::invalid_argument& e) {
    fail(kExitInvalidInput, e.what());
  }
  args.params.obs_per_individual = data.obs_per_individual();
  const auto params = args.params.resolve(data.num_individuals());
  if (data.group1_size() == 0 || data.group2_size() == 0)
    fail(kExitInvalidInput, "degenerate design: group has no individuals");

  json alphas = json::array();
  for (int i = 0; i < data.num_individuals(); ++i)
    alphas.push_back(rcr::individual_contrast_blup(data, params, i));
  print_json(json{{"file", args.estimate_path},
                  {"n1", data.group1_size()},
                  {"n2", data.group2_size()},
                  {"K", data.obs_per_individual()},
                  {"alpha0_hat", rcr::population_contrast_blue(data)},
                  {"alpha_hat", alphas}});
  return kExitOk;
}

rcr::SimulationSpec<double> build_spec(SimulateArgs& args,
                                       std::int64_t replications) {
  if (args.group1_size < 1 || args.group2_size < 1)
    fail(kExitInvalidInput, "--n1 and --n2 must both be at least 1");
  const auto params =
      args.params.resolve(args.group1_size + args.group2_size);
  try {
    return rcr::SimulationSpec<double>(
        params, rcr::ExactDesign(args.group1_size, args.group2_size),
        {args.mu1, args.mu2}, replications, args.seed);
  } catch (const std::invalid_argument& e) {
    fail(kExitInvalidInput, e.what());
  }
}

int run_simulate(SimulateArgs& args) {
  if (!args.estimate_path.empty()) return run_estimate(args);
  if (args.out_path.empty())
    fail(kExitInvalidInput, "--out is required (or use --estimate)");
  const auto spec = build_spec(args, 1);
  const auto dataset = rcr::simulate_dataset(spec, args.replicate_index);

  std::ofstream out(args.out_path);
  if (!out) fail(kExitIoError, "cannot open output file: " + args.out_path);
  rcr::write_observations(out, dataset.observations);
  if (!out) fail(kExitIoError, "failed while writing: " + args.out_path);

  const std::string sidecar = args.sidecar_path.empty()
                                  ? args.out_path + ".json"
                                  : args.sidecar_path;
  json truth{{"seed", spec.seed},
             {"replicate_index", args.replicate_index},
             {"theta0", {spec.theta0.first, spec.theta0.second}},
             {"alpha0_true", spec.population_contrast()},
             {"alpha_true", std::vector<double>(
                                dataset.true_contrasts.data(),
                                dataset.true_contrasts.data() +
                                    dataset.true_contrasts.size())}};
  std::ofstream side(sidecar);
  if (!side) fail(kExitIoError, "cannot open sidecar file: " + sidecar);
  side << truth.dump(2) << '\n';
  if (!side) fail(kExitIoError, "failed while writing: " + sidecar);
  std::cerr << "wrote " << args.out_path << " and " << sidecar << '\n';
  return kExitOk;
}

struct ValidateArgs {
  SimulateArgs sim;
  std::int64_t replications = 100000;
  double z_threshold = 4.0;
  int threads = 0;
};

json moment_json(const rcr::MomentCheck<double>& check) {
  return {{"empirical", check.empirical},
          {"theoretical", check.theoretical},
          {"se", check.se},
          {"pass", check.pass}};
}

int run_validate(ValidateArgs& args) {
  const auto spec = build_spec(args.sim, args.replications);
  const auto report =
      rcr::validate(spec, args.z_threshold, rcr::resolve_threads(args.threads));
  json diag = json::array();
  for (std::size_t i = 0; i < report.mse_diagonal.size(); ++i) {
    json entry = moment_json(report.mse_diagonal[i]);
    entry["individual"] = i + 1;
    diag.push_back(entry);
  }
  json bias = json::array();
  for (std::size_t i = 0; i < report.prediction_bias.size(); ++i) {
    json entry = moment_json(report.prediction_bias[i]);
    entry["individual"] = i + 1;
    bias.push_back(entry);
  }
  print_json(json{{"replications", report.replications},
                  {"seed", report.seed},
                  {"z_threshold", report.z_threshold},
                  {"alpha0_mean", moment_json(report.alpha0_mean)},
                  {"alpha0_variance", moment_json(report.alpha0_variance)},
                  {"mse_diagonal", diag},
                  {"prediction_bias", bias},
                  {"all_pass", report.all_pass()}});
  return report.all_pass() ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Optimal two-group allocation for random coefficient regression: "
      "criterion evaluation, design optimization, sweeps, simulation, and "
      "oracle self-checks"};
  app.require_subcommand(1);

  CriterionArgs criterion_args;
  auto* criterion_cmd =
      app.add_subcommand("criterion", "evaluate a design criterion at w");
  criterion_args.params.register_on(criterion_cmd);
  criterion_cmd->add_option("--kind", criterion_args.kind,
                            "est, pred-a, or pred-d")->required();
  criterion_cmd->add_option("--w", criterion_args.w, "allocation rate to group 1")
      ->required();
  criterion_cmd->add_flag("--check-oracle", criterion_args.check_oracle,
                          "cross-check the value against the exact-design MSE");

  OptimizeArgs optimize_args;
  auto* optimize_cmd =
      app.add_subcommand("optimize", "find the optimal allocation rate");
  optimize_args.params.register_on(optimize_cmd);
  optimize_cmd->add_option("--kind", optimize_args.kind,
                           "est, pred-a, or pred-d")->required();
  optimize_cmd->add_option("--tol", optimize_args.tol,
                           "numeric search tolerance on w");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "tabulate optimal rates and efficiencies over a rho grid");
  sweep_args.params.register_on(sweep_cmd);
  sweep_cmd->add_option("--kind", sweep_args.kind, "est, pred-a, or pred-d");
  sweep_cmd->add_option("--out", sweep_args.out_path,
                        "output CSV path (stdout if omitted)");
  sweep_cmd->add_option("--rho-min", sweep_args.rho_min, "grid start");
  sweep_cmd->add_option("--rho-max", sweep_args.rho_max, "grid end");
  sweep_cmd->add_option("--rho-step", sweep_args.rho_step, "grid step");
  sweep_cmd->add_flag("--figures", sweep_args.figures,
                      "emit the four standard files (q in {3,1,0.3}, both "
                      "prediction criteria, rho up to 0.999)");
  sweep_cmd->add_option("--out-dir", sweep_args.out_dir,
                        "directory for --figures output");
  sweep_cmd->add_option("--threads", sweep_args.threads,
                        "worker threads (default: RCR_THREADS or all cores)");

  OracleCheckArgs oracle_args;
  auto* oracle_cmd = app.add_subcommand(
      "oracle-check",
      "compare every closed form against the mixed-model solver over a grid "
      "of small instances");
  oracle_args.params.register_on(oracle_cmd, false);
  oracle_cmd->add_option("--max-size", oracle_args.max_size,
                         "grid bound for n1, n2, K (default 4)");
  oracle_cmd->add_option("--draws", oracle_args.draws,
                         "random parameter draws per instance (default 20)");
  oracle_cmd->add_option("--seed", oracle_args.seed, "draw seed");
  oracle_cmd->add_option("--tolerance", oracle_args.tolerance,
                         "max relative deviation allowed (default 1e-8)");
  oracle_cmd->add_flag("--include-det", oracle_args.include_det,
                       "also measure the D-criterion log-det offset");

  SimulateArgs simulate_args;
  auto* simulate_cmd = app.add_subcommand(
      "simulate", "draw one synthetic dataset (or estimate from an existing one)");
  simulate_args.params.register_on(simulate_cmd, false);
  simulate_cmd->add_option("--n1", simulate_args.group1_size, "group-1 size");
  simulate_cmd->add_option("--n2", simulate_args.group2_size, "group-2 size");
  simulate_cmd->add_option("--mu1", simulate_args.mu1, "population mean, group 1");
  simulate_cmd->add_option("--mu2", simulate_args.mu2, "population mean, group 2");
  simulate_cmd->add_option("--seed", simulate_args.seed, "stream seed");
  simulate_cmd->add_option("--replicate-index", simulate_args.replicate_index,
                           "which replicate stream to draw");
  simulate_cmd->add_option("--out", simulate_args.out_path, "dataset CSV path");
  simulate_cmd->add_option("--sidecar", simulate_args.sidecar_path,
                           "truth JSON path (default: <out>.json)");
  simulate_cmd->add_option("--estimate", simulate_args.estimate_path,
                           "read this dataset CSV and print the BLUE and all "
                           "BLUPs instead of simulating");

  ValidateArgs validate_args;
  auto* validate_cmd = app.add_subcommand(
      "validate", "Monte Carlo check of the variance and MSE formulas");
  validate_args.sim.params.register_on(validate_cmd, false);
  validate_cmd->add_option("--n1", validate_args.sim.group1_size, "group-1 size");
  validate_cmd->add_option("--n2", validate_args.sim.group2_size, "group-2 size");
  validate_cmd->add_option("--mu1", validate_args.sim.mu1, "population mean, group 1");
  validate_cmd->add_option("--mu2", validate_args.sim.mu2, "population mean, group 2");
  validate_cmd->add_option("--seed", validate_args.sim.seed, "stream seed");
  validate_cmd->add_option("--replications", validate_args.replications,
                           "Monte Carlo replications (default 1e5)");
  validate_cmd->add_option("--z", validate_args.z_threshold,
                           "pass threshold in standard errors (default 4)");
  validate_cmd->add_option("--threads", validate_args.threads,
                           "worker threads (default: RCR_THREADS or all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitInvalidInput;
  }

  try {
    if (*criterion_cmd) return run_criterion(criterion_args);
    if (*optimize_cmd) return run_optimize(optimize_args);
    if (*sweep_cmd) return run_sweep(sweep_args);
    if (*oracle_cmd) return run_oracle_check(oracle_args);
    if (*simulate_cmd) return run_simulate(simulate_args);
    if (*validate_cmd) return run_validate(validate_args);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }
  return kExitInvalidInput;
}
