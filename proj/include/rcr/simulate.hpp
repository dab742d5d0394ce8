/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "rcr/estimation.hpp"
#include "rcr/model.hpp"
#include "rcr/parallel.hpp"
#include "rcr/rng.hpp"

namespace rcr {

/// Everything needed to draw synthetic data: parameters, design, the true
/// population means, the replication count, and the seed. The same spec
/// always produces the same data, replicate by replicate.
template <typename Scalar = double>
struct SimulationSpec {
  ModelParams<Scalar> params;
  ExactDesign design;
  std::pair<Scalar, Scalar> theta0;  ///< population means (mu1, mu2)
  std::int64_t replications;
  std::uint64_t seed;

  SimulationSpec(ModelParams<Scalar> params_, ExactDesign design_,
                 std::pair<Scalar, Scalar> theta0_, std::int64_t replications_,
                 std::uint64_t seed_)
      : params(std::move(params_)),
        design(design_),
        theta0(theta0_),
        replications(replications_),
        seed(seed_) {
    require_consistent(params, design);
    if (replications < 1)
      throw std::invalid_argument("replications must be >= 1");
  }

  Scalar population_contrast() const { return theta0.first - theta0.second; }
};

using SimulationSpecd = SimulationSpec<double>;

/// One simulated replicate: the observations plus the realized individual
/// contrasts the predictors are judged against.
template <typename Scalar = double>
struct SimulatedDataset {
  ObservationSet<Scalar> observations;
  VectorX<Scalar> true_contrasts;  ///< realized mu1_i - mu2_i, length N
};

/// Draw one replicate. Both latent response components are drawn for every
/// individual (Gaussian, independent), then errors on the observed component
/// only. Draw order per individual: group-1 deviation, group-2 deviation;
/// then all errors in row-major observation order.
template <typename Scalar>
SimulatedDataset<Scalar> simulate_dataset(const SimulationSpec<Scalar>& spec,
                                          std::int64_t replicate_index) {
  const auto& p = spec.params;
  const int n = p.num_individuals;
  const int n1 = spec.design.group1_size;
  const int k = p.obs_per_individual;
  auto rng = replicate_rng(spec.seed, static_cast<std::uint64_t>(replicate_index));

  const Scalar sd_g1 = std::sqrt(p.sigma1_sq * p.dispersion1);
  const Scalar sd_g2 = std::sqrt(p.sigma2_sq * p.dispersion2);
  const Scalar sd_e1 = std::sqrt(p.sigma1_sq);
  const Scalar sd_e2 = std::sqrt(p.sigma2_sq);

  VectorX<Scalar> mu1(n), mu2(n);
  for (int i = 0; i < n; ++i) {
    mu1[i] = spec.theta0.first + sd_g1 * Scalar(standard_normal(rng));
    mu2[i] = spec.theta0.second + sd_g2 * Scalar(standard_normal(rng));
  }
  MatrixX<Scalar> values(n, k);
  for (int i = 0; i < n; ++i) {
    const bool in_g1 = i < n1;
    const Scalar mean = in_g1 ? mu1[i] : mu2[i];
    const Scalar sd = in_g1 ? sd_e1 : sd_e2;
    for (int r = 0; r < k; ++r)
      values(i, r) = mean + sd * Scalar(standard_normal(rng));
  }
  return SimulatedDataset<Scalar>{ObservationSet<Scalar>(n1, std::move(values)),
                                  mu1 - mu2};
}

namespace detail {

/// Neumaier-compensated sum over a fixed-order range; immune to the usual
/// accumulation error at 1e5+ terms.
template <typename Scalar>
Scalar compensated_sum(const std::vector<Scalar>& xs) {
  Scalar sum = 0, comp = 0;
  for (const Scalar x : xs) {
    const Scalar t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

template <typename Scalar>
Scalar mean_of(const std::vector<Scalar>& xs) {
  return compensated_sum(xs) / Scalar(xs.size());
}

}  // namespace detail

/// One empirical-vs-theoretical comparison with its Monte Carlo standard
/// error. Passes when |empirical - theoretical| <= z * se.
template <typename Scalar = double>
struct MomentCheck {
  Scalar empirical;
  Scalar theoretical;
  Scalar se;
  bool pass;
};

/// Monte Carlo validation summary for one simulation spec.
template <typename Scalar = double>
struct ValidationReport {
  std::int64_t replications;
  std::uint64_t seed;
  Scalar z_threshold;
  MomentCheck<Scalar> alpha0_mean;          ///< BLUE unbiasedness
  MomentCheck<Scalar> alpha0_variance;      ///< BLUE variance vs theory
  std::vector<MomentCheck<Scalar>> mse_diagonal;   ///< per-individual MSE
  std::vector<MomentCheck<Scalar>> prediction_bias;  ///< BLUP unbiasedness

  bool all_pass() const {
    if (!alpha0_mean.pass || !alpha0_variance.pass) return false;
    for (const auto& c : mse_diagonal)
      if (!c.pass) return false;
    for (const auto& c : prediction_bias)
      if (!c.pass) return false;
    return true;
  }
};

/// Run the replicates, estimate the population contrast and every individual
/// contrast per replicate, and compare empirical moments against the
/// closed-form variance and MSE diagonal.
///
/// Replicates are distributed over threads; per-replicate statistics land in
/// indexed slots and are reduced in replicate order with compensated
/// summation, so the report is identical for every thread count.
template <typename Scalar>
ValidationReport<Scalar> validate(const SimulationSpec<Scalar>& spec,
                                  Scalar z_threshold = Scalar(4),
                                  int threads = 1) {
  const auto& p = spec.params;
  const int n = p.num_individuals;
  const std::int64_t reps = spec.replications;

  std::vector<Scalar> alpha0_hats(static_cast<std::size_t>(reps));
  // prediction errors alpha_hat_i - alpha_i, one slice of n per replicate
  std::vector<Scalar> pred_errors(static_cast<std::size_t>(reps) * n);

  parallel_for_index(reps, threads, [&](std::int64_t r) {
    const auto dataset = simulate_dataset(spec, r);
    alpha0_hats[static_cast<std::size_t>(r)] =
        population_contrast_blue(dataset.observations);
    for (int i = 0; i < n; ++i) {
      const Scalar predicted =
          individual_contrast_blup(dataset.observations, p, i);
      pred_errors[static_cast<std::size_t>(r) * n + i] =
          predicted - dataset.true_contrasts[i];
    }
  });

  ValidationReport<Scalar> report;
  report.replications = reps;
  report.seed = spec.seed;
  report.z_threshold = z_threshold;

  const Scalar mean_alpha0 = detail::mean_of(alpha0_hats);
  std::vector<Scalar> sq(alpha0_hats.size()), fourth(alpha0_hats.size());
  for (std::size_t r = 0; r < alpha0_hats.size(); ++r) {
    const Scalar d = alpha0_hats[r] - mean_alpha0;
    sq[r] = d * d;
    fourth[r] = d * d * d * d;
  }
  const Scalar var_alpha0 =
      detail::compensated_sum(sq) / Scalar(reps - 1);
  const Scalar m4 = detail::mean_of(fourth);
  // SE of the sample variance via the fourth central moment
  const Scalar se_var =
      std::sqrt(std::max(m4 - var_alpha0 * var_alpha0, Scalar(0)) / Scalar(reps));
  const Scalar se_mean = std::sqrt(var_alpha0 / Scalar(reps));

  const Scalar theo_var = population_contrast_variance(p, spec.design);
  report.alpha0_mean = {mean_alpha0, spec.population_contrast(), se_mean,
                        std::abs(mean_alpha0 - spec.population_contrast()) <=
                            z_threshold * se_mean};
  report.alpha0_variance = {var_alpha0, theo_var, se_var,
                            std::abs(var_alpha0 - theo_var) <= z_threshold * se_var};

  const auto mse = contrast_mse_matrix(p, spec.design);
  const MatrixX<Scalar> mse_dense = mse.dense();
  report.mse_diagonal.reserve(n);
  report.prediction_bias.reserve(n);
  std::vector<Scalar> err(static_cast<std::size_t>(reps));
  std::vector<Scalar> err_sq(static_cast<std::size_t>(reps));
  std::vector<Scalar> err_4th(static_cast<std::size_t>(reps));
  for (int i = 0; i < n; ++i) {
    for (std::int64_t r = 0; r < reps; ++r) {
      const Scalar e = pred_errors[static_cast<std::size_t>(r) * n + i];
      err[static_cast<std::size_t>(r)] = e;
      err_sq[static_cast<std::size_t>(r)] = e * e;
      err_4th[static_cast<std::size_t>(r)] = e * e * e * e;
    }
    const Scalar mean_err = detail::mean_of(err);
    const Scalar mean_sq = detail::mean_of(err_sq);
    const Scalar mean_4th = detail::mean_of(err_4th);
    const Scalar se_sq =
        std::sqrt(std::max(mean_4th - mean_sq * mean_sq, Scalar(0)) / Scalar(reps));
    const Scalar se_err = std::sqrt(std::max(mean_sq - mean_err * mean_err,
                                             Scalar(0)) /
                                    Scalar(reps));
    const Scalar theo = mse_dense(i, i);
    report.mse_diagonal.push_back(
        {mean_sq, theo, se_sq, std::abs(mean_sq - theo) <= z_threshold * se_sq});
    report.prediction_bias.push_back(
        {mean_err, Scalar(0), se_err, std::abs(mean_err) <= z_threshold * se_err});
  }
  return report;
}

}  // namespace rcr
