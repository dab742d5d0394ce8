/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "rcr/estimation.hpp"
#include "rcr/golden_section.hpp"
#include "rcr/model.hpp"

namespace rcr {

/// The three design criteria: A-criterion for estimating the population
/// contrast, and A-/D-criteria for predicting the individual contrasts.
enum class CriterionKind { estimation_a, prediction_a, prediction_d };

inline const char* to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::estimation_a: return "est";
    case CriterionKind::prediction_a: return "pred-a";
    case CriterionKind::prediction_d: return "pred-d";
  }
  throw std::invalid_argument("unknown criterion kind");
}

inline CriterionKind parse_criterion(const std::string& name) {
  if (name == "est") return CriterionKind::estimation_a;
  if (name == "pred-a") return CriterionKind::prediction_a;
  if (name == "pred-d") return CriterionKind::prediction_d;
  throw std::invalid_argument("unknown criterion kind: " + name +
                              " (expected est, pred-a, or pred-d)");
}

/// Estimation criterion: the BLUE variance rescaled to allocation rates
/// (dropping the 1/(K N) factor). Strictly convex on (0, 1), diverging at
/// both ends.
template <typename Scalar>
Scalar phi_estimation(ApproxDesign<Scalar> design, const ModelParams<Scalar>& p) {
  const Scalar w = design.rate;
  const Scalar k = Scalar(p.obs_per_individual);
  return p.sigma1_sq * (k * p.dispersion1 + 1) / w +
         p.sigma2_sq * (k * p.dispersion2 + 1) / (1 - w);
}

/// Closed-form minimizer of the estimation criterion.
template <typename Scalar>
Scalar optimal_rate_estimation(const ModelParams<Scalar>& p) {
  const Scalar k = Scalar(p.obs_per_individual);
  return 1 / (1 + std::sqrt(p.sigma2_sq * (k * p.dispersion2 + 1) /
                            (p.sigma1_sq * (k * p.dispersion1 + 1))));
}

/// A-criterion for prediction: K times the trace of the contrast MSE matrix,
/// written in allocation rates. Exactly equals
/// K * contrast_mse_matrix(...).trace() at w = n1/N.
template <typename Scalar>
Scalar phi_prediction_a(ApproxDesign<Scalar> design, const ModelParams<Scalar>& p) {
  const Scalar w = design.rate;
  const Scalar s1 = p.sigma1_sq, s2 = p.sigma2_sq;
  const Scalar u = p.dispersion1, v = p.dispersion2;
  const Scalar k = Scalar(p.obs_per_individual);
  const Scalar n = Scalar(p.num_individuals);
  const Scalar ku1 = k * u + 1, kv1 = k * v + 1;
  const Scalar offset = s1 * (1 / ku1 - ku1) + s2 * (1 / kv1 - kv1);
  return offset + s1 * ku1 / w + s2 * kv1 / (1 - w) +
         n * w * (s1 * k * u / ku1 + s2 * k * v) +
         n * (1 - w) * (s2 * k * v / kv1 + s1 * k * u);
}

namespace detail {

/// u + v + K u v; the common factor of both MSE diagonal coefficients.
template <typename Scalar>
Scalar dispersion_product_sum(const ModelParams<Scalar>& p) {
  const Scalar k = Scalar(p.obs_per_individual);
  return p.dispersion1 + p.dispersion2 + k * p.dispersion1 * p.dispersion2;
}

}  // namespace detail

/// D-criterion for prediction: the log generalized prediction variance in
/// allocation rates. Requires at least one positive dispersion. For equal
/// error variances it differs from the exact-design log-determinant by the
/// design-independent constant prediction_d_logdet_offset().
template <typename Scalar>
Scalar phi_prediction_d(ApproxDesign<Scalar> design, const ModelParams<Scalar>& p) {
  const Scalar w = design.rate;
  const Scalar s1 = p.sigma1_sq, s2 = p.sigma2_sq;
  const Scalar u = p.dispersion1, v = p.dispersion2;
  const Scalar k = Scalar(p.obs_per_individual);
  const Scalar n = Scalar(p.num_individuals);
  if (u == Scalar(0) && v == Scalar(0))
    throw std::domain_error("determinant degenerate in fixed-effects limit");
  const Scalar ku1 = k * u + 1, kv1 = k * v + 1;
  // log-space assembly: the dispersion powers overflow double well below N=60
  const Scalar base = (n - 1) * std::log(s2) +
                      (n - 2) * std::log(detail::dispersion_product_sum(p)) +
                      std::log(ku1) + std::log(k * (u + v) + 1) - std::log(s1) -
                      2 * std::log(k) - std::log(n) - (n - 1) * std::log(kv1);
  return base + w * n * std::log(s1 * kv1 / (s2 * ku1)) +
         std::log((s1 * (1 - w) + s2 * w) / (w * (1 - w)));
}

/// Constant by which the exact-design log det exceeds phi_prediction_d at
/// w = n1/N when the error variances are equal:
/// log(sigma^2 K N (u+v+Kuv) / (K(u+v)+1)). Independent of the design.
template <typename Scalar>
Scalar prediction_d_logdet_offset(const ModelParams<Scalar>& p) {
  if (!p.equal_error_variances())
    throw std::domain_error(
        "log-det offset is design-independent only for equal error variances");
  if (p.dispersion1 == Scalar(0) && p.dispersion2 == Scalar(0))
    throw std::domain_error("determinant degenerate in fixed-effects limit");
  const Scalar k = Scalar(p.obs_per_individual);
  const Scalar n = Scalar(p.num_individuals);
  const Scalar uv = p.dispersion1 + p.dispersion2;
  return std::log(p.sigma1_sq * k * n * detail::dispersion_product_sum(p) /
                  (k * uv + 1));
}

/// Closed-form D-optimal allocation rate for prediction. Valid only when the
/// error variances are equal; for the symmetric dispersion case (a -> 0) the
/// analytic limit is 1/2.
template <typename Scalar>
Scalar optimal_rate_prediction_d(const ModelParams<Scalar>& p) {
  if (!p.equal_error_variances())
    throw std::domain_error(
        "closed form requires equal error variances; use numeric minimizer");
  const Scalar k = Scalar(p.obs_per_individual);
  const Scalar n = Scalar(p.num_individuals);
  const Scalar a =
      n * std::log((k * p.dispersion2 + 1) / (k * p.dispersion1 + 1));
  if (std::abs(a) < Scalar(1e-9)) return Scalar(0.5);
  return (a + 2 - std::sqrt(a * a + 4)) / (2 * a);
}

/// Evaluate one criterion at an allocation rate.
template <typename Scalar>
Scalar evaluate_criterion(CriterionKind kind, ApproxDesign<Scalar> design,
                          const ModelParams<Scalar>& p) {
  switch (kind) {
    case CriterionKind::estimation_a: return phi_estimation(design, p);
    case CriterionKind::prediction_a: return phi_prediction_a(design, p);
    case CriterionKind::prediction_d: return phi_prediction_d(design, p);
  }
  throw std::invalid_argument("unknown criterion kind");
}

enum class OptimizationMethod { closed_form, golden_section };

inline const char* to_string(OptimizationMethod m) {
  return m == OptimizationMethod::closed_form ? "closed_form" : "golden_section";
}

template <typename Scalar = double>
struct OptimizationResult {
  Scalar w_star;
  Scalar criterion_value;
  OptimizationMethod method;
  int iterations;
  Scalar achieved_tol;
};

/// Domain truncation for the numeric search; the criteria blow up at the
/// boundaries, so the minimizer is always interior at desk-scale parameters.
inline constexpr double kSearchMargin = 1e-6;

/// Minimize a criterion over the allocation rate. Uses the closed form where
/// one exists (estimation always; D-prediction with equal error variances)
/// unless force_numeric is set; otherwise golden-section search on
/// [margin, 1 - margin]. All three criteria are strictly convex in w.
template <typename Scalar>
OptimizationResult<Scalar> minimize_criterion(CriterionKind kind,
                                              const ModelParams<Scalar>& p,
                                              Scalar tol = Scalar(1e-10),
                                              bool force_numeric = false) {
  if (!(tol >= Scalar(1e-12)))
    throw std::invalid_argument("tolerance must be at least 1e-12");
  OptimizationResult<Scalar> result;
  if (!force_numeric) {
    if (kind == CriterionKind::estimation_a) {
      result.w_star = optimal_rate_estimation(p);
      result.criterion_value = phi_estimation(ApproxDesign<Scalar>(result.w_star), p);
      result.method = OptimizationMethod::closed_form;
      result.iterations = 0;
      result.achieved_tol = Scalar(0);
      return result;
    }
    if (kind == CriterionKind::prediction_d && p.equal_error_variances()) {
      result.w_star = optimal_rate_prediction_d(p);
      result.criterion_value =
          phi_prediction_d(ApproxDesign<Scalar>(result.w_star), p);
      result.method = OptimizationMethod::closed_form;
      result.iterations = 0;
      result.achieved_tol = Scalar(0);
      return result;
    }
  }
  const Scalar margin = Scalar(kSearchMargin);
  auto objective = [&](Scalar w) {
    return evaluate_criterion(kind, ApproxDesign<Scalar>(w), p);
  };
  const auto gs = golden_section_minimize<Scalar>(objective, margin, 1 - margin, tol);
  result.w_star = gs.x;
  result.criterion_value = gs.value;
  result.method = OptimizationMethod::golden_section;
  result.iterations = gs.iterations;
  result.achieved_tol = gs.final_width;
  return result;
}

/// A-efficiency of an allocation rate relative to the A-optimal one.
template <typename Scalar>
Scalar efficiency_a(ApproxDesign<Scalar> design, const ModelParams<Scalar>& p) {
  const auto best = minimize_criterion(CriterionKind::prediction_a, p);
  return best.criterion_value / phi_prediction_a(design, p);
}

/// D-efficiency: the N-th root of the generalized-variance ratio, computed in
/// log space so the criterion constants cancel.
template <typename Scalar>
Scalar efficiency_d(ApproxDesign<Scalar> design, const ModelParams<Scalar>& p) {
  const auto best = minimize_criterion(CriterionKind::prediction_d, p);
  return std::exp((best.criterion_value - phi_prediction_d(design, p)) /
                  Scalar(p.num_individuals));
}

/// Round an allocation rate to integer group sizes, clamped so both groups
/// keep at least one individual.
inline ExactDesign round_to_exact(double w, int num_individuals) {
  if (!(w > 0 && w < 1)) throw std::domain_error("allocation rate must lie in (0, 1)");
  if (num_individuals < 2) throw std::invalid_argument("need at least two individuals");
  int n1 = static_cast<int>(std::lround(w * num_individuals));
  n1 = std::max(1, std::min(num_individuals - 1, n1));
  return ExactDesign(n1, num_individuals - n1);
}

/// Criterion-aware rounding: evaluates the floor and ceiling candidates and
/// keeps the better one.
template <typename Scalar>
ExactDesign round_to_exact(Scalar w, int num_individuals, CriterionKind kind,
                           const ModelParams<Scalar>& p) {
  if (!(w > Scalar(0) && w < Scalar(1)))
    throw std::domain_error("allocation rate must lie in (0, 1)");
  const int lo = std::max(
      1, std::min(num_individuals - 1,
                  static_cast<int>(std::floor(w * num_individuals))));
  const int hi = std::max(
      1, std::min(num_individuals - 1,
                  static_cast<int>(std::ceil(w * num_individuals))));
  if (lo == hi) return ExactDesign(lo, num_individuals - lo);
  const Scalar at_lo = evaluate_criterion(
      kind, ApproxDesign<Scalar>(Scalar(lo) / Scalar(num_individuals)), p);
  const Scalar at_hi = evaluate_criterion(
      kind, ApproxDesign<Scalar>(Scalar(hi) / Scalar(num_individuals)), p);
  const int n1 = at_lo <= at_hi ? lo : hi;
  return ExactDesign(n1, num_individuals - n1);
}

}  // namespace rcr
