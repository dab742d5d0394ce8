/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "rcr/model.hpp"

namespace rcr {

/// Mean-squared-error matrix of the vector of individual contrast predictors,
/// stored in compressed block form. Both diagonal blocks are
/// (common * ones + diag * identity); the off-diagonal block is constant.
/// O(1) storage keeps trace and log-determinant exact and cheap at any size.
template <typename Scalar = double>
struct MseMatrix {
  int group1_size;
  int group2_size;
  Scalar g1_common;    ///< rank-one coefficient of the group-1 block
  Scalar g1_diag;      ///< identity coefficient of the group-1 block
  Scalar cross_common; ///< constant value of the between-group block
  Scalar g2_common;    ///< rank-one coefficient of the group-2 block
  Scalar g2_diag;      ///< identity coefficient of the group-2 block

  int rows() const { return group1_size + group2_size; }

  /// Materialize the dense symmetric matrix.
  MatrixX<Scalar> dense() const {
    const int n1 = group1_size, n2 = group2_size, n = rows();
    MatrixX<Scalar> m(n, n);
    m.topLeftCorner(n1, n1).setConstant(g1_common);
    m.topLeftCorner(n1, n1).diagonal().array() += g1_diag;
    m.topRightCorner(n1, n2).setConstant(cross_common);
    m.bottomLeftCorner(n2, n1).setConstant(cross_common);
    m.bottomRightCorner(n2, n2).setConstant(g2_common);
    m.bottomRightCorner(n2, n2).diagonal().array() += g2_diag;
    return m;
  }

  Scalar trace() const {
    return Scalar(group1_size) * (g1_common + g1_diag) +
           Scalar(group2_size) * (g2_common + g2_diag);
  }

  /// Exact log-determinant via the block formula
  ///   det = d1^(n1-1) d2^(n2-1) [(d1 + n1 j1)(d2 + n2 j2) - n1 n2 j12^2].
  /// Returns -inf for singular matrices (zero-dispersion limit).
  Scalar log_det() const {
    const Scalar n1 = Scalar(group1_size), n2 = Scalar(group2_size);
    const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
    const Scalar tail = (g1_diag + n1 * g1_common) * (g2_diag + n2 * g2_common) -
                        n1 * n2 * cross_common * cross_common;
    if (!(tail > Scalar(0))) return neg_inf;
    Scalar result = std::log(tail);
    if (group1_size > 1) {
      if (!(g1_diag > Scalar(0))) return neg_inf;
      result += (n1 - Scalar(1)) * std::log(g1_diag);
    }
    if (group2_size > 1) {
      if (!(g2_diag > Scalar(0))) return neg_inf;
      result += (n2 - Scalar(1)) * std::log(g2_diag);
    }
    return result;
  }
};

using MseMatrixd = MseMatrix<double>;

/// Best linear unbiased estimate of the population contrast mu1 - mu2:
/// the difference of the two group grand means.
template <typename Scalar>
Scalar population_contrast_blue(const ObservationSet<Scalar>& data) {
  return data.group_mean(1) - data.group_mean(2);
}

/// Variance of the population-contrast BLUE under the given design.
template <typename Scalar>
Scalar population_contrast_variance(const ModelParams<Scalar>& params,
                                    const ExactDesign& design) {
  require_consistent(params, design);
  const Scalar s1 = params.sigma1_sq, s2 = params.sigma2_sq;
  const Scalar u = params.dispersion1, v = params.dispersion2;
  const Scalar k = Scalar(params.obs_per_individual);
  return s1 * (k * u + 1) / (k * Scalar(design.group1_size)) +
         s2 * (k * v + 1) / (k * Scalar(design.group2_size));
}

/// Predicted response pair (mu1_hat_i, mu2_hat_i) for one individual.
///
/// The own-group component shrinks the individual's replicate mean toward the
/// group mean; the counterfactual component is the other group's mean.
template <typename Scalar>
std::pair<Scalar, Scalar> response_blups(const ObservationSet<Scalar>& data,
                                         const ModelParams<Scalar>& params,
                                         int individual) {
  const Scalar u = params.dispersion1, v = params.dispersion2;
  const Scalar k = Scalar(params.obs_per_individual);
  const Scalar own_mean = data.individual_mean(individual);
  const Scalar g1_mean = data.group_mean(1);
  const Scalar g2_mean = data.group_mean(2);
  if (data.group_of(individual) == 1) {
    const Scalar ku1 = k * u + 1;
    return {(k * u / ku1) * own_mean + g1_mean / ku1, g2_mean};
  }
  const Scalar kv1 = k * v + 1;
  return {g1_mean, (k * v / kv1) * own_mean + g2_mean / kv1};
}

/// Best linear unbiased predictor of the individual contrast
/// mu1_i - mu2_i; exactly the difference of the response BLUPs.
template <typename Scalar>
Scalar individual_contrast_blup(const ObservationSet<Scalar>& data,
                                const ModelParams<Scalar>& params,
                                int individual) {
  const auto [mu1_hat, mu2_hat] = response_blups(data, params, individual);
  return mu1_hat - mu2_hat;
}

/// MSE matrix of the full vector of individual contrast predictors.
///
/// Each diagonal coefficient adds the shrunken own-group prediction variance
/// to the prior variance of the unobserved counterfactual component, which
/// carries the *other* group's error variance scale.
template <typename Scalar>
MseMatrix<Scalar> contrast_mse_matrix(const ModelParams<Scalar>& params,
                                      const ExactDesign& design) {
  require_consistent(params, design);
  const Scalar s1 = params.sigma1_sq, s2 = params.sigma2_sq;
  const Scalar u = params.dispersion1, v = params.dispersion2;
  const Scalar k = Scalar(params.obs_per_individual);
  const Scalar n1 = Scalar(design.group1_size), n2 = Scalar(design.group2_size);
  const Scalar ku1 = k * u + 1, kv1 = k * v + 1;
  MseMatrix<Scalar> mse;
  mse.group1_size = design.group1_size;
  mse.group2_size = design.group2_size;
  mse.g1_common = s1 / (k * ku1 * n1) + s2 * kv1 / (k * n2);
  mse.g1_diag = s1 * u / ku1 + s2 * v;
  mse.cross_common = s1 / (k * n1) + s2 / (k * n2);
  mse.g2_common = s1 * ku1 / (k * n1) + s2 / (k * kv1 * n2);
  mse.g2_diag = s1 * u + s2 * v / kv1;
  return mse;
}

}  // namespace rcr
