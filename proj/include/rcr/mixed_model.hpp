/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <stdexcept>

#include "rcr/model.hpp"

namespace rcr {

/// Dense matrices of the general linear mixed model Y = X beta + Z gamma + eps
/// assembled for the two-group layout. This is the brute-force verification
/// path: everything is materialized and solved without exploiting block
/// structure, so it shares no shortcuts with the closed forms it checks.
template <typename Scalar = double>
struct MixedModelMatrices {
  MatrixX<Scalar> fixed_design;    ///< X, (N*K) x 2
  MatrixX<Scalar> random_design;   ///< Z, (N*K) x 2N, block-diagonal per individual
  MatrixX<Scalar> random_cov;      ///< G, 2N x 2N, diagonal
  MatrixX<Scalar> error_cov;       ///< R, (N*K) x (N*K), diagonal
  int group1_size = 0;
  int group2_size = 0;
  int obs_per_individual = 0;

  int num_individuals() const { return group1_size + group2_size; }
  int num_obs() const { return num_individuals() * obs_per_individual; }
};

/// Solution of the mixed model equations.
template <typename Scalar = double>
struct MmeSolution {
  Eigen::Matrix<Scalar, 2, 1> beta_hat;  ///< fixed-effect estimates (group means)
  VectorX<Scalar> gamma_hat;             ///< random-effect predictions, length 2N

  /// theta_hat = (1_N (x) I_2) beta_hat + gamma_hat; the predicted response
  /// pair of individual i sits at rows (2i, 2i+1).
  VectorX<Scalar> theta_hat() const {
    const int n2 = static_cast<int>(gamma_hat.size());
    VectorX<Scalar> theta(n2);
    for (int j = 0; j < n2; ++j) theta[j] = beta_hat[j % 2] + gamma_hat[j];
    return theta;
  }
};

/// Joint MSE matrix of (beta_hat, gamma_hat - gamma): the inverse of the
/// mixed-model-equation coefficient matrix.
template <typename Scalar = double>
struct JointMse {
  MatrixX<Scalar> matrix;  ///< (2 + 2N) x (2 + 2N), symmetric

  int num_individuals() const {
    return static_cast<int>((matrix.rows() - 2) / 2);
  }
  auto c11() const { return matrix.template topLeftCorner<2, 2>(); }
  auto c12() const { return matrix.topRightCorner(2, matrix.cols() - 2); }
  auto c22() const {
    return matrix.bottomRightCorner(matrix.rows() - 2, matrix.cols() - 2);
  }
};

/// MSE matrix of the predicted response pairs theta_hat, 2N x 2N.
template <typename Scalar = double>
struct ThetaMse {
  MatrixX<Scalar> matrix;
  int group1_size = 0;
  int group2_size = 0;

  auto h11() const {
    return matrix.topLeftCorner(2 * group1_size, 2 * group1_size);
  }
  auto h12() const {
    return matrix.topRightCorner(2 * group1_size, 2 * group2_size);
  }
  auto h22() const {
    return matrix.bottomRightCorner(2 * group2_size, 2 * group2_size);
  }
};

/// Assemble the general-form design and covariance matrices for the two-group
/// model. Rows are ordered by individual (group 1 first), each replicated
/// obs_per_individual times; each individual's random-effect pair occupies two
/// adjacent columns of Z, of which only the own-group component is observed.
template <typename Scalar>
MixedModelMatrices<Scalar> assemble(const ModelParams<Scalar>& params,
                                    const ExactDesign& design) {
  require_consistent(params, design);
  if (!(params.dispersion1 > Scalar(0) && params.dispersion2 > Scalar(0)))
    throw std::domain_error("oracle requires positive dispersions");

  const int n1 = design.group1_size;
  const int n = params.num_individuals;
  const int k = params.obs_per_individual;
  const int rows = n * k;

  MixedModelMatrices<Scalar> model;
  model.group1_size = n1;
  model.group2_size = design.group2_size;
  model.obs_per_individual = k;
  model.fixed_design = MatrixX<Scalar>::Zero(rows, 2);
  model.random_design = MatrixX<Scalar>::Zero(rows, 2 * n);
  model.random_cov = MatrixX<Scalar>::Zero(2 * n, 2 * n);
  model.error_cov = MatrixX<Scalar>::Zero(rows, rows);

  for (int i = 0; i < n; ++i) {
    const int g = i < n1 ? 0 : 1;
    for (int r = 0; r < k; ++r) {
      model.fixed_design(i * k + r, g) = Scalar(1);
      model.random_design(i * k + r, 2 * i + g) = Scalar(1);
    }
    model.random_cov(2 * i, 2 * i) = params.sigma1_sq * params.dispersion1;
    model.random_cov(2 * i + 1, 2 * i + 1) = params.sigma2_sq * params.dispersion2;
  }
  for (int r = 0; r < rows; ++r)
    model.error_cov(r, r) = r < n1 * k ? params.sigma1_sq : params.sigma2_sq;
  return model;
}

/// [X'R^-1X, X'R^-1Z; Z'R^-1X, Z'R^-1Z + G^-1], the Henderson coefficient
/// matrix.
template <typename Scalar>
MatrixX<Scalar> henderson_matrix(const MixedModelMatrices<Scalar>& model) {
  const auto& x = model.fixed_design;
  const auto& z = model.random_design;
  const MatrixX<Scalar> r_inv = model.error_cov.inverse();
  const MatrixX<Scalar> g_inv = model.random_cov.inverse();
  const int p = static_cast<int>(x.cols());
  const int q = static_cast<int>(z.cols());
  MatrixX<Scalar> coeff(p + q, p + q);
  coeff.topLeftCorner(p, p) = x.transpose() * r_inv * x;
  coeff.topRightCorner(p, q) = x.transpose() * r_inv * z;
  coeff.bottomLeftCorner(q, p) = coeff.topRightCorner(p, q).transpose();
  coeff.bottomRightCorner(q, q) = z.transpose() * r_inv * z + g_inv;
  return coeff;
}

namespace detail {

template <typename Scalar>
void require_solvable(const MixedModelMatrices<Scalar>& model) {
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(model.fixed_design);
  if (qr.rank() < model.fixed_design.cols())
    throw std::domain_error("mixed model equations singular: rank-deficient X");
  if ((model.random_cov.diagonal().array() <= Scalar(0)).any())
    throw std::domain_error("mixed model equations singular: non-PD G");
  if ((model.error_cov.diagonal().array() <= Scalar(0)).any())
    throw std::domain_error("mixed model equations singular: non-PD R");
}

}  // namespace detail

/// Solve the mixed model equations for one observation vector (ordering must
/// match the assembled rows).
template <typename Scalar>
MmeSolution<Scalar> solve_mme(const MixedModelMatrices<Scalar>& model,
                              const VectorX<Scalar>& y) {
  if (y.size() != model.num_obs())
    throw std::invalid_argument("observation vector length mismatch");
  detail::require_solvable(model);
  const MatrixX<Scalar> coeff = henderson_matrix(model);
  const MatrixX<Scalar> r_inv = model.error_cov.inverse();
  VectorX<Scalar> rhs(coeff.rows());
  rhs.head(2) = model.fixed_design.transpose() * r_inv * y;
  rhs.tail(coeff.rows() - 2) = model.random_design.transpose() * r_inv * y;
  const VectorX<Scalar> sol = coeff.ldlt().solve(rhs);
  MmeSolution<Scalar> result;
  result.beta_hat = sol.template head<2>();
  result.gamma_hat = sol.tail(coeff.rows() - 2);
  return result;
}

/// Joint MSE of estimates and prediction errors: the literal inverse of the
/// Henderson coefficient matrix.
template <typename Scalar>
JointMse<Scalar> joint_mse(const MixedModelMatrices<Scalar>& model) {
  detail::require_solvable(model);
  const MatrixX<Scalar> coeff = henderson_matrix(model);
  return JointMse<Scalar>{coeff.inverse()};
}

/// Project the joint MSE onto the predicted response pairs:
/// Cov(theta_hat - theta) = P C11 P' + P C12 + C12' P' + C22 with
/// P = 1_N (x) I_2.
template <typename Scalar>
ThetaMse<Scalar> theta_mse(const JointMse<Scalar>& joint,
                           const ExactDesign& design) {
  const int n = joint.num_individuals();
  if (design.total() != n)
    throw std::invalid_argument("design inconsistent with joint MSE dimensions");
  MatrixX<Scalar> proj = MatrixX<Scalar>::Zero(2 * n, 2);
  for (int i = 0; i < n; ++i) proj.template block<2, 2>(2 * i, 0).setIdentity();
  ThetaMse<Scalar> result;
  result.group1_size = design.group1_size;
  result.group2_size = design.group2_size;
  result.matrix = proj * joint.c11() * proj.transpose() + proj * joint.c12() +
                  joint.c12().transpose() * proj.transpose() + joint.c22();
  return result;
}

/// Collapse the response-pair MSE to the MSE matrix of the individual
/// contrasts: (I_N (x) 1_2') Cov(theta_hat - theta) (I_N (x) 1_2).
/// Both pair components enter with weight one; the cross terms vanish
/// because every 2x2 cell of the pair MSE is diagonal.
template <typename Scalar>
MatrixX<Scalar> alpha_mse_from_theta(const ThetaMse<Scalar>& theta) {
  const int n = theta.group1_size + theta.group2_size;
  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    sum(i, 2 * i) = Scalar(1);
    sum(i, 2 * i + 1) = Scalar(1);
  }
  return sum * theta.matrix * sum.transpose();
}

}  // namespace rcr
