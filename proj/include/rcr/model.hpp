/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace rcr {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Variance and size parameters of the two-group random coefficient model.
///
/// Each individual carries a latent response pair (one component per
/// treatment); the pair scatters around the population mean with covariance
/// diag(sigma1_sq * dispersion1, sigma2_sq * dispersion2). Observational
/// errors have variance sigma1_sq in group 1 and sigma2_sq in group 2.
template <typename Scalar = double>
struct ModelParams {
  Scalar sigma1_sq;        ///< observational error variance, group 1 (> 0)
  Scalar sigma2_sq;        ///< observational error variance, group 2 (> 0)
  Scalar dispersion1;      ///< random-effect dispersion, group 1 (>= 0)
  Scalar dispersion2;      ///< random-effect dispersion, group 2 (>= 0)
  int obs_per_individual;  ///< replicates per individual (>= 1)
  int num_individuals;     ///< total individuals across both groups (>= 2)

  ModelParams(Scalar sigma1_sq_, Scalar sigma2_sq_, Scalar dispersion1_,
              Scalar dispersion2_, int obs_per_individual_, int num_individuals_)
      : sigma1_sq(sigma1_sq_),
        sigma2_sq(sigma2_sq_),
        dispersion1(dispersion1_),
        dispersion2(dispersion2_),
        obs_per_individual(obs_per_individual_),
        num_individuals(num_individuals_) {
    if (!(sigma1_sq > Scalar(0)))
      throw std::invalid_argument("sigma1_sq must be positive");
    if (!(sigma2_sq > Scalar(0)))
      throw std::invalid_argument("sigma2_sq must be positive");
    if (!(dispersion1 >= Scalar(0)))
      throw std::invalid_argument("dispersion1 (u) must be nonnegative");
    if (!(dispersion2 >= Scalar(0)))
      throw std::invalid_argument("dispersion2 (v) must be nonnegative");
    if (obs_per_individual < 1)
      throw std::invalid_argument("obs_per_individual (K) must be >= 1");
    if (num_individuals < 2)
      throw std::invalid_argument("num_individuals (N) must be >= 2");
  }

  bool equal_error_variances() const { return sigma1_sq == sigma2_sq; }
};

using ModelParamsd = ModelParams<double>;

/// Integer group sizes (n1, n2), both at least one.
struct ExactDesign {
  int group1_size;
  int group2_size;

  ExactDesign(int n1, int n2) : group1_size(n1), group2_size(n2) {
    if (n1 < 1 || n2 < 1)
      throw std::invalid_argument("degenerate design: group has no individuals");
  }

  int total() const { return group1_size + group2_size; }

  template <typename Scalar = double>
  Scalar allocation_rate() const {
    return Scalar(group1_size) / Scalar(total());
  }
};

/// Allocation rate w of individuals to group 1, strictly inside (0, 1).
template <typename Scalar = double>
struct ApproxDesign {
  Scalar rate;

  explicit ApproxDesign(Scalar w) : rate(w) {
    if (!(w > Scalar(0) && w < Scalar(1)))
      throw std::domain_error(
          "criterion diverges at boundary: allocation rate must lie strictly "
          "inside (0, 1)");
  }
};

using ApproxDesignd = ApproxDesign<double>;

template <typename Scalar>
inline void require_consistent(const ModelParams<Scalar>& params,
                               const ExactDesign& design) {
  if (design.total() != params.num_individuals)
    throw std::invalid_argument(
        "design inconsistent with model: group sizes must sum to num_individuals");
}

/// Observed responses, one row per individual, one column per replicate.
///
/// Individuals are indexed with the group-1 block first (rows 0..n1-1) and
/// the group-2 block after it, so block-structured results (MSE matrices)
/// line up with row order.
template <typename Scalar = double>
class ObservationSet {
 public:
  ObservationSet(int group1_size, MatrixX<Scalar> values)
      : group1_size_(group1_size), values_(std::move(values)) {
    if (group1_size_ < 0 || group1_size_ > values_.rows())
      throw std::invalid_argument("group1_size out of range");
    if (values_.rows() < 1 || values_.cols() < 1)
      throw std::invalid_argument("observation set must be nonempty");
  }

  int num_individuals() const { return static_cast<int>(values_.rows()); }
  int obs_per_individual() const { return static_cast<int>(values_.cols()); }
  int group1_size() const { return group1_size_; }
  int group2_size() const { return num_individuals() - group1_size_; }

  /// 1 or 2; `individual` is a zero-based row index.
  int group_of(int individual) const {
    check_index(individual);
    return individual < group1_size_ ? 1 : 2;
  }

  Scalar value(int individual, int replicate) const {
    return values_(individual, replicate);
  }
  const MatrixX<Scalar>& values() const { return values_; }

  /// Replicate mean for one individual.
  Scalar individual_mean(int individual) const {
    check_index(individual);
    return values_.row(individual).mean();
  }

  /// Grand mean over a group's individuals and replicates.
  Scalar group_mean(int group) const {
    const int n1 = group1_size_;
    const int n2 = group2_size();
    if (group == 1) {
      if (n1 == 0)
        throw std::domain_error("degenerate design: group has no individuals");
      return values_.topRows(n1).mean();
    }
    if (group == 2) {
      if (n2 == 0)
        throw std::domain_error("degenerate design: group has no individuals");
      return values_.bottomRows(n2).mean();
    }
    throw std::invalid_argument("group must be 1 or 2");
  }

 private:
  void check_index(int individual) const {
    if (individual < 0 || individual >= num_individuals())
      throw std::out_of_range("individual index out of range: " +
                              std::to_string(individual));
  }

  int group1_size_;
  MatrixX<Scalar> values_;
};

using ObservationSetd = ObservationSet<double>;

}  // namespace rcr
