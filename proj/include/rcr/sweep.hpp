/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rcr/criteria.hpp"
#include "rcr/model.hpp"
#include "rcr/parallel.hpp"

namespace rcr {

/// Grid specification for optimal-rate sweeps over the rescaled dispersion
/// rho = u / (1 + u); at each grid point u = rho / (1 - rho) and v = u / q.
template <typename Scalar = double>
struct SweepConfig {
  Scalar dispersion_ratio;       ///< q = u / v, fixed along the sweep
  std::vector<Scalar> rho_grid;  ///< strictly increasing, inside (0, 1)
  Scalar sigma1_sq = Scalar(1);
  Scalar sigma2_sq = Scalar(1);
  int obs_per_individual = 5;
  int num_individuals = 60;

  void validate() const {
    if (!(dispersion_ratio > Scalar(0)))
      throw std::invalid_argument("dispersion ratio q must be positive");
    if (rho_grid.empty()) throw std::invalid_argument("rho grid is empty");
    Scalar prev = Scalar(0);
    for (const Scalar rho : rho_grid) {
      if (!(rho > Scalar(0) && rho < Scalar(1)))
        throw std::invalid_argument("rho grid values must lie in (0, 1)");
      if (!(rho > prev))
        throw std::invalid_argument("rho grid must be strictly increasing");
      prev = rho;
    }
  }
};

/// Default grid: 199 points, 0.005 to 0.995 in steps of 0.005.
template <typename Scalar = double>
std::vector<Scalar> default_rho_grid() {
  std::vector<Scalar> grid;
  grid.reserve(199);
  for (int i = 1; i <= 199; ++i) grid.push_back(Scalar(i) / Scalar(200));
  return grid;
}

template <typename Scalar = double>
struct SweepRow {
  Scalar rho;
  Scalar dispersion1;  ///< u at this grid point
  Scalar dispersion2;  ///< v = u / q
  Scalar dispersion_ratio;
  CriterionKind kind;
  Scalar w_star;
  Scalar criterion_value;
  Scalar eff_balanced;  ///< efficiency of w = 0.5 under this criterion
  std::string error;    ///< empty on success

  bool ok() const { return error.empty(); }
};

/// Evaluate the optimal rate and balanced-design efficiency across the grid.
/// Rows are independent; with threads > 1 they are computed in parallel and
/// returned in grid order regardless of scheduling. A failing row carries its
/// error message instead of aborting the sweep.
template <typename Scalar>
std::vector<SweepRow<Scalar>> run_sweep(const SweepConfig<Scalar>& config,
                                        CriterionKind kind, int threads = 1) {
  config.validate();
  std::vector<SweepRow<Scalar>> rows(config.rho_grid.size());
  parallel_for_index(
      static_cast<std::int64_t>(config.rho_grid.size()), threads,
      [&](std::int64_t idx) {
        SweepRow<Scalar>& row = rows[static_cast<std::size_t>(idx)];
        const Scalar rho = config.rho_grid[static_cast<std::size_t>(idx)];
        row.rho = rho;
        row.dispersion1 = rho / (1 - rho);
        row.dispersion2 = row.dispersion1 / config.dispersion_ratio;
        row.dispersion_ratio = config.dispersion_ratio;
        row.kind = kind;
        try {
          const ModelParams<Scalar> params(
              config.sigma1_sq, config.sigma2_sq, row.dispersion1,
              row.dispersion2, config.obs_per_individual, config.num_individuals);
          const auto best = minimize_criterion(kind, params);
          row.w_star = best.w_star;
          row.criterion_value = best.criterion_value;
          const ApproxDesign<Scalar> balanced(Scalar(0.5));
          switch (kind) {
            case CriterionKind::estimation_a:
              row.eff_balanced =
                  best.criterion_value / phi_estimation(balanced, params);
              break;
            case CriterionKind::prediction_a:
              row.eff_balanced = efficiency_a(balanced, params);
              break;
            case CriterionKind::prediction_d:
              row.eff_balanced = efficiency_d(balanced, params);
              break;
          }
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      });
  return rows;
}

}  // namespace rcr
