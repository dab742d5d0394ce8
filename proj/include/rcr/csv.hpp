/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcr/model.hpp"
#include "rcr/sweep.hpp"

namespace rcr {

namespace detail {

inline std::string format_sig(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

inline constexpr const char* kObservationCsvHeader =
    "group,individual,obs_index,value";

/// Write observations as `group,individual,obs_index,value` rows, individuals
/// and replicates 1-based, in row-major order.
template <typename Scalar>
void write_observations(std::ostream& out, const ObservationSet<Scalar>& data) {
  out << kObservationCsvHeader << '\n';
  for (int i = 0; i < data.num_individuals(); ++i)
    for (int r = 0; r < data.obs_per_individual(); ++r)
      out << data.group_of(i) << ',' << (i + 1) << ',' << (r + 1) << ','
          << detail::format_sig(static_cast<double>(data.value(i, r)), 17)
          << '\n';
}

/// Read and strictly validate an observation CSV. Rows may arrive in any
/// order, but the complete grid must be present: every individual 1..N with
/// exactly one value per obs_index 1..K, a consistent group per individual,
/// and group 1 forming the contiguous leading block.
inline ObservationSet<double> read_observations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("observation CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kObservationCsvHeader)
    throw std::invalid_argument(
        std::string("observation CSV header must be exactly '") +
        kObservationCsvHeader + "'");

  struct Cell {
    int group;
    int obs_index;
    double value;
  };
  std::map<int, std::vector<Cell>> by_individual;
  int max_obs_index = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 4)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected 4 fields");
    Cell cell{};
    int individual = 0;
    try {
      cell.group = std::stoi(fields[0]);
      individual = std::stoi(fields[1]);
      cell.obs_index = std::stoi(fields[2]);
      cell.value = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": unparseable field");
    }
    if (cell.group != 1 && cell.group != 2)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": group must be 1 or 2");
    if (individual < 1)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": individual must be >= 1");
    if (cell.obs_index < 1)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": obs_index must be >= 1");
    max_obs_index = std::max(max_obs_index, cell.obs_index);
    by_individual[individual].push_back(cell);
  }
  if (by_individual.empty())
    throw std::invalid_argument("observation CSV has no data rows");

  const int n = by_individual.rbegin()->first;
  if (static_cast<int>(by_individual.size()) != n)
    throw std::invalid_argument("individual indices must cover 1..N without gaps");
  const int k = max_obs_index;

  MatrixX<double> values(n, k);
  int group1_size = 0;
  int previous_group = 1;
  for (int i = 1; i <= n; ++i) {
    const auto& cells = by_individual.at(i);
    if (static_cast<int>(cells.size()) != k)
      throw std::invalid_argument("individual " + std::to_string(i) +
                                  " must have exactly " + std::to_string(k) +
                                  " observations");
    const int group = cells.front().group;
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (const auto& cell : cells) {
      if (cell.group != group)
        throw std::invalid_argument("individual " + std::to_string(i) +
                                    " appears in both groups");
      if (cell.obs_index > k || seen[static_cast<std::size_t>(cell.obs_index - 1)])
        throw std::invalid_argument("individual " + std::to_string(i) +
                                    ": duplicate or out-of-range obs_index");
      seen[static_cast<std::size_t>(cell.obs_index - 1)] = true;
      values(i - 1, cell.obs_index - 1) = cell.value;
    }
    if (group < previous_group)
      throw std::invalid_argument(
          "group 1 individuals must form the contiguous leading block");
    previous_group = group;
    if (group == 1) ++group1_size;
  }
  return ObservationSet<double>(group1_size, std::move(values));
}

inline constexpr const char* kSweepCsvHeader =
    "rho,u,v,q,criterion,w_star,criterion_value,eff_balanced";

/// Write sweep rows with 12 significant digits. Failed rows keep their grid
/// coordinates and carry nan in the value columns.
template <typename Scalar>
void write_sweep(std::ostream& out, const std::vector<SweepRow<Scalar>>& rows) {
  const auto fmt = [](Scalar x) {
    return detail::format_sig(static_cast<double>(x), 12);
  };
  out << kSweepCsvHeader << '\n';
  for (const auto& row : rows) {
    out << fmt(row.rho) << ',' << fmt(row.dispersion1) << ','
        << fmt(row.dispersion2) << ',' << fmt(row.dispersion_ratio) << ','
        << to_string(row.kind) << ',';
    if (row.ok())
      out << fmt(row.w_star) << ',' << fmt(row.criterion_value) << ','
          << fmt(row.eff_balanced) << '\n';
    else
      out << "nan,nan,nan\n";
  }
}

}  // namespace rcr
