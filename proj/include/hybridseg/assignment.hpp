// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hybridseg {

struct Assignment {
  std::vector<int> row_to_col;  // -1 when a row stays unmatched (padding)
  double total_cost = 0.0;
};

/// Exact minimum-cost assignment (Kuhn-Munkres with potentials, O(n^3)).
/// Rectangular inputs are padded with zero-cost dummies; dummy matches are
/// reported as -1 and contribute nothing to total_cost.
inline Assignment hungarian(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("hungarian: empty cost matrix");
  const int dim = std::max(rows, cols);

  auto at = [&](int i, int j) -> double {
    return (i < rows && j < cols) ? cost(i, j) : 0.0;
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(dim + 1, 0.0), v(dim + 1, 0.0);
  std::vector<int> match(dim + 1, 0);  // match[j] = row assigned to column j
  std::vector<int> way(dim + 1, 0);

  for (int i = 1; i <= dim; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(dim + 1, inf);
    std::vector<char> used(dim + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= dim; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= dim; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  Assignment out;
  out.row_to_col.assign(rows, -1);
  for (int j = 1; j <= dim; ++j) {
    const int i = match[j] - 1;
    if (i < rows && j - 1 < cols) {
      out.row_to_col[i] = j - 1;
      out.total_cost += cost(i, j - 1);
    }
  }
  return out;
}

}  // namespace hybridseg
