// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hybridseg/parallel.hpp"

namespace hybridseg {

struct MeanShiftResult {
  Eigen::MatrixXd modes;    // one row per cluster
  std::vector<int> labels;  // cluster id per input row
};

namespace detail {

// Union-find over mode proximity: modes closer than bandwidth/2 join one
// cluster (connected components, so the outcome is order-independent).
inline std::vector<int> merge_modes(const Eigen::MatrixXd& modes,
                                    double bandwidth) {
  const Eigen::Index n = modes.rows();
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> rep;
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  const double merge2 = 0.25 * bandwidth * bandwidth;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((modes.row(i) - modes.row(j)).squaredNorm() <= merge2) {
        const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
  std::vector<int> roots(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    roots[static_cast<std::size_t>(i)] = find(static_cast<int>(i));
  return roots;
}

}  // namespace detail

/// Gaussian-kernel mean shift. Every input row seeds a trajectory that
/// iterates toward a density mode; converged trajectories within
/// bandwidth/2 of each other merge into one cluster (ascending-index
/// representative). Deterministic: fixed iteration order, fixed-order
/// reductions.
///
/// `seed_stride` > 1 restricts trajectories to every stride-th row (the
/// kernel density still uses all rows); remaining rows join the nearest
/// mode. The default runs a trajectory from every point.
inline MeanShiftResult mean_shift(const Eigen::MatrixXd& points,
                                  double bandwidth, int max_iter = 300,
                                  double tol = 1e-6, unsigned threads = 0,
                                  Eigen::Index seed_stride = 1) {
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("mean_shift: bandwidth must be positive");
  const Eigen::Index n = points.rows();
  if (n == 0) throw std::invalid_argument("mean_shift: empty input");
  if (seed_stride < 1) seed_stride = 1;

  std::vector<Eigen::Index> seeds;
  for (Eigen::Index i = 0; i < n; i += seed_stride) seeds.push_back(i);

  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Eigen::MatrixXd converged(static_cast<Eigen::Index>(seeds.size()),
                            points.cols());
  parallel_for(
      0, seeds.size(),
      [&](std::size_t s) {
        Eigen::RowVectorXd x = points.row(seeds[s]);
        for (int iter = 0; iter < max_iter; ++iter) {
          Eigen::RowVectorXd num = Eigen::RowVectorXd::Zero(points.cols());
          double den = 0.0;
          for (Eigen::Index j = 0; j < n; ++j) {
            const double w =
                std::exp(-(x - points.row(j)).squaredNorm() * inv);
            num += w * points.row(j);
            den += w;
          }
          const Eigen::RowVectorXd next = num / den;
          const double shift = (next - x).norm();
          x = next;
          if (shift < tol) break;
        }
        converged.row(static_cast<Eigen::Index>(s)) = x;
      },
      threads);

  const std::vector<int> roots = detail::merge_modes(converged, bandwidth);

  // Compact cluster ids in ascending root order.
  std::vector<int> root_to_cluster(roots.size(), -1);
  int clusters = 0;
  for (std::size_t s = 0; s < roots.size(); ++s) {
    const auto r = static_cast<std::size_t>(roots[s]);
    if (root_to_cluster[r] < 0) root_to_cluster[r] = clusters++;
  }

  MeanShiftResult result;
  result.modes.resize(clusters, points.cols());
  for (std::size_t s = 0; s < roots.size(); ++s) {
    const int c = root_to_cluster[static_cast<std::size_t>(roots[s])];
    if (static_cast<std::size_t>(roots[s]) == s)  // representative trajectory
      result.modes.row(c) = converged.row(static_cast<Eigen::Index>(s));
  }

  result.labels.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t s = 0; s < seeds.size(); ++s)
    result.labels[static_cast<std::size_t>(seeds[s])] =
        root_to_cluster[static_cast<std::size_t>(roots[s])];
  if (seed_stride > 1) {
    parallel_for(
        0, static_cast<std::size_t>(n),
        [&](std::size_t i) {
          if (result.labels[i] >= 0) return;
          int best = 0;
          double best_d = std::numeric_limits<double>::infinity();
          for (Eigen::Index c = 0; c < result.modes.rows(); ++c) {
            const double d =
                (points.row(static_cast<Eigen::Index>(i)) - result.modes.row(c))
                    .squaredNorm();
            if (d < best_d) {
              best_d = d;
              best = static_cast<int>(c);
            }
          }
          result.labels[i] = best;
        },
        threads);
  }
  return result;
}

}  // namespace hybridseg
