// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Patch construction for masked pretraining data: farthest point sampling of
// patch centers, k-NN grouping, and random mask selection with
// M = min(ceil(m_r * K), K - 1).

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybridseg/kdtree.hpp"
#include "hybridseg/point_cloud.hpp"
#include "hybridseg/rng.hpp"

namespace hybridseg {

struct PatchMask {
  std::vector<int> centers;               // FPS indices, in selection order
  std::vector<std::vector<int>> patches;  // k member ids per center
  std::vector<std::uint8_t> masked;       // flag per patch
  int patch_size = 0;                     // requested k
  int masked_count = 0;                   // M
  double mask_ratio = 0.0;
  bool has_duplicates = false;            // true when N < k forced padding

  /// Fraction of distinct cloud points covered by at least one patch.
  double coverage(Eigen::Index cloud_size) const {
    std::vector<char> seen(static_cast<std::size_t>(cloud_size), 0);
    for (const auto& patch : patches)
      for (int id : patch) seen[static_cast<std::size_t>(id)] = 1;
    std::size_t count = 0;
    for (char c : seen) count += static_cast<std::size_t>(c);
    return static_cast<double>(count) / static_cast<double>(cloud_size);
  }
};

/// Greedy farthest point sampling from a seeded random start; returns the K
/// chosen indices in selection order.
inline std::vector<int> farthest_point_sample(const PointCloud& cloud,
                                              int K, std::uint64_t seed) {
  const int n = static_cast<int>(cloud.size());
  if (K < 1 || K > n)
    throw std::invalid_argument("farthest_point_sample: K out of range");

  Rng rng(seed);
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(K));
  picked.push_back(static_cast<int>(rng.uniform_index(n)));

  std::vector<double> best_d2(static_cast<std::size_t>(n),
                              std::numeric_limits<double>::infinity());
  for (int round = 1; round < K; ++round) {
    const Vector3 last = cloud.point(picked.back());
    int far_idx = -1;
    double far_d2 = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d2 = (cloud.point(i) - last).squaredNorm();
      auto& slot = best_d2[static_cast<std::size_t>(i)];
      if (d2 < slot) slot = d2;
      if (slot > far_d2) {
        far_d2 = slot;
        far_idx = i;
      }
    }
    picked.push_back(far_idx);
  }
  return picked;
}

/// Groups the k nearest points (ties by index) around each center. When the
/// cloud has fewer than k points, members repeat cyclically and the result is
/// flagged.
inline PatchMask build_patches(const PointCloud& cloud,
                               const NeighborIndex& index,
                               const std::vector<int>& centers, int k = 32) {
  if (k < 1) throw std::invalid_argument("build_patches: k must be positive");
  PatchMask mask;
  mask.centers = centers;
  mask.patch_size = k;
  mask.has_duplicates = cloud.size() < k;
  mask.patches.reserve(centers.size());
  for (int c : centers) {
    const auto neighbors = index.knn(cloud.point(c), k);  // clamped to N
    std::vector<int> patch;
    patch.reserve(static_cast<std::size_t>(k));
    for (const auto& nb : neighbors) patch.push_back(nb.index);
    for (std::size_t i = 0; patch.size() < static_cast<std::size_t>(k); ++i)
      patch.push_back(patch[i % neighbors.size()]);
    mask.patches.push_back(std::move(patch));
  }
  mask.masked.assign(centers.size(), 0);
  return mask;
}

/// Marks a uniformly random subset of M = min(ceil(m_r * K), K - 1) patches
/// as masked; deterministic per seed.
inline PatchMask select_mask(PatchMask patches, double m_r, std::uint64_t seed) {
  const int K = static_cast<int>(patches.patches.size());
  if (!(m_r > 0.0 && m_r < 1.0))
    throw std::invalid_argument("select_mask: mask ratio must lie in (0, 1)");
  const int M = std::min(static_cast<int>(std::ceil(m_r * K)), K - 1);
  if (!(M > 0 && M < K))
    throw std::invalid_argument("select_mask: needs 0 < M < K (K >= 2)");

  // Partial Fisher-Yates: the first M entries of the shuffle are the mask.
  Rng rng(seed);
  std::vector<int> order(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < M; ++i) {
    const int j = i + static_cast<int>(rng.uniform_index(K - i));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  patches.masked.assign(static_cast<std::size_t>(K), 0);
  for (int i = 0; i < M; ++i)
    patches.masked[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  patches.masked_count = M;
  patches.mask_ratio = m_r;
  return patches;
}

}  // namespace hybridseg
