// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Implicit-field label generation from point clouds (unsigned distance to the
// nearest sample), query-set construction, scene crops, and the point-set
// reconstruction losses (L1 field losses, Chamfer, exact EMD).

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hybridseg/assignment.hpp"
#include "hybridseg/kdtree.hpp"
#include "hybridseg/parallel.hpp"
#include "hybridseg/point_cloud.hpp"
#include "hybridseg/rng.hpp"

namespace hybridseg {

struct ImplicitSamples {
  Matrix3Xr queries;
  Eigen::VectorXd udf;
  std::optional<std::vector<std::uint8_t>> occupancy;
  std::optional<Eigen::VectorXd> sdf;
};

/// Exact unsigned distance from each query to its nearest cloud point.
inline ImplicitSamples sample_udf(const PointCloud& cloud,
                                  const NeighborIndex& index,
                                  const Matrix3Xr& queries,
                                  unsigned threads = 0) {
  if (cloud.size() < 1) throw std::invalid_argument("sample_udf: empty cloud");
  ImplicitSamples out;
  out.queries = queries;
  out.udf.resize(queries.rows());
  parallel_for(
      0, static_cast<std::size_t>(queries.rows()),
      [&](std::size_t q) {
        const auto i = static_cast<Eigen::Index>(q);
        out.udf[i] = index.nearest(queries.row(i).transpose()).distance;
      },
      threads);
  return out;
}

/// Occupancy proxy for clouds without inside/outside information:
/// occupied iff udf < tau.
inline void attach_occupancy_proxy(ImplicitSamples& samples, double tau) {
  samples.occupancy.emplace(static_cast<std::size_t>(samples.udf.size()));
  for (Eigen::Index i = 0; i < samples.udf.size(); ++i)
    (*samples.occupancy)[static_cast<std::size_t>(i)] =
        samples.udf[i] < tau ? 1 : 0;
}

struct QueryMix {
  double uniform_fraction = 0.5;      // uniform inside the inflated AABB
  double near_surface_fraction = 0.5; // cloud points plus Gaussian offsets
  double surface_sigma = 0.01;
};

/// Deterministic query set: `uniform_fraction` of the points are uniform in
/// the cloud's bounding box inflated by 5%, the rest are cloud points with
/// isotropic Gaussian offsets of scale surface_sigma.
inline Matrix3Xr make_query_set(const PointCloud& cloud, Eigen::Index count,
                                const QueryMix& mix, std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("make_query_set: count must be > 0");
  if (std::abs(mix.uniform_fraction + mix.near_surface_fraction - 1.0) > 1e-9)
    throw std::invalid_argument("make_query_set: fractions must sum to 1");

  const BoundingBox box = bounding_box(cloud.positions).inflated(0.05);
  const auto n_uniform =
      static_cast<Eigen::Index>(std::llround(mix.uniform_fraction * count));

  Rng rng(seed);
  Matrix3Xr queries(count, 3);
  for (Eigen::Index i = 0; i < count; ++i) {
    if (i < n_uniform) {
      for (int c = 0; c < 3; ++c)
        queries(i, c) = rng.uniform(box.lo[c], box.hi[c]);
    } else {
      const auto pick =
          static_cast<Eigen::Index>(rng.uniform_index(cloud.size()));
      for (int c = 0; c < 3; ++c)
        queries(i, c) =
            cloud.positions(pick, c) + mix.surface_sigma * rng.gaussian();
    }
  }
  return queries;
}

/// Removes roughly `ratio` of the points by shrinking an axis-aligned box
/// around a seeded random center until the removed fraction is within 1% of
/// the request. Surviving points are preserved bit-exactly.
inline PointCloud crop_scene(const PointCloud& cloud, double ratio,
                             std::uint64_t seed) {
  if (ratio < 0.0 || ratio > 0.5)
    throw std::invalid_argument("crop_scene: ratio must lie in [0, 0.5]");
  PointCloud out;
  const Eigen::Index n = cloud.size();
  if (ratio == 0.0) return cloud;

  const double target = ratio * static_cast<double>(n);
  if (static_cast<double>(n) - target < 16.0)
    throw std::invalid_argument("crop_scene: fewer than 16 points would remain");

  Rng rng(seed);
  const BoundingBox box = bounding_box(cloud.positions);
  Vector3 center;
  for (int c = 0; c < 3; ++c) center[c] = rng.uniform(box.lo[c], box.hi[c]);
  const Vector3 half = 0.5 * box.extent().cwiseMax(1e-12);

  auto removed_at = [&](double alpha) {
    Eigen::Index removed = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector3 d = (cloud.point(i) - center).cwiseAbs();
      if ((d.array() <= (alpha * half).array()).all()) ++removed;
    }
    return removed;
  };

  double lo = 0.0, hi = 4.0;  // box scale relative to the cloud half-extent
  while (removed_at(hi) < static_cast<Eigen::Index>(target) && hi < 64.0) hi *= 2.0;
  double alpha = hi;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const auto removed = removed_at(mid);
    const double err = (static_cast<double>(removed) - target) / static_cast<double>(n);
    if (std::abs(err) <= 0.01) {
      alpha = mid;
      break;
    }
    if (static_cast<double>(removed) < target)
      lo = mid;
    else
      hi = mid;
    alpha = mid;
  }

  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 d = (cloud.point(i) - center).cwiseAbs();
    if (!((d.array() <= (alpha * half).array()).all()))
      keep.push_back(static_cast<int>(i));
  }
  if (static_cast<Eigen::Index>(keep.size()) < 16)
    throw std::invalid_argument("crop_scene: fewer than 16 points would remain");

  out.positions.resize(static_cast<Eigen::Index>(keep.size()), 3);
  if (cloud.normals) out.normals.emplace(static_cast<Eigen::Index>(keep.size()), 3);
  if (cloud.labels) out.labels.emplace();
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.positions.row(static_cast<Eigen::Index>(i)) = cloud.positions.row(keep[i]);
    if (cloud.normals)
      out.normals->row(static_cast<Eigen::Index>(i)) = cloud.normals->row(keep[i]);
    if (cloud.labels) out.labels->push_back((*cloud.labels)[static_cast<std::size_t>(keep[i])]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction losses
// ---------------------------------------------------------------------------

inline double loss_sdf(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("loss_sdf: length mismatch");
  return (pred - gt).cwiseAbs().mean();
}

/// Mean | |pred| - gt |; the inner absolute value makes the sign of the
/// prediction irrelevant, matching an unsigned target.
inline double loss_udf(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("loss_udf: length mismatch");
  return (pred.cwiseAbs() - gt).cwiseAbs().mean();
}

/// Mean binary cross-entropy of sigmoid(logits) against boolean targets,
/// probabilities clamped to [1e-7, 1 - 1e-7].
inline double loss_occ(const Eigen::VectorXd& pred_logits,
                       const std::vector<std::uint8_t>& gt) {
  if (pred_logits.size() != static_cast<Eigen::Index>(gt.size()))
    throw std::invalid_argument("loss_occ: length mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred_logits.size(); ++i) {
    double p = 1.0 / (1.0 + std::exp(-pred_logits[i]));
    p = std::clamp(p, 1e-7, 1.0 - 1e-7);
    sum += gt[static_cast<std::size_t>(i)] ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(pred_logits.size());
}

/// Chamfer distance, sum convention over both directions; set mean_reduced
/// to average each directional sum by its set size instead.
inline double chamfer(const Matrix3Xr& a, const Matrix3Xr& b,
                      bool mean_reduced = false) {
  if (a.rows() == 0 || b.rows() == 0)
    throw std::invalid_argument("chamfer: empty point set");
  const NeighborIndex ia(a), ib(b);
  double sum_ab = 0.0, sum_ba = 0.0;
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    sum_ab += ia.nearest(b.row(i).transpose()).distance;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    sum_ba += ib.nearest(a.row(i).transpose()).distance;
  if (mean_reduced)
    return sum_ab / static_cast<double>(b.rows()) +
           sum_ba / static_cast<double>(a.rows());
  return sum_ab + sum_ba;
}

/// Earth Mover Distance: exact minimum-cost perfect matching over Euclidean
/// costs (Hungarian algorithm). Requires equal cardinality, n <= 4096.
inline double emd(const Matrix3Xr& a, const Matrix3Xr& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("emd: point sets must have equal size");
  if (a.rows() == 0) throw std::invalid_argument("emd: empty point set");
  if (a.rows() > 4096) throw std::invalid_argument("emd: n exceeds 4096");
  Eigen::MatrixXd cost(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      cost(i, j) = (a.row(i) - b.row(j)).norm();
  return hungarian(cost).total_cost;
}

}  // namespace hybridseg
