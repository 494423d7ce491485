// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hybridseg {

using Matrix3Xr = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Vector3 = Eigen::Vector3d;

/// Point set with optional unit normals and optional integer segment labels.
/// Positions are scene units; pipelines usually normalize to unit diameter
/// first. Instances are treated as immutable once filled in.
struct PointCloud {
  Matrix3Xr positions;
  std::optional<Matrix3Xr> normals;
  std::optional<std::vector<int>> labels;

  Eigen::Index size() const { return positions.rows(); }
  bool has_normals() const { return normals.has_value(); }

  Vector3 point(Eigen::Index i) const { return positions.row(i).transpose(); }
  Vector3 normal(Eigen::Index i) const { return normals->row(i).transpose(); }

  /// Checks the type invariants: at least one point, finite coordinates,
  /// unit normals (1e-6), matching row counts.
  void validate() const {
    if (positions.rows() < 1) throw std::invalid_argument("point cloud is empty");
    if (!positions.allFinite())
      throw std::invalid_argument("point cloud has non-finite coordinates");
    if (normals) {
      if (normals->rows() != positions.rows())
        throw std::invalid_argument("normal count does not match point count");
      if (!normals->allFinite())
        throw std::invalid_argument("point cloud has non-finite normals");
      for (Eigen::Index i = 0; i < normals->rows(); ++i) {
        if (std::abs(normals->row(i).norm() - 1.0) > 1e-6)
          throw std::invalid_argument("normal is not unit length");
      }
    }
    if (labels && static_cast<Eigen::Index>(labels->size()) != positions.rows())
      throw std::invalid_argument("label count does not match point count");
  }
};

struct BoundingBox {
  Vector3 lo;
  Vector3 hi;

  Vector3 extent() const { return hi - lo; }
  Vector3 center() const { return 0.5 * (lo + hi); }

  /// Box grown symmetrically by `fraction` of its extent per axis.
  BoundingBox inflated(double fraction) const {
    const Vector3 pad = 0.5 * fraction * extent();
    return {lo - pad, hi + pad};
  }

  bool contains(const Vector3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

inline BoundingBox bounding_box(const Matrix3Xr& pts) {
  BoundingBox box;
  box.lo = pts.colwise().minCoeff().transpose();
  box.hi = pts.colwise().maxCoeff().transpose();
  return box;
}

/// Exact pairwise diameter for small clouds, 2 * max distance to the centroid
/// beyond 4096 points. The approximation is deterministic and within a factor
/// of two of the true diameter, which is all normalization needs.
inline double cloud_diameter(const Matrix3Xr& pts) {
  const Eigen::Index n = pts.rows();
  if (n <= 4096) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        best = std::max(best, (pts.row(i) - pts.row(j)).norm());
    return best;
  }
  const Eigen::RowVector3d centroid = pts.colwise().mean();
  double max_r = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    max_r = std::max(max_r, (pts.row(i) - centroid).norm());
  return 2.0 * max_r;
}

/// Translates the mean to the origin and scales the diameter to one.
/// Normals and labels pass through untouched.
inline PointCloud normalize_cloud(const PointCloud& cloud) {
  cloud.validate();
  if (cloud.size() < 2)
    throw std::invalid_argument("normalize_cloud needs at least two points");
  const double diam = cloud_diameter(cloud.positions);
  if (diam <= 0.0)
    throw std::invalid_argument("normalize_cloud: all points coincident");

  PointCloud out = cloud;
  const Eigen::RowVector3d mean = cloud.positions.colwise().mean();
  out.positions = (cloud.positions.rowwise() - mean) / diam;
  return out;
}

}  // namespace hybridseg
