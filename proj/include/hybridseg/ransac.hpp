// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "hybridseg/fitting.hpp"
#include "hybridseg/primitives.hpp"
#include "hybridseg/rng.hpp"

namespace hybridseg {

struct RansacResult {
  FitResult fit;
  std::vector<int> inliers;  // point ids (into the cloud) of the refit consensus
};

namespace detail {

inline int minimal_sample_size(TypeLabel t) {
  switch (t) {
    case TypeLabel::Plane: return 3;
    case TypeLabel::Sphere: return 4;
    case TypeLabel::Cylinder: return 2;  // two oriented points
    default: return 3;                   // cone: three oriented points
  }
}

inline std::optional<PrimitiveParams> plane_from_sample(const Matrix3Xr& p) {
  const Vector3 n = (p.row(1) - p.row(0)).transpose().cross(
      (p.row(2) - p.row(0)).transpose());
  if (n.norm() < 1e-12) return std::nullopt;
  Plane plane;
  plane.n = n.normalized();
  plane.d = plane.n.dot(p.row(0).transpose());
  plane.canonicalize();
  return PrimitiveParams(plane);
}

inline std::optional<PrimitiveParams> sphere_from_sample(const Matrix3Xr& p) {
  Eigen::Matrix4d a;
  Eigen::Vector4d b;
  for (int i = 0; i < 4; ++i) {
    a.row(i) << 2.0 * p(i, 0), 2.0 * p(i, 1), 2.0 * p(i, 2), 1.0;
    b[i] = p.row(i).squaredNorm();
  }
  Eigen::FullPivLU<Eigen::Matrix4d> lu(a);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::Vector4d sol = lu.solve(b);
  Sphere s;
  s.o = sol.head<3>();
  const double r2 = sol[3] + s.o.squaredNorm();
  if (!(r2 > 1e-24)) return std::nullopt;
  s.r = std::sqrt(r2);
  return PrimitiveParams(s);
}

inline std::optional<PrimitiveParams> cylinder_from_sample(
    const Matrix3Xr& p, const Matrix3Xr& n) {
  const Vector3 n0 = n.row(0).transpose(), n1 = n.row(1).transpose();
  Vector3 axis = n0.cross(n1);
  if (axis.norm() < 1e-8) return std::nullopt;  // parallel normals
  axis.normalize();

  // Intersect the two surface-normal lines in the plane orthogonal to axis.
  const Vector3 e1 = axis.unitOrthogonal();
  const Vector3 e2 = axis.cross(e1);
  auto flat = [&](const Vector3& v) {
    return Eigen::Vector2d(e1.dot(v), e2.dot(v));
  };
  const Eigen::Vector2d q0 = flat(p.row(0).transpose());
  const Eigen::Vector2d q1 = flat(p.row(1).transpose());
  const Eigen::Vector2d d0 = flat(n0), d1 = flat(n1);
  const double det = d0.x() * (-d1.y()) - (-d1.x()) * d0.y();
  if (std::abs(det) < 1e-12) return std::nullopt;
  const Eigen::Vector2d rhs = q1 - q0;
  const double t0 = (rhs.x() * (-d1.y()) - (-d1.x()) * rhs.y()) / det;
  const Eigen::Vector2d center = q0 + t0 * d0;

  Cylinder c;
  c.a = axis;
  c.o = center.x() * e1 + center.y() * e2;
  c.r = 0.5 * ((q0 - center).norm() + (q1 - center).norm());
  if (!(c.r > 1e-12)) return std::nullopt;
  return PrimitiveParams(c);
}

inline std::optional<PrimitiveParams> cone_from_sample(const Matrix3Xr& p,
                                                       const Matrix3Xr& n) {
  Eigen::Matrix3d a;
  Vector3 b;
  for (int i = 0; i < 3; ++i) {
    a.row(i) = n.row(i);
    b[i] = n.row(i).dot(p.row(i));
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
  if (!lu.isInvertible()) return std::nullopt;
  const Vector3 apex = lu.solve(b);

  Vector3 u[3];
  for (int i = 0; i < 3; ++i) {
    const Vector3 v = p.row(i).transpose() - apex;
    if (v.norm() < 1e-12) return std::nullopt;
    u[i] = v.normalized();
  }
  Vector3 axis = (u[0] - u[1]).cross(u[0] - u[2]);
  if (axis.norm() < 1e-10) return std::nullopt;
  axis.normalize();
  double mean_cos = (axis.dot(u[0]) + axis.dot(u[1]) + axis.dot(u[2])) / 3.0;
  if (mean_cos < 0.0) {
    axis = -axis;
    mean_cos = -mean_cos;
  }
  const double theta = std::acos(std::clamp(mean_cos, -1.0, 1.0));
  if (theta <= 1e-4 || theta >= std::numbers::pi / 2.0 - 1e-4)
    return std::nullopt;
  return PrimitiveParams(Cone{apex, axis, theta});
}

}  // namespace detail

/// Seeded RANSAC over the requested primitive types. The best hypothesis by
/// inlier count (ties by lower residual sum) is refit on its consensus set
/// with fit_primitive. Cylinder and cone hypotheses use oriented points, so
/// normals are estimated for the subset when the cloud lacks them.
///
/// Throws when no hypothesis reaches min_inliers (default: 3x the largest
/// minimal sample among the requested types).
inline RansacResult ransac_fit(const PointCloud& cloud,
                               const std::vector<int>& point_ids,
                               const std::set<TypeLabel>& types,
                               double inlier_tol, int iters,
                               std::uint64_t seed, int min_inliers = -1) {
  if (types.empty()) throw std::invalid_argument("ransac_fit: no types requested");
  if (iters < 1) throw std::invalid_argument("ransac_fit: iters must be >= 1");
  if (!(inlier_tol > 0.0))
    throw std::invalid_argument("ransac_fit: inlier_tol must be positive");

  const Matrix3Xr pts = detail::gather_rows(cloud.positions, point_ids);
  const int n = static_cast<int>(pts.rows());

  const bool oriented = types.count(TypeLabel::Cylinder) > 0 ||
                        types.count(TypeLabel::Cone) > 0;
  Matrix3Xr normals;
  if (oriented && n >= 3) normals = detail::subset_normals(cloud, point_ids);

  int required = 0;
  for (TypeLabel t : types)
    required = std::max(required, detail::minimal_sample_size(t));
  if (min_inliers < 0) min_inliers = 3 * required;
  if (n < required)
    throw std::invalid_argument("ransac_fit: not enough points for any type");

  Rng rng(seed);
  std::optional<PrimitiveParams> best;
  long best_inliers = -1;
  double best_residual = std::numeric_limits<double>::infinity();

  std::vector<int> sample;
  for (int iter = 0; iter < iters; ++iter) {
    for (TypeLabel type : types) {  // std::set iterates in a fixed order
      const int need = detail::minimal_sample_size(type);
      if (n < need) continue;
      sample.clear();
      while (static_cast<int>(sample.size()) < need) {
        const int pick = static_cast<int>(rng.uniform_index(n));
        if (std::find(sample.begin(), sample.end(), pick) == sample.end())
          sample.push_back(pick);
      }
      Matrix3Xr sp(need, 3), sn(need, 3);
      for (int i = 0; i < need; ++i) {
        sp.row(i) = pts.row(sample[i]);
        if (normals.rows() > 0) sn.row(i) = normals.row(sample[i]);
      }

      std::optional<PrimitiveParams> hyp;
      switch (type) {
        case TypeLabel::Plane: hyp = detail::plane_from_sample(sp); break;
        case TypeLabel::Sphere: hyp = detail::sphere_from_sample(sp); break;
        case TypeLabel::Cylinder:
          if (normals.rows() > 0) hyp = detail::cylinder_from_sample(sp, sn);
          break;
        case TypeLabel::Cone:
          if (normals.rows() > 0) hyp = detail::cone_from_sample(sp, sn);
          break;
        default: break;
      }
      if (!hyp) continue;

      long count = 0;
      double residual = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = distance(pts.row(i).transpose(), *hyp);
        if (d < inlier_tol) {
          ++count;
          residual += d;
        }
      }
      if (count > best_inliers ||
          (count == best_inliers && residual < best_residual)) {
        best = hyp;
        best_inliers = count;
        best_residual = residual;
      }
    }
  }

  if (!best || best_inliers < min_inliers)
    throw std::runtime_error("ransac_fit: no consensus");

  std::vector<int> consensus;
  for (int i = 0; i < n; ++i)
    if (distance(pts.row(i).transpose(), *best) < inlier_tol)
      consensus.push_back(point_ids[static_cast<std::size_t>(i)]);

  RansacResult out;
  out.fit = fit_primitive(cloud, consensus, type_of(*best));

  out.inliers.clear();
  for (int i = 0; i < n; ++i)
    if (distance(pts.row(i).transpose(), out.fit.params) < inlier_tol)
      out.inliers.push_back(point_ids[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace hybridseg
