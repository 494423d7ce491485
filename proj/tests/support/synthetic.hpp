// Synthetic point-cloud generators shared by the unit and acceptance suites.
// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "hybridseg/point_cloud.hpp"
#include "hybridseg/primitives.hpp"
#include "hybridseg/rng.hpp"

namespace testsupport {

using hybridseg::Matrix3Xr;
using hybridseg::PointCloud;
using hybridseg::Rng;
using hybridseg::Vector3;

inline Matrix3Xr plane_samples(Eigen::Index n, const Vector3& normal, double d,
                               Rng& rng, double extent = 1.0,
                               double noise = 0.0) {
  const Vector3 nn = normal.normalized();
  const Vector3 e1 = nn.unitOrthogonal();
  const Vector3 e2 = nn.cross(e1);
  Matrix3Xr pts(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 p = d * nn + rng.uniform(-extent, extent) * e1 +
                      rng.uniform(-extent, extent) * e2 +
                      noise * rng.gaussian() * nn;
    pts.row(i) = p.transpose();
  }
  return pts;
}

inline Matrix3Xr sphere_samples(Eigen::Index n, const Vector3& center,
                                double radius, Rng& rng, double noise = 0.0) {
  Matrix3Xr pts(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
    while (dir.norm() < 1e-12)
      dir = Vector3(rng.gaussian(), rng.gaussian(), rng.gaussian());
    dir.normalize();
    pts.row(i) = (center + (radius + noise * rng.gaussian()) * dir).transpose();
  }
  return pts;
}

inline Matrix3Xr cylinder_samples(Eigen::Index n, const Vector3& axis,
                                  const Vector3& origin, double radius,
                                  double half_length, Rng& rng,
                                  double noise = 0.0) {
  const Vector3 a = axis.normalized();
  const Vector3 e1 = a.unitOrthogonal();
  const Vector3 e2 = a.cross(e1);
  Matrix3Xr pts(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double t = rng.uniform(-half_length, half_length);
    const double r = radius + noise * rng.gaussian();
    pts.row(i) =
        (origin + t * a + r * (std::cos(ang) * e1 + std::sin(ang) * e2))
            .transpose();
  }
  return pts;
}

inline Matrix3Xr cone_samples(Eigen::Index n, const Vector3& apex,
                              const Vector3& axis, double theta, double t_min,
                              double t_max, Rng& rng, double noise = 0.0) {
  const Vector3 a = axis.normalized();
  const Vector3 e1 = a.unitOrthogonal();
  const Vector3 e2 = a.cross(e1);
  Matrix3Xr pts(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double t = rng.uniform(t_min, t_max);  // distance along the axis
    const double r = t * std::tan(theta) + noise * rng.gaussian();
    pts.row(i) =
        (apex + t * a + r * (std::cos(ang) * e1 + std::sin(ang) * e2))
            .transpose();
  }
  return pts;
}

inline Matrix3Xr gaussian_blob(Eigen::Index n, const Vector3& center,
                               double sigma, Rng& rng) {
  Matrix3Xr pts(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    pts.row(i) = (center + sigma * Vector3(rng.gaussian(), rng.gaussian(),
                                           rng.gaussian()))
                     .transpose();
  return pts;
}

inline Matrix3Xr concat(const std::vector<Matrix3Xr>& parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.rows();
  Matrix3Xr out(total, 3);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  return out;
}

inline PointCloud make_cloud(const Matrix3Xr& pts) {
  PointCloud cloud;
  cloud.positions = pts;
  return cloud;
}

/// Two horizontal square patches far apart in z; labels 0/1.
inline PointCloud two_plane_scene(Eigen::Index per_plane, Rng& rng,
                                  std::vector<int>* gt = nullptr) {
  PointCloud cloud = make_cloud(
      concat({plane_samples(per_plane, Vector3::UnitZ(), 0.0, rng, 0.5),
              plane_samples(per_plane, Vector3::UnitZ(), 1.0, rng, 0.5)}));
  if (gt) {
    gt->assign(static_cast<std::size_t>(2 * per_plane), 0);
    for (Eigen::Index i = per_plane; i < 2 * per_plane; ++i)
      (*gt)[static_cast<std::size_t>(i)] = 1;
  }
  return cloud;
}

inline Eigen::Matrix3d rotation(double angle, const Vector3& axis) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline hybridseg::PrimitiveParams random_primitive(Rng& rng, int which) {
  using namespace hybridseg;
  Vector3 axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
  axis.normalize();
  const Vector3 origin(rng.uniform(-1, 1), rng.uniform(-1, 1),
                       rng.uniform(-1, 1));
  switch (which) {
    case 0: {
      Plane p{axis, rng.uniform(-2, 2)};
      p.canonicalize();
      return p;
    }
    case 1:
      return Sphere{origin, rng.uniform(0.2, 2.0)};
    case 2:
      return Cylinder{axis, origin, rng.uniform(0.2, 2.0)};
    default:
      return Cone{origin, axis, rng.uniform(0.1, 1.2)};
  }
}

/// Random point exactly on the primitive's surface.
inline Vector3 surface_sample(const hybridseg::PrimitiveParams& prim,
                              Rng& rng) {
  using namespace hybridseg;
  if (const auto* p = std::get_if<Plane>(&prim)) {
    const Vector3 e1 = p->n.unitOrthogonal();
    const Vector3 e2 = p->n.cross(e1);
    return p->d * p->n + rng.uniform(-2, 2) * e1 + rng.uniform(-2, 2) * e2;
  }
  if (const auto* s = std::get_if<Sphere>(&prim)) {
    Vector3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
    return s->o + s->r * dir.normalized();
  }
  if (const auto* c = std::get_if<Cylinder>(&prim)) {
    const Vector3 e1 = c->a.unitOrthogonal();
    const Vector3 e2 = c->a.cross(e1);
    const double ang = rng.uniform(0, 2 * std::numbers::pi);
    return c->o + rng.uniform(-2, 2) * c->a +
           c->r * (std::cos(ang) * e1 + std::sin(ang) * e2);
  }
  const auto& k = std::get<hybridseg::Cone>(prim);
  const Vector3 e1 = k.a.unitOrthogonal();
  const Vector3 e2 = k.a.cross(e1);
  const double ang = rng.uniform(0, 2 * std::numbers::pi);
  const double t = rng.uniform(0.0, 2.0);
  return k.o + t * k.a +
         t * std::tan(k.theta) * (std::cos(ang) * e1 + std::sin(ang) * e2);
}

}  // namespace testsupport
