// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Least-squares primitive fitting. Planes and spheres have (near-)closed
// forms; cylinders and cones start from a normal-field initialization and
// polish with Levenberg-Marquardt on geometric distance residuals.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hybridseg/kdtree.hpp"
#include "hybridseg/local_features.hpp"
#include "hybridseg/point_cloud.hpp"
#include "hybridseg/primitives.hpp"

namespace hybridseg {

struct FitResult {
  PrimitiveParams params;
  bool converged = true;
  double rms = 0.0;
};

namespace detail {

inline Matrix3Xr gather_rows(const Matrix3Xr& src, const std::vector<int>& ids) {
  Matrix3Xr out(static_cast<Eigen::Index>(ids.size()), 3);
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = src.row(ids[i]);
  return out;
}

inline double rms_distance(const Matrix3Xr& pts, const PrimitiveParams& prim) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double d = distance(pts.row(i).transpose(), prim);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pts.rows()));
}

// Normals for a subset: taken from the cloud when present, otherwise
// estimated on the subset alone (small k, MST-oriented).
inline Matrix3Xr subset_normals(const PointCloud& cloud,
                                const std::vector<int>& ids) {
  if (cloud.has_normals()) return gather_rows(*cloud.normals, ids);
  PointCloud sub;
  sub.positions = gather_rows(cloud.positions, ids);
  NeighborIndex index(sub.positions);
  const int k = std::min<int>(16, static_cast<int>(ids.size()));
  return estimate_normals(sub, index, KnnOf{k}).normals;
}

// Generic Levenberg-Marquardt with a finite-difference Jacobian. `residuals`
// must tolerate any parameter vector (axes are renormalized inside).
inline bool levenberg_marquardt(
    Eigen::VectorXd& x,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    int max_iter = 100, double tol = 1e-10) {
  const auto n = x.size();
  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  double lambda = 1e-3;

  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd jac(r.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-7 * std::max(1e-3, std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      jac.col(j) = (residuals(xp) - residuals(xm)) / (2.0 * h);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd x_new = x + delta;
      const Eigen::VectorXd r_new = residuals(x_new);
      const double cost_new = r_new.squaredNorm();
      if (cost_new < cost) {
        const double step = delta.norm();
        const double drop = cost - cost_new;
        x = x_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (step < tol * (1.0 + x.norm()) || drop < tol * tol) return true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) return cost < tol;  // stuck; tiny cost still counts
    }
    if (!stepped) return cost < tol;
  }
  return false;
}

}  // namespace detail

/// Centroid plus smallest-covariance-eigenvector plane. Throws when the
/// points are (near-)collinear.
inline FitResult fit_plane(const Matrix3Xr& pts) {
  if (pts.rows() < 3)
    throw std::invalid_argument("fit_plane needs at least 3 points");
  const Eigen::RowVector3d centroid = pts.colwise().mean();
  const Matrix3Xr centered = pts.rowwise() - centroid;
  const Eigen::Matrix3d cov =
      centered.transpose() * centered / static_cast<double>(pts.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const double scale = eig.eigenvalues()[2];
  if (scale <= 0.0 || eig.eigenvalues()[1] <= 1e-12 * scale)
    throw std::invalid_argument("fit_plane: degenerate (collinear) points");

  Plane plane;
  plane.n = eig.eigenvectors().col(0);
  plane.d = plane.n.dot(centroid.transpose());
  plane.canonicalize();
  FitResult out{plane, true, 0.0};
  out.rms = detail::rms_distance(pts, out.params);
  return out;
}

/// Linearized algebraic sphere fit followed by one Gauss-Newton pass on the
/// geometric residuals.
inline FitResult fit_sphere(const Matrix3Xr& pts) {
  const Eigen::Index n = pts.rows();
  if (n < 4) throw std::invalid_argument("fit_sphere needs at least 4 points");

  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.row(i) << 2.0 * pts(i, 0), 2.0 * pts(i, 1), 2.0 * pts(i, 2), 1.0;
    b[i] = pts.row(i).squaredNorm();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 4)
    throw std::invalid_argument("fit_sphere: degenerate (coplanar) points");
  const Eigen::Vector4d sol = qr.solve(b);
  Sphere sphere;
  sphere.o = sol.head<3>();
  const double r2 = sol[3] + sphere.o.squaredNorm();
  if (!(r2 > 0.0)) throw std::invalid_argument("fit_sphere: negative radius");
  sphere.r = std::sqrt(r2);

  // One Gauss-Newton step on f_i = |p_i - o| - r.
  Eigen::MatrixXd jac(n, 4);
  Eigen::VectorXd res(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 d = pts.row(i).transpose() - sphere.o;
    const double len = std::max(d.norm(), 1e-300);
    res[i] = len - sphere.r;
    jac.row(i) << -d.x() / len, -d.y() / len, -d.z() / len, -1.0;
  }
  const Eigen::Vector4d delta =
      (jac.transpose() * jac).ldlt().solve(-jac.transpose() * res);
  if ((sphere.r + delta[3]) > 0.0) {
    sphere.o += delta.head<3>();
    sphere.r += delta[3];
  }
  FitResult out{sphere, true, 0.0};
  out.rms = detail::rms_distance(pts, out.params);
  return out;
}

namespace detail {

// Axis estimate shared by cylinders and cones: for both, consistently
// oriented surface normals have zero variance along the axis direction.
inline Vector3 axis_from_normals(const Matrix3Xr& normals) {
  const Eigen::RowVector3d mean = normals.colwise().mean();
  const Matrix3Xr centered = normals.rowwise() - mean;
  const Eigen::Matrix3d cov = centered.transpose() * centered;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  return eig.eigenvectors().col(0);
}

inline Vector3 normalized_or(const Vector3& v, const Vector3& fallback) {
  const double n = v.norm();
  return n > 1e-12 ? Vector3(v / n) : fallback;
}

}  // namespace detail

/// Closed-form cylinder initialization: axis from the normal field, then an
/// algebraic circle fit in the orthogonal plane.
inline Cylinder init_cylinder(const Matrix3Xr& pts, const Matrix3Xr& normals) {
  const Eigen::Index n = pts.rows();
  Vector3 axis = detail::axis_from_normals(normals);

  Vector3 e1 = axis.unitOrthogonal();
  Vector3 e2 = axis.cross(e1);
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 p = pts.row(i).transpose();
    const double u = e1.dot(p), v = e2.dot(p);
    a.row(i) << 2.0 * u, 2.0 * v, 1.0;
    b[i] = u * u + v * v;
  }
  const Eigen::Vector3d sol =
      (a.transpose() * a).ldlt().solve(a.transpose() * b);
  const double r2 = sol[2] + sol[0] * sol[0] + sol[1] * sol[1];
  if (!(r2 > 0.0))
    throw std::invalid_argument("fit_cylinder: degenerate configuration");

  Cylinder cyl;
  cyl.a = axis;
  cyl.o = sol[0] * e1 + sol[1] * e2;  // axis point at zero axial coordinate
  cyl.r = std::sqrt(r2);
  return cyl;
}

inline FitResult fit_cylinder(const Matrix3Xr& pts, const Matrix3Xr& normals) {
  const Eigen::Index n = pts.rows();
  if (n < 6) throw std::invalid_argument("fit_cylinder needs at least 6 points");

  Cylinder cyl = init_cylinder(pts, normals);

  Eigen::VectorXd x(7);
  x << cyl.a, cyl.o, cyl.r;
  auto residuals = [&pts](const Eigen::VectorXd& p) {
    Cylinder c;
    c.a = detail::normalized_or(p.segment<3>(0), Vector3::UnitZ());
    c.o = p.segment<3>(3);
    c.r = std::abs(p[6]);
    Eigen::VectorXd r(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      r[i] = distance(pts.row(i).transpose(), PrimitiveParams(c));
    return r;
  };
  const bool ok = detail::levenberg_marquardt(x, residuals);
  cyl.a = detail::normalized_or(x.segment<3>(0), Vector3::UnitZ());
  cyl.o = x.segment<3>(3);
  cyl.r = std::abs(x[6]);
  if (!(cyl.r > 0.0))
    throw std::invalid_argument("fit_cylinder: collapsed radius");

  FitResult out{cyl, ok, 0.0};
  out.rms = detail::rms_distance(pts, out.params);
  return out;
}

/// Closed-form cone initialization. The apex solves the normal-orthogonality
/// system n_i . (p_i - o) = 0; the axis comes from the normal field; theta is
/// the mean apex-ray angle.
inline Cone init_cone(const Matrix3Xr& pts, const Matrix3Xr& normals) {
  const Eigen::Index n = pts.rows();
  Eigen::Matrix3d nn = Eigen::Matrix3d::Zero();
  Vector3 rhs = Vector3::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 ni = normals.row(i).transpose();
    nn += ni * ni.transpose();
    rhs += ni * ni.dot(pts.row(i).transpose());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> nn_eig(nn);
  if (nn_eig.eigenvalues()[0] <= 1e-10 * std::max(nn_eig.eigenvalues()[2], 1e-300))
    throw std::invalid_argument("fit_cone: degenerate normal field");
  const Vector3 apex = nn.ldlt().solve(rhs);

  Vector3 axis = detail::axis_from_normals(normals);
  double mean_cos = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 u = detail::normalized_or(pts.row(i).transpose() - apex,
                                            Vector3::UnitZ());
    mean_cos += axis.dot(u);
  }
  mean_cos /= static_cast<double>(n);
  if (mean_cos < 0.0) {
    axis = -axis;
    mean_cos = -mean_cos;
  }
  double theta = std::acos(std::clamp(mean_cos, 1e-6, 1.0 - 1e-12));
  theta = std::clamp(theta, 1e-4, std::numbers::pi / 2.0 - 1e-4);
  return Cone{apex, axis, theta};
}

inline FitResult fit_cone(const Matrix3Xr& pts, const Matrix3Xr& normals) {
  const Eigen::Index n = pts.rows();
  if (n < 6) throw std::invalid_argument("fit_cone needs at least 6 points");

  const Cone init = init_cone(pts, normals);

  Eigen::VectorXd x(7);
  x << init.o, init.a, init.theta;
  auto residuals = [&pts](const Eigen::VectorXd& p) {
    Cone c;
    c.o = p.segment<3>(0);
    c.a = detail::normalized_or(p.segment<3>(3), Vector3::UnitZ());
    c.theta = std::clamp(p[6], 1e-6, std::numbers::pi / 2.0 - 1e-6);
    Eigen::VectorXd r(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      r[i] = distance(pts.row(i).transpose(), PrimitiveParams(c));
    return r;
  };
  const bool ok = detail::levenberg_marquardt(x, residuals);
  Cone cone;
  cone.o = x.segment<3>(0);
  cone.a = detail::normalized_or(x.segment<3>(3), Vector3::UnitZ());
  cone.theta = std::clamp(x[6], 1e-6, std::numbers::pi / 2.0 - 1e-6);

  FitResult out{cone, ok, 0.0};
  out.rms = detail::rms_distance(pts, out.params);
  return out;
}

/// Fits the requested primitive type to a subset of the cloud. Cylinder and
/// cone initialization needs normals; they are estimated on the subset when
/// the cloud does not carry any.
inline FitResult fit_primitive(const PointCloud& cloud,
                               const std::vector<int>& point_ids,
                               TypeLabel type) {
  if (point_ids.empty())
    throw std::invalid_argument("fit_primitive: empty point set");
  const Matrix3Xr pts = detail::gather_rows(cloud.positions, point_ids);
  switch (type) {
    case TypeLabel::Plane:
      return fit_plane(pts);
    case TypeLabel::Sphere:
      return fit_sphere(pts);
    case TypeLabel::Cylinder:
      return fit_cylinder(pts, detail::subset_normals(cloud, point_ids));
    case TypeLabel::Cone:
      return fit_cone(pts, detail::subset_normals(cloud, point_ids));
    default:
      throw std::invalid_argument("fit_primitive: cannot fit type 'other'");
  }
}

}  // namespace hybridseg
