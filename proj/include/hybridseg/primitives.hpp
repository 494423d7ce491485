// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hybridseg/point_cloud.hpp"

namespace hybridseg {

enum class TypeLabel { Plane, Sphere, Cylinder, Cone, Other };

inline const char* to_string(TypeLabel t) {
  switch (t) {
    case TypeLabel::Plane: return "plane";
    case TypeLabel::Sphere: return "sphere";
    case TypeLabel::Cylinder: return "cylinder";
    case TypeLabel::Cone: return "cone";
    default: return "other";
  }
}

inline TypeLabel type_from_string(const std::string& s) {
  if (s == "plane") return TypeLabel::Plane;
  if (s == "sphere") return TypeLabel::Sphere;
  if (s == "cylinder") return TypeLabel::Cylinder;
  if (s == "cone") return TypeLabel::Cone;
  if (s == "other") return TypeLabel::Other;
  throw std::invalid_argument("unknown primitive type: " + s);
}

/// x . n == d; stored with d >= 0 as the canonical form.
struct Plane {
  Vector3 n = Vector3::UnitZ();
  double d = 0.0;

  void canonicalize() {
    const double norm = n.norm();
    if (norm <= 0.0) throw std::invalid_argument("plane with zero normal");
    n /= norm;
    d /= norm;
    if (d < 0.0) {
      n = -n;
      d = -d;
    }
  }
};

struct Sphere {
  Vector3 o = Vector3::Zero();
  double r = 1.0;
};

struct Cylinder {
  Vector3 a = Vector3::UnitZ();  // axis direction, unit
  Vector3 o = Vector3::Zero();   // any point on the axis
  double r = 1.0;
};

/// Apex o, axis a pointing into the cone, half-angle theta in (0, pi/2).
struct Cone {
  Vector3 o = Vector3::Zero();
  Vector3 a = Vector3::UnitZ();
  double theta = 0.5;
};

using PrimitiveParams = std::variant<Plane, Sphere, Cylinder, Cone>;

inline TypeLabel type_of(const PrimitiveParams& prim) {
  switch (prim.index()) {
    case 0: return TypeLabel::Plane;
    case 1: return TypeLabel::Sphere;
    case 2: return TypeLabel::Cylinder;
    default: return TypeLabel::Cone;
  }
}

inline void validate(const PrimitiveParams& prim) {
  if (const auto* p = std::get_if<Plane>(&prim)) {
    if (std::abs(p->n.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("plane normal is not unit");
  } else if (const auto* s = std::get_if<Sphere>(&prim)) {
    if (!(s->r > 0.0)) throw std::invalid_argument("sphere radius must be positive");
  } else if (const auto* c = std::get_if<Cylinder>(&prim)) {
    if (std::abs(c->a.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("cylinder axis is not unit");
    if (!(c->r > 0.0)) throw std::invalid_argument("cylinder radius must be positive");
  } else if (const auto* k = std::get_if<Cone>(&prim)) {
    if (std::abs(k->a.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("cone axis is not unit");
    if (!(k->theta > 0.0 && k->theta < std::numbers::pi / 2.0))
      throw std::invalid_argument("cone angle must lie in (0, pi/2)");
  }
}

/// Unsigned point-to-surface distance. Total: the cone apex maps to 0.
inline double distance(const Vector3& p, const PrimitiveParams& prim) {
  if (const auto* pl = std::get_if<Plane>(&prim)) {
    return std::abs(p.dot(pl->n) - pl->d);
  }
  if (const auto* s = std::get_if<Sphere>(&prim)) {
    return std::abs((p - s->o).norm() - s->r);
  }
  if (const auto* c = std::get_if<Cylinder>(&prim)) {
    const Vector3 v = p - c->o;
    return std::abs((v - c->a * c->a.dot(v)).norm() - c->r);
  }
  const auto& k = std::get<Cone>(prim);
  const Vector3 v = p - k.o;
  const double len = v.norm();
  if (len == 0.0) return 0.0;  // apex lies on the surface
  const double cosang = std::clamp(k.a.dot(v) / len, -1.0, 1.0);
  // Distance to the nearest ruling line through the apex; angular offsets
  // beyond pi/2 measure to the apex itself.
  const double off = std::min(std::abs(std::acos(cosang) - k.theta),
                              std::numbers::pi / 2.0);
  return std::abs(len * std::sin(off));
}

/// Mean distance from the samples to the surface (HPNet's Res-Error summand).
inline double residual_error(const PrimitiveParams& prim, const Matrix3Xr& samples) {
  if (samples.rows() == 0)
    throw std::invalid_argument("residual_error: empty sample set");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    sum += distance(samples.row(i).transpose(), prim);
  return sum / static_cast<double>(samples.rows());
}

// ---------------------------------------------------------------------------
// Packed 22-parameter interchange row:
//   [plane n(3), d | sphere o(3), r | cylinder a(3), o(3), r | cone o(3),
//    a(3), theta], slots of other types zeroed.
// ---------------------------------------------------------------------------

inline Eigen::Matrix<double, 22, 1> pack22(const PrimitiveParams& prim) {
  Eigen::Matrix<double, 22, 1> v = Eigen::Matrix<double, 22, 1>::Zero();
  if (const auto* p = std::get_if<Plane>(&prim)) {
    v.segment<3>(0) = p->n;
    v[3] = p->d;
  } else if (const auto* s = std::get_if<Sphere>(&prim)) {
    v.segment<3>(4) = s->o;
    v[7] = s->r;
  } else if (const auto* c = std::get_if<Cylinder>(&prim)) {
    v.segment<3>(8) = c->a;
    v.segment<3>(11) = c->o;
    v[14] = c->r;
  } else {
    const auto& k = std::get<Cone>(prim);
    v.segment<3>(15) = k.o;
    v.segment<3>(18) = k.a;
    v[21] = k.theta;
  }
  return v;
}

inline PrimitiveParams unpack22(TypeLabel type,
                                const Eigen::Matrix<double, 22, 1>& v) {
  switch (type) {
    case TypeLabel::Plane:
      return Plane{v.segment<3>(0), v[3]};
    case TypeLabel::Sphere:
      return Sphere{v.segment<3>(4), v[7]};
    case TypeLabel::Cylinder:
      return Cylinder{v.segment<3>(8), v.segment<3>(11), v[14]};
    case TypeLabel::Cone:
      return Cone{v.segment<3>(15), v.segment<3>(18), v[21]};
    default:
      throw std::invalid_argument("cannot unpack type 'other'");
  }
}

inline nlohmann::json to_json(const PrimitiveParams& prim) {
  nlohmann::json j;
  j["type"] = to_string(type_of(prim));
  if (const auto* p = std::get_if<Plane>(&prim)) {
    j["n"] = {p->n.x(), p->n.y(), p->n.z()};
    j["d"] = p->d;
  } else if (const auto* s = std::get_if<Sphere>(&prim)) {
    j["o"] = {s->o.x(), s->o.y(), s->o.z()};
    j["r"] = s->r;
  } else if (const auto* c = std::get_if<Cylinder>(&prim)) {
    j["a"] = {c->a.x(), c->a.y(), c->a.z()};
    j["o"] = {c->o.x(), c->o.y(), c->o.z()};
    j["r"] = c->r;
  } else {
    const auto& k = std::get<Cone>(prim);
    j["o"] = {k.o.x(), k.o.y(), k.o.z()};
    j["a"] = {k.a.x(), k.a.y(), k.a.z()};
    j["theta"] = k.theta;
  }
  return j;
}

inline PrimitiveParams primitive_from_json(const nlohmann::json& j) {
  auto vec3 = [&](const char* key) {
    const auto& a = j.at(key);
    return Vector3(a.at(0).get<double>(), a.at(1).get<double>(),
                   a.at(2).get<double>());
  };
  switch (type_from_string(j.at("type").get<std::string>())) {
    case TypeLabel::Plane:
      return Plane{vec3("n"), j.at("d").get<double>()};
    case TypeLabel::Sphere:
      return Sphere{vec3("o"), j.at("r").get<double>()};
    case TypeLabel::Cylinder:
      return Cylinder{vec3("a"), vec3("o"), j.at("r").get<double>()};
    case TypeLabel::Cone:
      return Cone{vec3("o"), vec3("a"), j.at("theta").get<double>()};
    default:
      throw std::invalid_argument("cannot parse primitive of type 'other'");
  }
}

}  // namespace hybridseg
