// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Point-pair affinity matrices. The consistency matrix scores how well each
// point fits the primitive hypothesized at the other point,
//   A_c(i,j) = (w(p_i,s_j) + w(p_j,s_i)) / 2,  w = exp(-d^2 / (2 sigma_t^2)),
// and the smoothness matrix is a k-NN graph weighted by normal agreement,
//   w(i,j) = exp(-|n_i - n_j|^2 / (2 sigma_edge^2)).
// Storage is dense up to 4096 points; beyond that each row keeps its 256
// largest entries (symmetrized by union), flagged as truncated.

#pragma once

#include <Eigen/Dense>
#include <numbers>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "hybridseg/kdtree.hpp"
#include "hybridseg/local_features.hpp"
#include "hybridseg/parallel.hpp"
#include "hybridseg/point_cloud.hpp"
#include "hybridseg/primitives.hpp"
#include "hybridseg/rng.hpp"

namespace hybridseg {

constexpr Eigen::Index kDenseAdjacencyLimit = 4096;
constexpr int kSparseRowKeep = 256;

/// Symmetric affinity matrix with entries in [0, 1].
class AdjacencyMatrix {
 public:
  static AdjacencyMatrix from_dense(Eigen::MatrixXd m) {
    AdjacencyMatrix a;
    a.n_ = m.rows();
    a.dense_ = std::move(m);
    return a;
  }

  /// rows[i] holds (col, value) pairs; the constructor symmetrizes by union.
  static AdjacencyMatrix from_rows(
      Eigen::Index n, std::vector<std::vector<std::pair<int, double>>> rows,
      bool truncated) {
    AdjacencyMatrix a;
    a.n_ = n;
    a.truncated_ = truncated;

    // Union-symmetrize: an entry kept in either row appears in both.
    std::vector<std::vector<std::pair<int, double>>> sym(rows.size());
    for (int i = 0; i < static_cast<int>(rows.size()); ++i)
      for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) {
        sym[static_cast<std::size_t>(i)].push_back({j, v});
        if (j != i) sym[static_cast<std::size_t>(j)].push_back({i, v});
      }
    a.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& r = sym[static_cast<std::size_t>(i)];
      std::sort(r.begin(), r.end());
      r.erase(std::unique(r.begin(), r.end(),
                          [](const auto& x, const auto& y) {
                            return x.first == y.first;
                          }),
              r.end());
      a.row_ptr_[static_cast<std::size_t>(i) + 1] =
          a.row_ptr_[static_cast<std::size_t>(i)] + r.size();
    }
    a.cols_.reserve(a.row_ptr_.back());
    a.values_.reserve(a.row_ptr_.back());
    for (Eigen::Index i = 0; i < n; ++i)
      for (const auto& [j, v] : sym[static_cast<std::size_t>(i)]) {
        a.cols_.push_back(j);
        a.values_.push_back(v);
      }
    return a;
  }

  Eigen::Index size() const { return n_; }
  bool is_dense() const { return dense_.size() > 0; }
  bool truncated() const { return truncated_; }

  const Eigen::MatrixXd& dense() const {
    if (!is_dense()) throw std::logic_error("adjacency matrix is sparse");
    return dense_;
  }

  double coeff(Eigen::Index i, Eigen::Index j) const {
    if (is_dense()) return dense_(i, j);
    const auto lo = row_ptr_[static_cast<std::size_t>(i)];
    const auto hi = row_ptr_[static_cast<std::size_t>(i) + 1];
    for (auto k = lo; k < hi; ++k)
      if (cols_[k] == static_cast<int>(j)) return values_[k];
    return 0.0;
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    if (is_dense()) return dense_ * x;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (auto k = row_ptr_[static_cast<std::size_t>(i)];
           k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
        acc += values_[k] * x[cols_[k]];
      y[i] = acc;
    }
    return y;
  }

  /// Calls fn(i, j, value) for every stored entry (all entries when dense).
  template <typename Fn>
  void for_each_entry(Fn&& fn) const {
    if (is_dense()) {
      for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index j = 0; j < n_; ++j) fn(i, j, dense_(i, j));
      return;
    }
    for (Eigen::Index i = 0; i < n_; ++i)
      for (auto k = row_ptr_[static_cast<std::size_t>(i)];
           k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
        fn(i, static_cast<Eigen::Index>(cols_[k]), values_[k]);
  }

  /// Coordinate-list text export: one "i j value" line per nonzero.
  void save_coordinate_list(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    for_each_entry([&](Eigen::Index i, Eigen::Index j, double v) {
      if (v != 0.0) out << i << ' ' << j << ' ' << v << '\n';
    });
  }

 private:
  Eigen::Index n_ = 0;
  bool truncated_ = false;
  Eigen::MatrixXd dense_;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> values_;
};

namespace detail {

/// out[r] = d(p_{begin+r}, prim)^2 * inv for r in [0, count): the primitive
/// dispatch is hoisted so the point loops stay tight.
inline void scaled_sq_distances_block(const Matrix3Xr& pts, Eigen::Index begin,
                                      Eigen::Index count,
                                      const PrimitiveParams& prim, double inv,
                                      float* out) {
  if (const auto* p = std::get_if<Plane>(&prim)) {
    const double nx = p->n.x(), ny = p->n.y(), nz = p->n.z(), d0 = p->d;
    for (Eigen::Index r = 0; r < count; ++r) {
      const Eigen::Index j = begin + r;
      const double d = pts(j, 0) * nx + pts(j, 1) * ny + pts(j, 2) * nz - d0;
      out[r] = static_cast<float>(d * d * inv);
    }
    return;
  }
  if (const auto* s = std::get_if<Sphere>(&prim)) {
    const double ox = s->o.x(), oy = s->o.y(), oz = s->o.z(), rad = s->r;
    for (Eigen::Index r = 0; r < count; ++r) {
      const Eigen::Index j = begin + r;
      const double dx = pts(j, 0) - ox, dy = pts(j, 1) - oy, dz = pts(j, 2) - oz;
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz) - rad;
      out[r] = static_cast<float>(d * d * inv);
    }
    return;
  }
  if (const auto* c = std::get_if<Cylinder>(&prim)) {
    const double ax = c->a.x(), ay = c->a.y(), az = c->a.z();
    const double ox = c->o.x(), oy = c->o.y(), oz = c->o.z(), rad = c->r;
    for (Eigen::Index r = 0; r < count; ++r) {
      const Eigen::Index j = begin + r;
      const double dx = pts(j, 0) - ox, dy = pts(j, 1) - oy, dz = pts(j, 2) - oz;
      const double t = dx * ax + dy * ay + dz * az;
      const double radial2 =
          std::max(dx * dx + dy * dy + dz * dz - t * t, 0.0);
      const double d = std::sqrt(radial2) - rad;
      out[r] = static_cast<float>(d * d * inv);
    }
    return;
  }
  const auto& k = std::get<Cone>(prim);
  const double ax = k.a.x(), ay = k.a.y(), az = k.a.z(), theta = k.theta;
  const double ox = k.o.x(), oy = k.o.y(), oz = k.o.z();
  for (Eigen::Index r = 0; r < count; ++r) {
    const Eigen::Index j = begin + r;
    const double dx = pts(j, 0) - ox, dy = pts(j, 1) - oy, dz = pts(j, 2) - oz;
    const double len2 = dx * dx + dy * dy + dz * dz;
    if (len2 == 0.0) {
      out[r] = 0.0f;
      continue;
    }
    const double len = std::sqrt(len2);
    const double cosang =
        std::clamp((dx * ax + dy * ay + dz * az) / len, -1.0, 1.0);
    const double off = std::min(std::abs(std::acos(cosang) - theta),
                                std::numbers::pi / 2.0);
    const double d = len * std::sin(off);
    out[r] = static_cast<float>(d * d * inv);
  }
}

inline void scaled_sq_distances(const Matrix3Xr& pts,
                                const PrimitiveParams& prim, double inv,
                                float* out) {
  scaled_sq_distances_block(pts, 0, pts.rows(), prim, inv, out);
}

}  // namespace detail

/// Per-type Gaussian bandwidths for the consistency weights.
struct SigmaByType {
  double plane = 0.1;
  double sphere = 0.1;
  double cylinder = 0.1;
  double cone = 0.1;

  double of(TypeLabel t) const {
    switch (t) {
      case TypeLabel::Plane: return plane;
      case TypeLabel::Sphere: return sphere;
      case TypeLabel::Cylinder: return cylinder;
      case TypeLabel::Cone: return cone;
      default: throw std::invalid_argument("no bandwidth for type 'other'");
    }
  }

  void set(TypeLabel t, double v) {
    switch (t) {
      case TypeLabel::Plane: plane = v; break;
      case TypeLabel::Sphere: sphere = v; break;
      case TypeLabel::Cylinder: cylinder = v; break;
      case TypeLabel::Cone: cone = v; break;
      default: break;
    }
  }

  void validate() const {
    if (!(plane > 0.0 && sphere > 0.0 && cylinder > 0.0 && cone > 0.0))
      throw std::invalid_argument("consistency bandwidths must be positive");
  }
};

/// Data-driven default bandwidths: per type, half the median of d(p_i, s_j)
/// over sampled pairs, floored at 1e-4. Pairs are drawn from each point's
/// spatial neighborhood: uniformly random pairs mostly straddle different
/// primitives, which makes the median track the scene diameter instead of
/// the within-primitive consistency noise the bandwidth is meant to capture.
inline SigmaByType default_consistency_sigmas(
    const PointCloud& cloud, const std::vector<PrimitiveParams>& prims,
    const NeighborIndex& index, std::uint64_t seed = 7) {
  const auto n = cloud.size();
  const auto want =
      static_cast<std::size_t>(std::min<Eigen::Index>(8 * n, 100000));
  Rng rng(seed);
  const int hood = static_cast<int>(std::min<Eigen::Index>(33, n));
  std::vector<double> per_type[4];
  for (std::size_t s = 0; s < want; ++s) {
    const auto i = static_cast<Eigen::Index>(rng.uniform_index(n));
    const auto neighbors = index.knn(cloud.point(i), hood);
    const auto pick = neighbors[rng.uniform_index(neighbors.size())].index;
    const auto& prim = prims[static_cast<std::size_t>(pick)];
    per_type[prim.index()].push_back(distance(cloud.point(i), prim));
  }
  SigmaByType sigmas;
  for (int t = 0; t < 4; ++t) {
    auto& d = per_type[t];
    const TypeLabel label = static_cast<TypeLabel>(t);
    if (d.empty()) continue;  // type absent; keep the generic default
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    sigmas.set(label, std::max(0.5 * *mid, 1e-4));
  }
  return sigmas;
}

inline SigmaByType default_consistency_sigmas(
    const PointCloud& cloud, const std::vector<PrimitiveParams>& prims,
    std::uint64_t seed = 7) {
  return default_consistency_sigmas(cloud, prims, NeighborIndex(cloud), seed);
}

/// Consistency adjacency A_c. One primitive hypothesis per point; entries are
/// symmetrized Gaussian fits of each point against the other's primitive,
/// diagonal fixed at 1.
inline AdjacencyMatrix consistency_matrix(
    const PointCloud& cloud, const std::vector<PrimitiveParams>& prims,
    const SigmaByType& sigmas, unsigned threads = 0) {
  const Eigen::Index n = cloud.size();
  if (static_cast<Eigen::Index>(prims.size()) != n)
    throw std::invalid_argument("consistency_matrix: one primitive per point");
  sigmas.validate();
  for (const auto& p : prims) validate(p);

  std::vector<double> inv_two_sigma2(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = sigmas.of(type_of(prims[static_cast<std::size_t>(j)]));
    inv_two_sigma2[static_cast<std::size_t>(j)] = 1.0 / (2.0 * s * s);
  }

  if (n <= kDenseAdjacencyLimit) {
    Eigen::MatrixXd w(n, n);
    parallel_for(
        0, static_cast<std::size_t>(n),
        [&](std::size_t js) {
          const auto j = static_cast<Eigen::Index>(js);
          const auto& prim = prims[js];
          for (Eigen::Index i = 0; i < n; ++i) {
            const double d = distance(cloud.point(i), prim);
            w(i, j) = std::exp(-d * d * inv_two_sigma2[js]);
          }
        },
        threads);
    Eigen::MatrixXd a = 0.5 * (w + w.transpose());
    a.diagonal().setOnes();
    return AdjacencyMatrix::from_dense(std::move(a));
  }

  // Sparse path. Row i scans d(p_j, s_i) for every j with the primitive
  // dispatch hoisted out of the loop, keeps the 256 strongest entries of
  // that direction, and computes exact symmetrized weights for them. A pair
  // strong in the other direction, w(p_i, s_j), enters through the union
  // symmetrization of from_rows when point j ranks it, so a pair survives if
  // either endpoint considers it consistent.
  std::vector<std::vector<std::pair<int, double>>> rows(
      static_cast<std::size_t>(n));
  parallel_for(
      0, static_cast<std::size_t>(n),
      [&](std::size_t is) {
        const auto i = static_cast<Eigen::Index>(is);
        thread_local std::vector<float> exps;
        exps.resize(static_cast<std::size_t>(n));
        detail::scaled_sq_distances(cloud.positions, prims[is],
                                    inv_two_sigma2[is], exps.data());

        // Bounded max-heap: one cheap comparison per entry, heap ops only
        // for entries that beat the current worst. Ties are broken by a
        // per-row scrambled key; on equal-weight blocks (exact data) the
        // kept neighbors then scatter across the block instead of every row
        // picking the same lowest indices, which would turn the truncated
        // block into a hub graph with an uneven leading eigenvector.
        const auto keep = std::min<std::size_t>(
            kSparseRowKeep, static_cast<std::size_t>(n) - 1);
        const std::uint32_t row_salt =
            static_cast<std::uint32_t>(i) * 0x9e3779b9u;
        auto scramble = [row_salt](int j) {
          std::uint32_t x = (static_cast<std::uint32_t>(j) + 1u) * 0x85ebca6bu;
          x ^= row_salt;
          x ^= x >> 13;
          return x * 0xc2b2ae35u;
        };
        using Entry = std::pair<float, int>;
        auto heap_before = [&](const Entry& a, const Entry& b) {
          if (a.first != b.first) return a.first < b.first;
          return scramble(a.second) < scramble(b.second);
        };
        std::vector<Entry> scores;
        scores.reserve(keep);
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == i) continue;
          const Entry entry{exps[static_cast<std::size_t>(j)],
                            static_cast<int>(j)};
          if (scores.size() < keep) {
            scores.push_back(entry);
            if (scores.size() == keep)
              std::make_heap(scores.begin(), scores.end(), heap_before);
          } else if (heap_before(entry, scores.front())) {
            std::pop_heap(scores.begin(), scores.end(), heap_before);
            scores.back() = entry;
            std::push_heap(scores.begin(), scores.end(), heap_before);
          }
        }

        const Vector3 pi = cloud.point(i);
        auto& row = rows[is];
        row.reserve(scores.size() + 1);
        row.push_back({static_cast<int>(i), 1.0});
        for (const auto& [e_ji, j] : scores) {
          const double dij = distance(pi, prims[static_cast<std::size_t>(j)]);
          const double w =
              0.5 * (std::exp(-dij * dij *
                              inv_two_sigma2[static_cast<std::size_t>(j)]) +
                     std::exp(-static_cast<double>(e_ji)));
          row.push_back({j, w});
        }
      },
      threads);
  return AdjacencyMatrix::from_rows(n, std::move(rows), /*truncated=*/true);
}

/// Smoothness adjacency A_s over the symmetrized k-NN graph.
inline AdjacencyMatrix smoothness_matrix(const PointCloud& cloud,
                                         const FeatureField& features,
                                         int k = 50, double sigma_edge = 0.3,
                                         unsigned threads = 0) {
  const Eigen::Index n = cloud.size();
  if (features.normals.rows() != n)
    throw std::invalid_argument("smoothness_matrix: missing normals");
  if (k < 1) throw std::invalid_argument("smoothness_matrix: k must be >= 1");
  if (!(sigma_edge > 0.0))
    throw std::invalid_argument("smoothness_matrix: sigma_edge must be > 0");

  const NeighborIndex index(cloud);
  const double inv = 1.0 / (2.0 * sigma_edge * sigma_edge);
  std::vector<std::vector<std::pair<int, double>>> rows(
      static_cast<std::size_t>(n));
  parallel_for(
      0, static_cast<std::size_t>(n),
      [&](std::size_t is) {
        const auto i = static_cast<Eigen::Index>(is);
        for (const auto& nb : index.knn(cloud.point(i), std::min<int>(k + 1, static_cast<int>(n)))) {
          if (nb.index == static_cast<int>(i)) continue;
          const double nd =
              (features.normals.row(i) - features.normals.row(nb.index))
                  .squaredNorm();
          rows[is].push_back({nb.index, std::exp(-nd * inv)});
        }
      },
      threads);

  if (n <= kDenseAdjacencyLimit) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) {
        a(i, j) = v;
        a(j, i) = v;
      }
    return AdjacencyMatrix::from_dense(std::move(a));
  }
  return AdjacencyMatrix::from_rows(n, std::move(rows), /*truncated=*/false);
}

}  // namespace hybridseg
