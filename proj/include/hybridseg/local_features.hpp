// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Local-PCA geometry: neighborhood covariance about the query point, normals
// from the smallest eigenvector with MST-propagated orientation, and the
// bounded surface-variation feature lambda1 / (lambda1+lambda2+lambda3).

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <variant>
#include <vector>

#include "hybridseg/kdtree.hpp"
#include "hybridseg/parallel.hpp"
#include "hybridseg/point_cloud.hpp"

namespace hybridseg {

/// Neighborhood selection: the k nearest points, or all points within r.
struct KnnOf {
  int k = 128;
};
struct RadiusOf {
  double r = 0.1;
};
using NeighborhoodSpec = std::variant<KnnOf, RadiusOf>;

inline std::vector<Neighbor> gather_neighborhood(const NeighborIndex& index,
                                                 const Vector3& query,
                                                 const NeighborhoodSpec& spec) {
  if (std::holds_alternative<KnnOf>(spec))
    return index.knn(query, std::get<KnnOf>(spec).k);
  return index.radius(query, std::get<RadiusOf>(spec).r);
}

/// Covariance of neighbor offsets about a point, with its eigensystem.
struct LocalCovariance {
  Vector3 center = Vector3::Zero();
  double radius = 0.0;  // radius used, or mean neighbor distance for k-NN
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
  Vector3 eigenvalues = Vector3::Zero();      // ascending
  Eigen::Matrix3d eigenvectors = Eigen::Matrix3d::Identity();  // columns

  bool degenerate() const { return eigenvalues.sum() <= 0.0; }
};

inline LocalCovariance local_covariance(const PointCloud& cloud,
                                        const NeighborIndex& index,
                                        Eigen::Index point_id,
                                        const NeighborhoodSpec& spec) {
  const Vector3 p = cloud.point(point_id);
  const auto neighbors = gather_neighborhood(index, p, spec);
  if (neighbors.size() < 3)
    throw std::runtime_error("insufficient neighborhood at point " +
                             std::to_string(point_id));

  LocalCovariance cov;
  cov.center = p;
  Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
  double dist_sum = 0.0;
  for (const auto& nb : neighbors) {
    const Vector3 d = p - cloud.point(nb.index);
    sum += d * d.transpose();
    dist_sum += nb.distance;
  }
  cov.matrix = sum / static_cast<double>(neighbors.size());
  cov.radius = std::holds_alternative<RadiusOf>(spec)
                   ? std::get<RadiusOf>(spec).r
                   : dist_sum / static_cast<double>(neighbors.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov.matrix);
  cov.eigenvalues = eig.eigenvalues();
  cov.eigenvectors = eig.eigenvectors();
  return cov;
}

/// lambda1 / (lambda1 + lambda2 + lambda3), clamped to [0, 1/3].
/// A fully degenerate (all-zero) covariance reports 0; callers that care can
/// test LocalCovariance::degenerate().
inline double surface_variation(const LocalCovariance& cov) {
  const double total = cov.eigenvalues.sum();
  if (total <= 0.0) return 0.0;
  const double v = cov.eigenvalues[0] / total;
  return std::clamp(v, 0.0, 1.0 / 3.0);
}

/// Per-point normals and surface variations.
struct FeatureField {
  Matrix3Xr normals;
  Eigen::VectorXd variations;
  std::vector<std::uint8_t> degenerate;  // per-point all-zero-covariance flag
};

namespace detail {

// Orients normals consistently: Euclidean MST over the symmetric k-NN graph,
// one tree per connected component, root = lowest index, root sign chosen
// toward +z (ties +y, then +x), children flipped to agree with their parent.
inline void orient_normals(const PointCloud& cloud, const NeighborIndex& index,
                           int graph_k, Matrix3Xr& normals) {
  const int n = static_cast<int>(cloud.size());
  const int k = std::min(graph_k + 1, n);  // +1: query point is its own nn

  std::vector<std::vector<Neighbor>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (const auto& nb : index.knn(cloud.point(i), k)) {
      if (nb.index == i) continue;
      adj[static_cast<std::size_t>(i)].push_back(nb);
      adj[static_cast<std::size_t>(nb.index)].push_back({i, nb.distance});
    }
  }

  // Prim's algorithm from each unvisited lowest-index root.
  using Edge = std::pair<double, std::pair<int, int>>;  // (dist, (from, to))
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  for (int root = 0; root < n; ++root) {
    if (visited[static_cast<std::size_t>(root)]) continue;

    Vector3 rn = normals.row(root).transpose();
    bool flip;
    if (rn.z() != 0.0)
      flip = rn.z() < 0.0;
    else if (rn.y() != 0.0)
      flip = rn.y() < 0.0;
    else
      flip = rn.x() < 0.0;
    if (flip) normals.row(root) = -normals.row(root);

    std::priority_queue<Edge, std::vector<Edge>, std::greater<>> frontier;
    visited[static_cast<std::size_t>(root)] = 1;
    for (const auto& nb : adj[static_cast<std::size_t>(root)])
      frontier.push({nb.distance, {root, nb.index}});
    while (!frontier.empty()) {
      const auto [dist, edge] = frontier.top();
      frontier.pop();
      const auto [parent, child] = edge;
      if (visited[static_cast<std::size_t>(child)]) continue;
      visited[static_cast<std::size_t>(child)] = 1;
      if (normals.row(parent).dot(normals.row(child)) < 0.0)
        normals.row(child) = -normals.row(child);
      for (const auto& nb : adj[static_cast<std::size_t>(child)])
        if (!visited[static_cast<std::size_t>(nb.index)])
          frontier.push({nb.distance, {child, nb.index}});
    }
  }
}

}  // namespace detail

/// Normal = smallest eigenvector of the centroid-centered neighborhood
/// covariance (the query-point-centered moment has a nonzero radial mean on
/// curved surfaces, which costs several degrees of accuracy at k = 128);
/// variation still comes from the query-centered moment. Orientation is
/// propagated along a Euclidean MST of the k-NN graph.
inline FeatureField estimate_normals(const PointCloud& cloud,
                                     const NeighborIndex& index,
                                     const NeighborhoodSpec& spec,
                                     unsigned threads = 0) {
  const Eigen::Index n = cloud.size();
  FeatureField field;
  field.normals.resize(n, 3);
  field.variations.resize(n);
  field.degenerate.assign(static_cast<std::size_t>(n), 0);

  parallel_for(
      0, static_cast<std::size_t>(n),
      [&](std::size_t i) {
        const Vector3 p = cloud.point(static_cast<Eigen::Index>(i));
        const auto neighbors = gather_neighborhood(index, p, spec);
        if (neighbors.size() < 3)
          throw std::runtime_error("insufficient neighborhood at point " +
                                   std::to_string(i));

        Vector3 mean = Vector3::Zero();
        Eigen::Matrix3d moment = Eigen::Matrix3d::Zero();
        for (const auto& nb : neighbors) {
          const Vector3 x = cloud.point(nb.index);
          mean += x;
          const Vector3 d = p - x;
          moment += d * d.transpose();
        }
        const double count = static_cast<double>(neighbors.size());
        mean /= count;
        moment /= count;

        Eigen::Matrix3d centered = Eigen::Matrix3d::Zero();
        for (const auto& nb : neighbors) {
          const Vector3 d = cloud.point(nb.index) - mean;
          centered += d * d.transpose();
        }
        centered /= count;

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> normal_eig(centered);
        field.normals.row(static_cast<Eigen::Index>(i)) =
            normal_eig.eigenvectors().col(0).transpose();

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> moment_eig(moment);
        LocalCovariance cov;
        cov.matrix = moment;
        cov.eigenvalues = moment_eig.eigenvalues();
        field.variations[static_cast<Eigen::Index>(i)] = surface_variation(cov);
        if (cov.degenerate()) field.degenerate[i] = 1;
      },
      threads);

  // A modest graph keeps orientation propagation local; using the full
  // feature neighborhood (k up to 128) would bridge gaps that should stay
  // separate components.
  constexpr int kOrientationGraphK = 12;
  detail::orient_normals(cloud, index, kOrientationGraphK, field.normals);
  return field;
}

/// Batch features with the default neighborhood (k = 128 nearest points).
inline FeatureField feature_field(const PointCloud& cloud,
                                  const NeighborIndex& index,
                                  const NeighborhoodSpec& spec = KnnOf{128},
                                  unsigned threads = 0) {
  return estimate_normals(cloud, index, spec, threads);
}

}  // namespace hybridseg
