// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// End-to-end segmentation pipeline: intrinsic features, per-point primitive
// hypotheses from a lightweight neighborhood RANSAC, the two spectral
// descriptors, entropy-weighted clustering, and per-segment fitting.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybridseg/adjacency.hpp"
#include "hybridseg/fitting.hpp"
#include "hybridseg/local_features.hpp"
#include "hybridseg/point_cloud.hpp"
#include "hybridseg/primitives.hpp"
#include "hybridseg/ransac.hpp"
#include "hybridseg/rng.hpp"
#include "hybridseg/segmentation.hpp"
#include "hybridseg/spectral.hpp"
#include "hybridseg/weighting.hpp"

namespace hybridseg {

struct PipelineConfig {
  bool normalize = true;
  int feature_k = 128;        // neighborhood for normals / variation
  int hypothesis_k = 64;      // neighborhood for per-point RANSAC
  int hypothesis_iters = 16;  // minimal samples per type per point
  double hypothesis_tol = 0.01;
  std::set<TypeLabel> types = {TypeLabel::Plane, TypeLabel::Sphere,
                               TypeLabel::Cylinder, TypeLabel::Cone};
  int graph_k = 50;           // smoothness graph neighbors
  double sigma_edge = 0.3;
  int d_consistency = 0;      // 0 = eigengap heuristic
  int d_smoothness = 0;
  bool per_column_features = false;  // per-descriptor blocks by default
  // Keep only near-single-sign smoothness eigencolumns (component
  // indicators). Oscillating columns are within-component harmonics of the
  // k-NN graph; they smear the embedding without separating anything.
  bool filter_smoothness_harmonics = true;
  std::optional<Eigen::MatrixXd> extra_features;  // e.g. learned descriptors
  bool keep_adjacency = false;  // retain A_c / A_s in the result (for export)
  SegmentConfig cluster;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct PipelineResult {
  PointCloud cloud;  // processed (possibly normalized) cloud with normals
  FeatureField features;
  std::vector<TypeLabel> hypothesis_types;
  std::vector<PrimitiveParams> hypotheses;
  SigmaByType sigmas;
  SpectralDescriptor consistency;
  SpectralDescriptor smoothness;
  Segmentation segmentation;
  std::optional<AdjacencyMatrix> a_c;  // present when keep_adjacency is set
  std::optional<AdjacencyMatrix> a_s;
};

namespace detail {

struct HypothesisCandidate {
  PrimitiveParams params = Plane{};
  long count = -1;
  double mean_residual = std::numeric_limits<double>::infinity();
};

// Minimal-sample RANSAC over one point's neighborhood with closed-form
// refits only. Each requested type keeps its own best candidate and is
// refit on its consensus set; types compete simple-to-complex, a more
// complex model only displacing a simpler one when it clearly gains inliers.
// Falls back to the tangent plane when nothing reaches consensus.
inline std::pair<TypeLabel, PrimitiveParams> point_hypothesis(
    const PointCloud& cloud, const std::vector<Neighbor>& neighborhood,
    const FeatureField& features, Eigen::Index point_id,
    const PipelineConfig& config, Rng rng) {
  const int n = static_cast<int>(neighborhood.size());
  Matrix3Xr pts(n, 3), nrm(n, 3);
  for (int i = 0; i < n; ++i) {
    pts.row(i) = cloud.positions.row(neighborhood[i].index);
    nrm.row(i) = features.normals.row(neighborhood[i].index);
  }

  auto score = [&](const PrimitiveParams& prim) {
    HypothesisCandidate c;
    c.params = prim;
    c.count = 0;
    double residual = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = distance(pts.row(i).transpose(), prim);
      if (d < config.hypothesis_tol) {
        ++c.count;
        residual += d;
      }
    }
    c.mean_residual = c.count > 0
                          ? residual / static_cast<double>(c.count)
                          : std::numeric_limits<double>::infinity();
    return c;
  };

  auto refit = [&](const HypothesisCandidate& c) -> HypothesisCandidate {
    std::vector<int> inl;
    for (int i = 0; i < n; ++i)
      if (distance(pts.row(i).transpose(), c.params) < config.hypothesis_tol)
        inl.push_back(i);
    Matrix3Xr ip(static_cast<Eigen::Index>(inl.size()), 3),
        in(static_cast<Eigen::Index>(inl.size()), 3);
    for (std::size_t i = 0; i < inl.size(); ++i) {
      ip.row(static_cast<Eigen::Index>(i)) = pts.row(inl[i]);
      in.row(static_cast<Eigen::Index>(i)) = nrm.row(inl[i]);
    }
    try {
      switch (type_of(c.params)) {
        case TypeLabel::Plane:
          if (inl.size() >= 3) return score(fit_plane(ip).params);
          break;
        case TypeLabel::Sphere:
          if (inl.size() >= 4) return score(fit_sphere(ip).params);
          break;
        case TypeLabel::Cylinder:
          if (inl.size() >= 6)
            return score(PrimitiveParams(init_cylinder(ip, in)));
          break;
        case TypeLabel::Cone:
          if (inl.size() >= 6) return score(PrimitiveParams(init_cone(ip, in)));
          break;
        default:
          break;
      }
    } catch (const std::exception&) {
      // keep the raw minimal-sample candidate
    }
    return c;
  };

  std::optional<HypothesisCandidate> per_type[4];
  std::vector<int> sample;
  for (TypeLabel type : config.types) {
    const int need = minimal_sample_size(type);
    if (n < need) continue;
    for (int iter = 0; iter < config.hypothesis_iters; ++iter) {
      sample.clear();
      while (static_cast<int>(sample.size()) < need) {
        const int pick = static_cast<int>(rng.uniform_index(n));
        if (std::find(sample.begin(), sample.end(), pick) == sample.end())
          sample.push_back(pick);
      }
      Matrix3Xr sp(need, 3), sn(need, 3);
      for (int i = 0; i < need; ++i) {
        sp.row(i) = pts.row(sample[i]);
        sn.row(i) = nrm.row(sample[i]);
      }
      std::optional<PrimitiveParams> hyp;
      switch (type) {
        case TypeLabel::Plane: hyp = plane_from_sample(sp); break;
        case TypeLabel::Sphere: hyp = sphere_from_sample(sp); break;
        case TypeLabel::Cylinder: hyp = cylinder_from_sample(sp, sn); break;
        case TypeLabel::Cone: hyp = cone_from_sample(sp, sn); break;
        default: break;
      }
      if (!hyp) continue;
      const HypothesisCandidate candidate = score(*hyp);
      auto& slot = per_type[static_cast<int>(type)];
      if (!slot || candidate.count > slot->count ||
          (candidate.count == slot->count &&
           candidate.mean_residual < slot->mean_residual))
        slot = candidate;
    }
  }
  // The feature-field tangent plane is always a plane candidate.
  if (config.types.count(TypeLabel::Plane)) {
    Plane tangent;
    tangent.n = features.normals.row(point_id).transpose();
    tangent.d = tangent.n.dot(cloud.point(point_id));
    tangent.canonicalize();
    const HypothesisCandidate candidate = score(tangent);
    auto& slot = per_type[static_cast<int>(TypeLabel::Plane)];
    if (!slot || candidate.count > slot->count) slot = candidate;
  }

  std::optional<HypothesisCandidate> best;
  for (int t = 0; t < 4; ++t) {  // simple-to-complex order
    if (!per_type[t]) continue;
    if (per_type[t]->count < 3 * minimal_sample_size(static_cast<TypeLabel>(t)))
      continue;
    HypothesisCandidate candidate = refit(*per_type[t]);
    if (!best) {
      best = candidate;
      continue;
    }
    // a more complex type must clearly gain support over a simpler one
    if (candidate.count > best->count + std::max<long>(2, best->count / 20))
      best = candidate;
  }
  if (best) return {type_of(best->params), best->params};

  Plane plane;
  plane.n = features.normals.row(point_id).transpose();
  plane.d = plane.n.dot(cloud.point(point_id));
  plane.canonicalize();
  return {TypeLabel::Plane, PrimitiveParams(plane)};
}

}  // namespace detail

/// One primitive hypothesis per point from its local neighborhood.
inline void per_point_hypotheses(const PointCloud& cloud,
                                 const NeighborIndex& index,
                                 const FeatureField& features,
                                 const PipelineConfig& config,
                                 std::vector<TypeLabel>& types,
                                 std::vector<PrimitiveParams>& prims) {
  const Eigen::Index n = cloud.size();
  types.assign(static_cast<std::size_t>(n), TypeLabel::Plane);
  prims.assign(static_cast<std::size_t>(n), PrimitiveParams(Plane{}));
  Rng base(config.seed);
  const std::uint64_t stream = base.next_u64();
  parallel_for(
      0, static_cast<std::size_t>(n),
      [&](std::size_t i) {
        Rng rng(stream ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
        const auto neighborhood = index.knn(
            cloud.point(static_cast<Eigen::Index>(i)),
            std::min<int>(config.hypothesis_k, static_cast<int>(n)));
        auto [type, prim] = detail::point_hypothesis(
            cloud, neighborhood, features, static_cast<Eigen::Index>(i),
            config, rng);
        types[i] = type;
        prims[i] = prim;
      },
      config.threads);
}

namespace detail {

// Fraction of a column's L1 mass sitting below zero. Component-indicator
// eigenvectors are single-signed; graph harmonics oscillate around zero.
inline double negative_mass_fraction(const Eigen::VectorXd& column) {
  double pos = 0.0, neg = 0.0;
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    if (column[i] > 0.0)
      pos += column[i];
    else
      neg -= column[i];
  }
  const double total = pos + neg;
  return total > 0.0 ? neg / total : 0.0;
}

}  // namespace detail

/// Builds the weighting features from the spectral descriptors (one feature
/// per column by default, or one block per descriptor) plus any externally
/// supplied feature block.
inline FeatureSet assemble_features(const SpectralDescriptor& consistency,
                                    const SpectralDescriptor& smoothness,
                                    const PipelineConfig& config) {
  FeatureSet set;
  int group = 0;
  auto add = [&](const Eigen::MatrixXd& m, const std::string& prefix,
                 bool filter_harmonics) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (!filter_harmonics ||
          detail::negative_mass_fraction(m.col(c)) < 0.1 || c == 0)
        keep.push_back(c);
    if (config.per_column_features) {
      for (Eigen::Index c : keep)
        set.features.push_back(
            {prefix + std::to_string(c), m.col(c), 0.0, group});
    } else {
      Eigen::MatrixXd block(m.rows(), static_cast<Eigen::Index>(keep.size()));
      for (std::size_t i = 0; i < keep.size(); ++i)
        block.col(static_cast<Eigen::Index>(i)) = m.col(keep[i]);
      set.features.push_back({prefix + "block", std::move(block), 0.0, group});
    }
    ++group;
  };
  add(consistency.descriptors, "consistency_", false);
  add(smoothness.descriptors, "smoothness_",
      config.filter_smoothness_harmonics);
  if (config.extra_features)
    set.features.push_back({"external", *config.extra_features, 0.0, group});
  return set;
}

inline PipelineResult run_segmentation_pipeline(const PointCloud& input,
                                                const PipelineConfig& config) {
  PipelineResult result;
  result.cloud = config.normalize ? normalize_cloud(input) : input;

  const NeighborIndex index(result.cloud);
  result.features = feature_field(
      result.cloud, index,
      KnnOf{std::min<int>(config.feature_k,
                          static_cast<int>(result.cloud.size()))},
      config.threads);
  if (!result.cloud.normals) result.cloud.normals = result.features.normals;

  per_point_hypotheses(result.cloud, index, result.features, config,
                       result.hypothesis_types, result.hypotheses);

  result.sigmas = default_consistency_sigmas(result.cloud, result.hypotheses,
                                             index, config.seed);
  const AdjacencyMatrix a_c = consistency_matrix(
      result.cloud, result.hypotheses, result.sigmas, config.threads);
  const AdjacencyMatrix a_s =
      smoothness_matrix(result.cloud, result.features, config.graph_k,
                        config.sigma_edge, config.threads);

  result.consistency = auto_descriptor(a_c, config.d_consistency);
  result.smoothness = auto_descriptor(a_s, config.d_smoothness);
  if (config.keep_adjacency) {
    result.a_c = a_c;
    result.a_s = a_s;
  }

  FeatureSet features =
      assemble_features(result.consistency, result.smoothness, config);
  if (config.extra_features &&
      config.extra_features->rows() != result.cloud.size())
    throw std::invalid_argument("external features do not match the cloud");

  SegmentConfig cluster = config.cluster;
  cluster.threads = config.threads;
  result.segmentation = segment(result.cloud, std::move(features),
                                result.hypothesis_types, cluster);
  return result;
}

}  // namespace hybridseg
