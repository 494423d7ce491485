// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Clustering-module assembly: entropy-weighted feature concatenation, mean
// shift, small-cluster absorption, and per-segment type voting + fitting.
// Also the pull/push embedding-quality diagnostics.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "hybridseg/fitting.hpp"
#include "hybridseg/mean_shift.hpp"
#include "hybridseg/point_cloud.hpp"
#include "hybridseg/primitives.hpp"
#include "hybridseg/weighting.hpp"

namespace hybridseg {

struct SegmentRecord {
  TypeLabel type = TypeLabel::Plane;
  PrimitiveParams params = Plane{};
  int count = 0;
  double rms = 0.0;
};

struct Segmentation {
  std::vector<int> labels;  // per point, in [0, K)
  std::vector<SegmentRecord> segments;

  int cluster_count() const { return static_cast<int>(segments.size()); }
};

struct SegmentConfig {
  double bandwidth = 0.0;           // 0 = 0.3 x median pairwise distance
  int mean_shift_max_iter = 300;
  double mean_shift_tol = 1e-6;
  int min_cluster_size = 20;        // smaller clusters merge into the nearest
  Eigen::Index max_mean_shift_seeds = 1024;  // trajectory budget for large N
  Eigen::Index entropy_sample_rows = 4096;   // entropy subsample for large N
  unsigned threads = 0;
};

namespace detail {

inline Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& m,
                                      Eigen::Index target) {
  if (m.rows() <= target) return m;
  Eigen::MatrixXd out(target, m.cols());
  const double stride = static_cast<double>(m.rows()) / static_cast<double>(target);
  for (Eigen::Index i = 0; i < target; ++i)
    out.row(i) = m.row(static_cast<Eigen::Index>(static_cast<double>(i) * stride));
  return out;
}

inline TypeLabel majority_type(const std::vector<TypeLabel>& types,
                               const std::vector<int>& members) {
  int votes[4] = {0, 0, 0, 0};
  for (int id : members) {
    const TypeLabel t = types[static_cast<std::size_t>(id)];
    if (t != TypeLabel::Other) ++votes[static_cast<int>(t)];
  }
  int best = -1, best_votes = 0;
  for (int t = 0; t < 4; ++t)
    if (votes[t] > best_votes) {
      best_votes = votes[t];
      best = t;
    }
  return best < 0 ? TypeLabel::Other : static_cast<TypeLabel>(best);
}

// Fit falling back through the other types; a segment never stays unfitted.
inline FitResult fit_segment(const PointCloud& cloud,
                             const std::vector<int>& members, TypeLabel vote) {
  std::vector<TypeLabel> order;
  if (vote != TypeLabel::Other) order.push_back(vote);
  for (TypeLabel t : {TypeLabel::Plane, TypeLabel::Sphere, TypeLabel::Cylinder,
                      TypeLabel::Cone})
    if (t != vote) order.push_back(t);

  if (vote == TypeLabel::Other) {
    // no usable votes: pick the best-fitting type by residual
    FitResult best;
    bool have = false;
    for (TypeLabel t : order) {
      try {
        FitResult fit = fit_primitive(cloud, members, t);
        if (!have || fit.rms < best.rms) {
          best = fit;
          have = true;
        }
      } catch (const std::exception&) {
      }
    }
    if (have) return best;
  } else {
    for (TypeLabel t : order) {
      try {
        return fit_primitive(cloud, members, t);
      } catch (const std::exception&) {
      }
    }
  }
  // Fully degenerate cluster (e.g. coincident points): plane through the mean.
  Plane fallback;
  Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
  for (int id : members) mean += cloud.positions.row(id);
  mean /= static_cast<double>(members.size());
  fallback.d = mean.z();
  fallback.canonicalize();
  return FitResult{fallback, false, 0.0};
}

}  // namespace detail

/// Full clustering module: concatenates the features scaled by their adaptive
/// weights, mean-shifts the rows, absorbs clusters smaller than
/// min_cluster_size into their nearest neighbor (by mode distance), then
/// assigns each segment a type by majority vote and fits its parameters.
inline Segmentation segment(const PointCloud& cloud, FeatureSet features,
                            const std::vector<TypeLabel>& per_point_types,
                            const SegmentConfig& config = {}) {
  features.validate();
  const Eigen::Index n = cloud.size();
  if (features.rows() != n)
    throw std::invalid_argument("segment: features do not match the cloud");
  if (static_cast<Eigen::Index>(per_point_types.size()) != n)
    throw std::invalid_argument("segment: per-point types do not match");

  // Bandwidths and entropies; large inputs use a deterministic row subsample.
  std::vector<double> entropies;
  entropies.reserve(features.features.size());
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t l = 0; l < features.features.size(); ++l) {
    auto& f = features.features[l];
    if (f.sigma <= 0.0) {
      // One fifth of the mean pairwise distance: scale-free densities in the
      // regime where tighter clustering reliably lowers the entropy score.
      // The median is unusable here: a feature whose rows half-coincide
      // drives it to zero and the density estimate explodes. The floor
      // relative to the column scale guards (near-)constant features.
      const double scale = std::max(f.values.cwiseAbs().maxCoeff(), 1e-8);
      f.sigma = std::max(0.2 * mean_pairwise_distance(f.values), 1e-6 * scale);
    }
    const Eigen::MatrixXd rows =
        detail::subsample_rows(f.values, config.entropy_sample_rows);
    entropies.push_back(feature_entropy(rows, f.sigma, config.threads));
    groups[f.group].push_back(l);
  }

  // A single group follows the plain contract. With several groups (one per
  // descriptor family) each family is weighted internally and receives an
  // equal share of the total squared weight, so one family's many columns
  // cannot crowd out another's.
  std::vector<double> weights(features.features.size(), 0.0);
  const double group_share =
      1.0 / std::sqrt(static_cast<double>(groups.size()));
  for (const auto& [group, members] : groups) {
    std::vector<double> group_entropies;
    group_entropies.reserve(members.size());
    for (std::size_t l : members) group_entropies.push_back(entropies[l]);
    const std::vector<double> group_weights = adaptive_weights(group_entropies);
    for (std::size_t i = 0; i < members.size(); ++i)
      weights[members[i]] = group_share * group_weights[i];
  }

  Eigen::Index total_cols = 0;
  for (const auto& f : features.features) total_cols += f.values.cols();
  Eigen::MatrixXd combined(n, total_cols);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < features.features.size(); ++l) {
    const auto& f = features.features[l].values;
    combined.middleCols(at, f.cols()) = weights[l] * f;
    at += f.cols();
  }

  double bandwidth = config.bandwidth;
  if (bandwidth <= 0.0) {
    bandwidth = 0.3 * median_pairwise_distance(combined);
    if (bandwidth <= 0.0) bandwidth = 1e-6;
  }

  const Eigen::Index stride =
      n > config.max_mean_shift_seeds
          ? (n + config.max_mean_shift_seeds - 1) / config.max_mean_shift_seeds
          : 1;
  MeanShiftResult shift =
      mean_shift(combined, bandwidth, config.mean_shift_max_iter,
                 config.mean_shift_tol, config.threads, stride);

  // Absorb undersized clusters into the nearest surviving mode.
  std::vector<int> counts(static_cast<std::size_t>(shift.modes.rows()), 0);
  for (int l : shift.labels) ++counts[static_cast<std::size_t>(l)];
  std::vector<int> remap(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c)
    remap[c] = static_cast<int>(c);
  while (true) {
    int victim = -1;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (remap[c] != static_cast<int>(c)) continue;  // already absorbed
      if (counts[c] > 0 && counts[c] < config.min_cluster_size &&
          (victim < 0 || counts[c] < counts[static_cast<std::size_t>(victim)]))
        victim = static_cast<int>(c);
    }
    if (victim < 0) break;
    int target = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (static_cast<int>(c) == victim || remap[c] != static_cast<int>(c) ||
          counts[c] == 0)
        continue;
      const double d =
          (shift.modes.row(victim) - shift.modes.row(static_cast<int>(c)))
              .squaredNorm();
      if (d < best_d) {
        best_d = d;
        target = static_cast<int>(c);
      }
    }
    if (target < 0) break;  // single cluster left
    remap[static_cast<std::size_t>(victim)] = target;
    counts[static_cast<std::size_t>(target)] +=
        counts[static_cast<std::size_t>(victim)];
    counts[static_cast<std::size_t>(victim)] = 0;
  }
  auto resolve = [&](int c) {
    while (remap[static_cast<std::size_t>(c)] != c)
      c = remap[static_cast<std::size_t>(c)];
    return c;
  };

  // Compact wholesale into [0, K), ordered by surviving mode index.
  std::vector<int> cluster_id(counts.size(), -1);
  int k = 0;
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0 && remap[c] == static_cast<int>(c))
      cluster_id[c] = k++;
  if (k == 0) throw std::runtime_error("segment: clustering produced no output");

  Segmentation seg;
  seg.labels.resize(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = cluster_id[static_cast<std::size_t>(
        resolve(shift.labels[static_cast<std::size_t>(i)]))];
    seg.labels[static_cast<std::size_t>(i)] = c;
    members[static_cast<std::size_t>(c)].push_back(static_cast<int>(i));
  }

  seg.segments.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    auto& record = seg.segments[static_cast<std::size_t>(c)];
    const auto& ids = members[static_cast<std::size_t>(c)];
    const TypeLabel vote = detail::majority_type(per_point_types, ids);
    const FitResult fit = detail::fit_segment(cloud, ids, vote);
    record.type = type_of(fit.params);
    record.params = fit.params;
    record.count = static_cast<int>(ids.size());
    record.rms = fit.rms;
  }
  return seg;
}

/// Embedding-quality diagnostics. pull: mean hinge distance of descriptors to
/// their segment mean beyond delta1. push: mean hinge shortfall of pairwise
/// segment-mean separations below delta2 (0 when K == 1).
inline std::pair<double, double> pullpush_quality(
    const Eigen::MatrixXd& descriptors, const std::vector<int>& gt_labels,
    double delta1 = 0.5, double delta2 = 1.5) {
  const Eigen::Index n = descriptors.rows();
  if (static_cast<Eigen::Index>(gt_labels.size()) != n)
    throw std::invalid_argument("pullpush_quality: label count mismatch");
  if (n == 0) throw std::invalid_argument("pullpush_quality: empty input");

  std::map<int, std::vector<int>> groups;
  for (Eigen::Index i = 0; i < n; ++i)
    groups[gt_labels[static_cast<std::size_t>(i)]].push_back(
        static_cast<int>(i));
  const int K = static_cast<int>(groups.size());

  Eigen::MatrixXd means(K, descriptors.cols());
  int gi = 0;
  double pull = 0.0;
  for (const auto& [label, ids] : groups) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(descriptors.cols());
    for (int id : ids) mean += descriptors.row(id);
    mean /= static_cast<double>(ids.size());
    means.row(gi) = mean;

    double acc = 0.0;
    for (int id : ids)
      acc += std::max((descriptors.row(id) - mean).norm() - delta1, 0.0);
    pull += acc / static_cast<double>(ids.size());
    ++gi;
  }
  pull /= static_cast<double>(K);

  double push = 0.0;
  if (K > 1) {
    for (int a = 0; a < K; ++a)
      for (int b = a + 1; b < K; ++b)
        push += std::max(delta2 - (means.row(a) - means.row(b)).norm(), 0.0);
    push /= static_cast<double>(K) * static_cast<double>(K - 1) / 2.0;
  }
  return {pull, push};
}

}  // namespace hybridseg
