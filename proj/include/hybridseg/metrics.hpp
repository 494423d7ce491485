// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Segmentation evaluation: mean segment IoU under optimal one-to-one
// matching, type agreement over matched segments, residual error of ground
// truth samples against matched predicted primitives, and point coverage.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "hybridseg/assignment.hpp"
#include "hybridseg/point_cloud.hpp"
#include "hybridseg/primitives.hpp"

namespace hybridseg {

/// One-hot segment membership; every row selects exactly one segment.
struct MembershipMatrix {
  std::vector<std::vector<std::uint8_t>> rows;  // N x K

  static MembershipMatrix from_labels(const std::vector<int>& labels, int K) {
    MembershipMatrix m;
    m.rows.assign(labels.size(), std::vector<std::uint8_t>(
                                     static_cast<std::size_t>(K), 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= K)
        throw std::invalid_argument("label out of range");
      m.rows[i][static_cast<std::size_t>(labels[i])] = 1;
    }
    return m;
  }

  bool valid() const {
    for (const auto& row : rows) {
      int sum = 0;
      for (auto v : row) sum += v;
      if (sum != 1) return false;
    }
    return true;
  }
};

namespace detail {

// Remaps arbitrary integer labels to [0, K), preserving first-seen order.
inline std::vector<int> compact_labels(const std::vector<int>& labels, int& K) {
  std::map<int, int> ids;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = ids.insert({labels[i], static_cast<int>(ids.size())}).first;
    out[i] = it->second;
  }
  K = static_cast<int>(ids.size());
  return out;
}

}  // namespace detail

struct SegIouResult {
  double value = 0.0;
  std::vector<int> gt_to_pred;  // matched predicted segment per GT segment, -1 if none
  int k_pred = 0;
  int k_gt = 0;
};

/// Mean IoU over ground-truth segments with predicted segments matched
/// one-to-one by a Hungarian assignment maximizing total IoU; unmatched
/// ground-truth segments contribute zero.
inline SegIouResult seg_iou(const std::vector<int>& pred_labels,
                            const std::vector<int>& gt_labels) {
  if (pred_labels.size() != gt_labels.size())
    throw std::invalid_argument("seg_iou: label count mismatch");
  if (pred_labels.empty()) throw std::invalid_argument("seg_iou: empty labels");

  SegIouResult result;
  const std::vector<int> pred = detail::compact_labels(pred_labels, result.k_pred);
  const std::vector<int> gt = detail::compact_labels(gt_labels, result.k_gt);

  Eigen::MatrixXd intersection =
      Eigen::MatrixXd::Zero(result.k_gt, result.k_pred);
  Eigen::VectorXd gt_size = Eigen::VectorXd::Zero(result.k_gt);
  Eigen::VectorXd pred_size = Eigen::VectorXd::Zero(result.k_pred);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    intersection(gt[i], pred[i]) += 1.0;
    gt_size[gt[i]] += 1.0;
    pred_size[pred[i]] += 1.0;
  }

  Eigen::MatrixXd iou(result.k_gt, result.k_pred);
  for (int g = 0; g < result.k_gt; ++g)
    for (int p = 0; p < result.k_pred; ++p) {
      const double inter = intersection(g, p);
      iou(g, p) = inter / (gt_size[g] + pred_size[p] - inter);
    }

  const Assignment match = hungarian(-iou);
  result.gt_to_pred.assign(static_cast<std::size_t>(result.k_gt), -1);
  double total = 0.0;
  for (int g = 0; g < result.k_gt; ++g) {
    const int p = match.row_to_col[static_cast<std::size_t>(g)];
    if (p >= 0) {
      result.gt_to_pred[static_cast<std::size_t>(g)] = p;
      total += iou(g, p);
    }
  }
  result.value = total / static_cast<double>(result.k_gt);
  return result;
}

/// Fraction of matched segments whose predicted type equals the ground truth.
inline double type_iou(const std::vector<TypeLabel>& pred_types,
                       const std::vector<TypeLabel>& gt_types,
                       const std::vector<int>& gt_to_pred) {
  if (gt_types.size() != gt_to_pred.size())
    throw std::invalid_argument("type_iou: matching size mismatch");
  int matched = 0, agree = 0;
  for (std::size_t g = 0; g < gt_to_pred.size(); ++g) {
    const int p = gt_to_pred[g];
    if (p < 0) continue;
    ++matched;
    if (pred_types[static_cast<std::size_t>(p)] == gt_types[g]) ++agree;
  }
  return matched == 0 ? 0.0
                      : static_cast<double>(agree) / static_cast<double>(matched);
}

/// Fraction of points whose distance to the closest predicted primitive is
/// below epsilon. No primitives means zero coverage.
inline double p_coverage(const PointCloud& cloud,
                         const std::vector<PrimitiveParams>& prims,
                         double epsilon = 0.01) {
  if (prims.empty()) return 0.0;
  Eigen::Index covered = 0;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& prim : prims)
      best = std::min(best, distance(cloud.point(i), prim));
    if (best < epsilon) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(cloud.size());
}

struct ResErrorReport {
  double sum = 0.0;        // segment sum, as the formula is written
  double mean = 0.0;       // per-matched-segment mean
  int matched_segments = 0;
};

/// Distance from each ground-truth segment's points to its matched predicted
/// primitive, averaged within the segment; reported both as the raw segment
/// sum and as the per-segment mean.
inline ResErrorReport res_error(const PointCloud& cloud,
                                const std::vector<int>& gt_labels,
                                const std::vector<PrimitiveParams>& pred_prims,
                                const std::vector<int>& gt_to_pred) {
  if (static_cast<Eigen::Index>(gt_labels.size()) != cloud.size())
    throw std::invalid_argument("res_error: label count mismatch");
  int k_gt = 0;
  const std::vector<int> gt = detail::compact_labels(gt_labels, k_gt);
  if (static_cast<std::size_t>(k_gt) != gt_to_pred.size())
    throw std::invalid_argument("res_error: matching size mismatch");

  std::vector<std::vector<int>> members(static_cast<std::size_t>(k_gt));
  for (std::size_t i = 0; i < gt.size(); ++i)
    members[static_cast<std::size_t>(gt[i])].push_back(static_cast<int>(i));

  ResErrorReport report;
  for (int g = 0; g < k_gt; ++g) {
    const int p = gt_to_pred[static_cast<std::size_t>(g)];
    if (p < 0) continue;
    const auto& ids = members[static_cast<std::size_t>(g)];
    if (ids.empty()) continue;
    double acc = 0.0;
    for (int id : ids)
      acc += distance(cloud.point(id), pred_prims[static_cast<std::size_t>(p)]);
    report.sum += acc / static_cast<double>(ids.size());
    ++report.matched_segments;
  }
  report.mean = report.matched_segments == 0
                    ? 0.0
                    : report.sum / static_cast<double>(report.matched_segments);
  return report;
}

struct MetricReport {
  double seg_iou = 0.0;
  double type_iou = 0.0;
  double res_error_sum = 0.0;
  double res_error_mean = 0.0;
  double p_coverage = 0.0;
  int k_pred = 0;
  int k_gt = 0;

  nlohmann::json to_json() const {
    return {{"seg_iou", seg_iou},       {"type_iou", type_iou},
            {"res_error", res_error_sum}, {"res_error_mean", res_error_mean},
            {"p_coverage", p_coverage}, {"K_pred", k_pred},
            {"K_gt", k_gt}};
  }
};

}  // namespace hybridseg
