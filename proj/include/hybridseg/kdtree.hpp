// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hybridseg/point_cloud.hpp"

namespace hybridseg {

struct Neighbor {
  int index;
  double distance;
};

/// Immutable k-d tree over the positions of a point cloud.
///
/// Queries return exactly what an O(N) scan would: k-NN results are ordered
/// by (distance, index) with ties broken toward the lower index, and radius
/// queries are inclusive of the boundary. Safe for concurrent queries.
class NeighborIndex {
 public:
  explicit NeighborIndex(const Matrix3Xr& points) : pts_(points) {
    const int n = static_cast<int>(points.rows());
    if (n < 1) throw std::invalid_argument("NeighborIndex: empty input");
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * static_cast<std::size_t>(n) / kLeafSize + 2);
    root_ = build(0, n);
  }

  explicit NeighborIndex(const PointCloud& cloud)
      : NeighborIndex(cloud.positions) {}

  int size() const { return static_cast<int>(pts_.rows()); }

  /// k nearest neighbors of an arbitrary query point. If clamp is true
  /// (default) k is reduced to N, otherwise an over-sized k throws.
  std::vector<Neighbor> knn(const Vector3& query, int k,
                            bool clamp = true) const {
    if (k < 1) throw std::invalid_argument("knn: k must be positive");
    if (k > size()) {
      if (!clamp) throw std::invalid_argument("knn: k exceeds point count");
      k = size();
    }
    KnnAccumulator acc(k);
    search_knn(root_, query, acc);
    std::vector<Neighbor> out(acc.heap.begin(), acc.heap.end());
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.distance < b.distance ||
             (a.distance == b.distance && a.index < b.index);
    });
    for (auto& nb : out) nb.distance = std::sqrt(nb.distance);
    return out;
  }

  /// All points with distance <= radius, ordered by index.
  std::vector<Neighbor> radius(const Vector3& query, double r) const {
    if (r < 0.0) throw std::invalid_argument("radius query: negative radius");
    std::vector<Neighbor> out;
    search_radius(root_, query, r * r, out);
    std::sort(out.begin(), out.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    for (auto& nb : out) nb.distance = std::sqrt(nb.distance);
    return out;
  }

  /// Index of the nearest point (lowest index on ties).
  Neighbor nearest(const Vector3& query) const { return knn(query, 1)[0]; }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
    int axis = 0;
    double split = 0.0;
  };

  struct KnnAccumulator {
    explicit KnnAccumulator(int k) : capacity(k) { heap.reserve(k); }

    // Max-heap keyed by (distance, index) so the worst kept neighbor sits on
    // top; ties resolve toward the lower index.
    static bool closer(const Neighbor& a, const Neighbor& b) {
      return a.distance < b.distance ||
             (a.distance == b.distance && a.index < b.index);
    }

    void offer(int index, double dist2) {
      if (static_cast<int>(heap.size()) < capacity) {
        heap.push_back({index, dist2});
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer({index, dist2}, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = {index, dist2};
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }

    double bound() const {
      return static_cast<int>(heap.size()) < capacity
                 ? std::numeric_limits<double>::infinity()
                 : heap.front().distance;
    }

    int capacity;
    std::vector<Neighbor> heap;
  };

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }

    Eigen::RowVector3d lo = pts_.row(order_[begin]);
    Eigen::RowVector3d hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(pts_.row(order_[i]));
      hi = hi.cwiseMax(pts_.row(order_[i]));
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](int a, int b) {
                       const double va = pts_(a, axis), vb = pts_(b, axis);
                       return va < vb || (va == vb && a < b);
                     });
    node.axis = axis;
    node.split = pts_(order_[mid], axis);
    nodes_.push_back(node);
    const int self = static_cast<int>(nodes_.size()) - 1;
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search_knn(int node_id, const Vector3& q, KnnAccumulator& acc) const {
    const Node& node = nodes_[node_id];
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        acc.offer(idx, (pts_.row(idx).transpose() - q).squaredNorm());
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search_knn(near, q, acc);
    if (delta * delta <= acc.bound()) search_knn(far, q, acc);
  }

  void search_radius(int node_id, const Vector3& q, double r2,
                     std::vector<Neighbor>& out) const {
    const Node& node = nodes_[node_id];
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d2 = (pts_.row(idx).transpose() - q).squaredNorm();
        if (d2 <= r2) out.push_back({idx, d2});
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search_radius(near, q, r2, out);
    if (delta * delta <= r2) search_radius(far, q, r2, out);
  }

  Matrix3Xr pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = 0;
};

}  // namespace hybridseg
