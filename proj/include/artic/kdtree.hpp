#pragma once

#include "artic/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace artic {

/// Exact nearest-neighbor index over a fixed set of 3D points. Axis-aligned
/// median splits, leaf buckets of 8. Read queries are safe to run
/// concurrently after construction.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(const std::vector<Vec3>& points) : points_(points) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!points_.empty()) {
      nodes_.reserve(points_.size() / 4 + 1);
      root_ = build(0, static_cast<int>(points_.size()));
    }
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  struct Result {
    int index = -1;
    double distance = std::numeric_limits<double>::infinity();
  };

  Result nearest(const Vec3& q) const {
    Result best;
    if (points_.empty()) return best;
    double best_sq = std::numeric_limits<double>::infinity();
    search(root_, q, best.index, best_sq);
    best.distance = std::sqrt(best_sq);
    return best;
  }

 private:
  struct Node {
    int axis = -1;       // -1 for leaf
    double split = 0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range in order_
  };

  static constexpr int kLeafSize = 8;

  int build(int begin, int end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    int left = build(begin, mid);
    int right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int node_id, const Vec3& q, int& best_index, double& best_sq) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const double d2 = (points_[order_[i]] - q).squaredNorm();
        if (d2 < best_sq) {
          best_sq = d2;
          best_index = order_[i];
        }
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    search(near, q, best_index, best_sq);
    if (delta * delta < best_sq) search(far, q, best_index, best_sq);
  }

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace artic
