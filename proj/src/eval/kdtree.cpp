#include "gsfield/eval/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gsf {

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("kd-tree: empty point cloud");
  std::vector<int> order(points_.size());
  std::iota(order.begin(), order.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(order, 0, int(points_.size()), 0);
}

int KdTree3::build(std::vector<int>& order, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = lo + (hi - lo) / 2;
  std::nth_element(order.begin() + lo, order.begin() + mid, order.begin() + hi,
                   [&](int a, int b) {
                     if (points_[a](axis) != points_[b](axis))
                       return points_[a](axis) < points_[b](axis);
                     return a < b;  // deterministic layout for duplicate coordinates
                   });
  const int node = int(nodes_.size());
  nodes_.push_back({order[mid], axis, -1, -1});
  nodes_[node].left = build(order, lo, mid, depth + 1);
  nodes_[node].right = build(order, mid + 1, hi, depth + 1);
  return node;
}

void KdTree3::search(int node, const Vec3& query, Hit& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];
  const double d = (p - query).norm();
  if (d < best.distance || (d == best.distance && n.point < best.index)) {
    best.distance = d;
    best.index = n.point;
  }
  const double delta = query(n.axis) - p(n.axis);
  const int first = delta < 0.0 ? n.left : n.right;
  const int second = delta < 0.0 ? n.right : n.left;
  search(first, query, best);
  if (std::abs(delta) <= best.distance) search(second, query, best);
}

KdTree3::Hit KdTree3::nearest(const Vec3& query) const {
  Hit best;
  best.distance = std::numeric_limits<double>::infinity();
  search(root_, query, best);
  return best;
}

KdTree3::Hit brute_force_nearest(const std::vector<Vec3>& points, const Vec3& query) {
  if (points.empty()) throw std::invalid_argument("nearest neighbor: empty point cloud");
  KdTree3::Hit best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < int(points.size()); ++i) {
    const double d = (points[i] - query).norm();
    if (d < best.distance) {
      best.distance = d;
      best.index = i;
    }
  }
  return best;
}

}  // namespace gsf
