#pragma once

#include <vector>

#include "gsfield/core/types.hpp"

namespace gsf {

/// Static 3-d kd-tree for nearest-neighbor lookups on a point cloud.
class KdTree3 {
 public:
  struct Hit {
    int index = -1;
    double distance = 0.0;
  };

  /// Builds the tree by recursive median splits. Throws on an empty cloud.
  explicit KdTree3(std::vector<Vec3> points);

  Hit nearest(const Vec3& query) const;
  size_t size() const { return points_.size(); }

 private:
  struct Node {
    int point = -1;  // index into points_
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& order, int lo, int hi, int depth);
  void search(int node, const Vec3& query, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Exhaustive oracle with the same tie behavior guarantees on distance (the
/// returned index may differ between equidistant points).
KdTree3::Hit brute_force_nearest(const std::vector<Vec3>& points, const Vec3& query);

}  // namespace gsf
