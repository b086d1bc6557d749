#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "reghec/geom.hpp"

namespace reghec::cloud {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  int view = -1;  // source-view index, -1 when not tied to a view

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// ASCII PLY with float/double x,y,z vertex properties; other properties are
// ignored, non-vertex elements are skipped. Parse failures carry the path
// and 1-based line number.
PointCloud load_cloud(const std::string& path);

// ASCII PLY, coordinates printed with 17 significant digits so that
// save/load round-trips exactly.
void save_cloud(const PointCloud& c, const std::string& path);

PointCloud transform(const PointCloud& c, const geom::RigidTransform& t);

// One centroid per occupied voxel; voxel of p is floor(p/leaf) per axis,
// output ordered by voxel key (lexicographic).
PointCloud voxel_downsample(const PointCloud& c, double leaf);

// min(k, size) points without replacement; output keeps input order.
PointCloud random_subsample(const PointCloud& c, std::size_t k, std::uint64_t seed);

// k-d tree over a snapshot of one cloud; queries match an exhaustive scan
// exactly, distance ties broken by lowest point index.
class NnIndex {
 public:
  explicit NnIndex(const PointCloud& c);

  std::size_t size() const { return pts_.size(); }
  const Eigen::Vector3d& point(std::size_t i) const { return pts_[i]; }

  // (point index, squared distance)
  std::pair<std::size_t, double> nearest_sq(const Eigen::Vector3d& q) const;

 private:
  struct Node {
    double split;
    int axis;        // -1 marks a leaf
    std::int32_t left, right;
    std::uint32_t begin, end;  // leaf range into order_
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Eigen::Vector3d& q, double& best_d2,
              std::size_t& best_idx) const;

  std::vector<Eigen::Vector3d> pts_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

// (point index, Euclidean distance)
std::pair<std::size_t, double> nearest(const NnIndex& idx, const Eigen::Vector3d& q);

}  // namespace reghec::cloud
