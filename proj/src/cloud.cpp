#include "reghec/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "reghec/errors.hpp"
#include "reghec/rng.hpp"

namespace reghec::cloud {

PointCloud transform(const PointCloud& c, const geom::RigidTransform& t) {
  PointCloud out;
  out.view = c.view;
  out.points.reserve(c.points.size());
  for (const auto& p : c.points) out.points.push_back(t * p);
  return out;
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t v : {static_cast<std::uint64_t>(k.x),
                            static_cast<std::uint64_t>(k.y),
                            static_cast<std::uint64_t>(k.z)}) {
      h ^= v;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PointCloud voxel_downsample(const PointCloud& c, double leaf) {
  if (!(leaf > 0.0)) throw std::invalid_argument("voxel_downsample: leaf must be positive");
  struct Acc {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::size_t n = 0;
  };
  std::unordered_map<VoxelKey, Acc, VoxelKeyHash> grid;
  grid.reserve(c.points.size());
  for (const auto& p : c.points) {
    VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / leaf)),
                 static_cast<std::int64_t>(std::floor(p.y() / leaf)),
                 static_cast<std::int64_t>(std::floor(p.z() / leaf))};
    auto& acc = grid[key];
    acc.sum += p;
    acc.n += 1;
  }
  std::vector<std::pair<VoxelKey, Acc>> cells(grid.begin(), grid.end());
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.x, a.first.y, a.first.z) <
           std::tie(b.first.x, b.first.y, b.first.z);
  });
  PointCloud out;
  out.view = c.view;
  out.points.reserve(cells.size());
  for (const auto& [key, acc] : cells)
    out.points.push_back(acc.sum / static_cast<double>(acc.n));
  return out;
}

PointCloud random_subsample(const PointCloud& c, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("random_subsample: k must be >= 1");
  if (k >= c.points.size()) return c;
  std::vector<std::uint32_t> idx(c.points.size());
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  PointCloud out;
  out.view = c.view;
  out.points.reserve(k);
  for (auto i : idx) out.points.push_back(c.points[i]);
  return out;
}

NnIndex::NnIndex(const PointCloud& c) : pts_(c.points) {
  if (pts_.empty()) throw InvalidStateError("nn index: empty cloud");
  order_.resize(pts_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * pts_.size() / 8 + 1);
  root_ = build(0, static_cast<std::uint32_t>(pts_.size()));
}

std::int32_t NnIndex::build(std::uint32_t begin, std::uint32_t end) {
  constexpr std::uint32_t kLeafSize = 16;
  Node node{};
  node.begin = begin;
  node.end = end;
  if (end - begin <= kLeafSize) {
    node.axis = -1;
    node.left = node.right = -1;
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }
  Eigen::Vector3d lo = pts_[order_[begin]], hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(pts_[order_[i]]);
    hi = hi.cwiseMax(pts_[order_[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = pts_[a][axis], pb = pts_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  node.axis = axis;
  node.split = pts_[order_[mid]][axis];
  const auto self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

void NnIndex::search(std::int32_t ni, const Eigen::Vector3d& q, double& best_d2,
                     std::size_t& best_idx) const {
  const Node& node = nodes_[ni];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = (pts_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, best_d2, best_idx);
  // <= keeps equally distant points reachable so the index tie-break holds
  if (diff * diff <= best_d2) search(far, q, best_d2, best_idx);
}

std::pair<std::size_t, double> NnIndex::nearest_sq(const Eigen::Vector3d& q) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_idx = pts_.size();
  search(root_, q, best_d2, best_idx);
  return {best_idx, best_d2};
}

std::pair<std::size_t, double> nearest(const NnIndex& idx, const Eigen::Vector3d& q) {
  auto [i, d2] = idx.nearest_sq(q);
  return {i, std::sqrt(d2)};
}

}  // namespace reghec::cloud
