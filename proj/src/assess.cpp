#include "reghec/assess.hpp"

#include <cmath>
#include <stdexcept>

namespace reghec::assess {

namespace {
constexpr double kDegPerRad = 57.295779513082320877;
}

double err_rotation(const std::vector<PoseSample>& samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("err_rotation: needs at least two samples");
  std::vector<geom::RotationMatrix> rs;
  rs.reserve(samples.size());
  for (const auto& s : samples) rs.push_back(s.r);
  const geom::RotationMatrix mean = geom::rotation_mean(rs);
  double acc = 0.0;
  for (const auto& s : samples)
    acc += geom::so3_log(s.r.transposed() * mean).squaredNorm();
  return std::sqrt(acc / static_cast<double>(samples.size())) * kDegPerRad;
}

double err_translation(const std::vector<PoseSample>& samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("err_translation: needs at least two samples");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& s : samples) mean += s.t;
  mean /= static_cast<double>(samples.size());
  double acc = 0.0;
  for (const auto& s : samples) acc += (s.t - mean).squaredNorm();
  return std::sqrt(acc / static_cast<double>(samples.size())) * 1000.0;
}

std::pair<double, double> compare_to_ground_truth(const geom::RigidTransform& x_est,
                                                  const geom::RigidTransform& x_gt) {
  const double angle =
      geom::so3_log(x_gt.r.transposed() * x_est.r).norm() * kDegPerRad;
  const double dist = (x_est.t - x_gt.t).norm() * 1000.0;
  return {angle, dist};
}

}  // namespace reghec::assess
