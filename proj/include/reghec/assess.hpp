#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "reghec/geom.hpp"

namespace reghec::assess {

// One repeated measurement of a pose.
struct PoseSample {
  geom::RotationMatrix r;
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

// Spread of the rotations about their intrinsic mean: root mean squared
// geodesic deviation, in degrees. Needs at least two samples.
double err_rotation(const std::vector<PoseSample>& samples);

// Root mean squared deviation of the translations about their arithmetic
// mean, in millimeters. Needs at least two samples.
double err_translation(const std::vector<PoseSample>& samples);

// (geodesic angle in degrees, translation gap in millimeters).
std::pair<double, double> compare_to_ground_truth(const geom::RigidTransform& x_est,
                                                  const geom::RigidTransform& x_gt);

}  // namespace reghec::assess
