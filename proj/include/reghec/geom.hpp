#pragma once

#include <Eigen/Core>
#include <vector>

namespace reghec::geom {

// Twist coordinates: head<3> is an so(3) log vector (radians), tail<3> is a
// translation (meters). Plain vector so iterates can be mixed affinely.
using Twist6 = Eigen::Matrix<double, 6, 1>;

// 3x3 rotation, orthonormal with det +1 within 1e-9 (checked on construction
// from a raw matrix; compositions and exponentials skip the check).
class RotationMatrix {
 public:
  RotationMatrix() : m_(Eigen::Matrix3d::Identity()) {}
  explicit RotationMatrix(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return m_; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return m_ * p; }
  RotationMatrix operator*(const RotationMatrix& o) const {
    return RotationMatrix(Unchecked{}, m_ * o.m_);
  }
  RotationMatrix transposed() const {
    return RotationMatrix(Unchecked{}, m_.transpose());
  }

  struct Unchecked {};
  RotationMatrix(Unchecked, const Eigen::Matrix3d& m) : m_(m) {}

 private:
  Eigen::Matrix3d m_;
};

struct RigidTransform {
  RotationMatrix r;
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return r * p + t; }
  RigidTransform operator*(const RigidTransform& o) const {
    return {r * o.r, r * o.t + t};
  }
  RigidTransform inverse() const {
    RotationMatrix rt = r.transposed();
    return {rt, -(rt * t)};
  }
  Eigen::Matrix4d matrix4() const;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Rodrigues formula; second-order series below angle 1e-8.
RotationMatrix so3_exp(const Eigen::Vector3d& v);

// Principal branch, norm in [0, pi]. Near pi the axis comes from the
// symmetric part; at pi the sign tie-break makes the largest-magnitude
// component positive.
Eigen::Vector3d so3_log(const RotationMatrix& r);

// Geodesic angle between two rotations, in [0, pi].
double rotation_angle(const RotationMatrix& a, const RotationMatrix& b);

// Rotation geodesic distance plus alpha_t^2 * translation distance.
double se3_distance(const Twist6& a, const Twist6& b, double alpha_t);

// Intrinsic (geodesic) mean; iterates R <- R exp(mean log(R^T R_i)) from the
// first element until the mean log-norm drops below 1e-10 (max 100 rounds).
RotationMatrix rotation_mean(const std::vector<RotationMatrix>& rs);

Twist6 pack(const RigidTransform& x);
RigidTransform unpack(const Twist6& u);

}  // namespace reghec::geom
