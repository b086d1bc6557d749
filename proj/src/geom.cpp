#include "reghec/geom.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reghec::geom {

namespace {

constexpr double kSmallAngle = 1e-8;
constexpr double kNearPi = M_PI - 1e-6;

Eigen::Vector3d vee_antisym(const Eigen::Matrix3d& m) {
  // (m - m^T)/2 is assumed antisymmetric up to rounding
  return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)),
          0.5 * (m(1, 0) - m(0, 1))};
}

}  // namespace

RotationMatrix::RotationMatrix(const Eigen::Matrix3d& m) : m_(m) {
  if (!m.allFinite()) throw std::invalid_argument("rotation: non-finite entries");
  Eigen::Matrix3d gram = m.transpose() * m - Eigen::Matrix3d::Identity();
  if (gram.cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("rotation: not orthonormal within 1e-9");
  if (std::abs(m.determinant() - 1.0) > 1e-9)
    throw std::invalid_argument("rotation: determinant not +1 within 1e-9");
}

Eigen::Matrix4d RigidTransform::matrix4() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r.matrix();
  m.topRightCorner<3, 1>() = t;
  return m;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

RotationMatrix so3_exp(const Eigen::Vector3d& v) {
  if (!v.allFinite()) throw std::invalid_argument("so3_exp: non-finite input");
  const double theta = v.norm();
  const Eigen::Matrix3d w = skew(v);
  Eigen::Matrix3d m;
  if (theta < kSmallAngle) {
    m = Eigen::Matrix3d::Identity() + w + 0.5 * (w * w);
  } else {
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    m = Eigen::Matrix3d::Identity() + a * w + b * (w * w);
  }
  return RotationMatrix(RotationMatrix::Unchecked{}, m);
}

Eigen::Vector3d so3_log(const RotationMatrix& r) {
  const Eigen::Matrix3d& m = r.matrix();
  const Eigen::Vector3d w = vee_antisym(m);  // = sin(theta) * axis
  const double theta = std::atan2(w.norm(), 0.5 * (m.trace() - 1.0));

  if (theta < kSmallAngle) return w;  // log ~ w to second order

  if (theta > kNearPi) {
    // sin(theta) too small to trust w alone; (m + m^T)/2 - cos(theta) I
    // = (1 - cos(theta)) a a^T gives the axis up to sign.
    Eigen::Matrix3d b =
        0.5 * (m + m.transpose()) - std::cos(theta) * Eigen::Matrix3d::Identity();
    int k;
    b.diagonal().maxCoeff(&k);
    Eigen::Vector3d axis = b.col(k).normalized();
    const double s = w.dot(axis);  // = +-sin(theta)
    if (std::abs(s) > 1e-9) {
      if (s < 0) axis = -axis;
    } else {
      // theta = pi within noise; both signs valid, pick one deterministically
      int j;
      axis.cwiseAbs().maxCoeff(&j);
      if (axis[j] < 0) axis = -axis;
    }
    return theta * axis;
  }

  return (theta / std::sin(theta)) * w;
}

double rotation_angle(const RotationMatrix& a, const RotationMatrix& b) {
  // atan2 of (|sin|, cos) stays accurate where acos of the trace floors out
  const Eigen::Matrix3d p = a.matrix().transpose() * b.matrix();
  return std::atan2(vee_antisym(p).norm(), 0.5 * (p.trace() - 1.0));
}

double se3_distance(const Twist6& a, const Twist6& b, double alpha_t) {
  if (!(alpha_t > 0.0)) throw std::invalid_argument("se3_distance: alpha_t must be positive");
  if (!a.allFinite() || !b.allFinite())
    throw std::invalid_argument("se3_distance: non-finite twist");
  const double rot = rotation_angle(so3_exp(a.head<3>()), so3_exp(b.head<3>()));
  return rot + alpha_t * alpha_t * (a.tail<3>() - b.tail<3>()).norm();
}

RotationMatrix rotation_mean(const std::vector<RotationMatrix>& rs) {
  if (rs.empty()) throw std::invalid_argument("rotation_mean: empty input");
  RotationMatrix mean = rs.front();
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::Vector3d avg = Eigen::Vector3d::Zero();
    for (const auto& r : rs) avg += so3_log(mean.transposed() * r);
    avg /= static_cast<double>(rs.size());
    if (avg.norm() < 1e-10) break;
    mean = mean * so3_exp(avg);
  }
  return mean;
}

Twist6 pack(const RigidTransform& x) {
  Twist6 u;
  u.head<3>() = so3_log(x.r);
  u.tail<3>() = x.t;
  return u;
}

RigidTransform unpack(const Twist6& u) {
  return {so3_exp(u.head<3>()), u.tail<3>()};
}

}  // namespace reghec::geom
