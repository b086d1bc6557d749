#include "reghec/align.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "reghec/errors.hpp"

namespace reghec::align {

namespace {

constexpr double kConditionLimit = 1e12;

void check_inputs(const CorrespondenceSet& s, const std::vector<RigidTransform>& poses) {
  if (poses.size() < 2) throw std::invalid_argument("alignment: need at least 2 poses");
  if (s.items.empty()) throw std::invalid_argument("alignment: empty correspondence set");
  validate_set(s, poses.size() - 1);
}

// Per-motion constants of the residual: g = rot_i (R_X p + t_X) + t_i
//                                         - rot_i1 (R_X q + t_X) - t_i1.
struct MotionCache {
  Eigen::Matrix3d rot_i, rot_i1;
  Eigen::Vector3d off_i, off_i1;  // rot * t_X + t
};

std::vector<MotionCache> build_cache(const std::vector<RigidTransform>& poses,
                                     const RigidTransform& x) {
  std::vector<MotionCache> cache(poses.size() - 1);
  for (std::size_t m = 0; m + 1 < poses.size(); ++m) {
    cache[m].rot_i = poses[m].r.matrix();
    cache[m].rot_i1 = poses[m + 1].r.matrix();
    cache[m].off_i = cache[m].rot_i * x.t + poses[m].t;
    cache[m].off_i1 = cache[m].rot_i1 * x.t + poses[m + 1].t;
  }
  return cache;
}

}  // namespace

void validate_set(const CorrespondenceSet& s, std::size_t motion_count) {
  if (s.per_motion.size() != motion_count)
    throw std::invalid_argument("correspondence set: per_motion size mismatch");
  std::vector<std::size_t> tally(motion_count, 0);
  for (const auto& c : s.items) {
    if (c.motion < 0 || static_cast<std::size_t>(c.motion) >= motion_count)
      throw std::invalid_argument("correspondence set: motion index out of range");
    ++tally[static_cast<std::size_t>(c.motion)];
  }
  for (std::size_t m = 0; m < motion_count; ++m)
    if (tally[m] != s.per_motion[m])
      throw std::invalid_argument("correspondence set: per_motion tally mismatch");
}

Eigen::Vector3d residual(const RigidTransform& a_i, const RigidTransform& a_i1,
                         const RigidTransform& x, const Correspondence& c) {
  const Eigen::Matrix3d rx = x.r.matrix();
  return a_i.r.matrix() * (rx * c.p + x.t) + a_i.t -
         a_i1.r.matrix() * (rx * c.q + x.t) - a_i1.t;
}

Eigen::Matrix<double, 3, 6> jacobian(const RigidTransform& a_i,
                                     const RigidTransform& a_i1,
                                     const RigidTransform& x,
                                     const Correspondence& c) {
  Eigen::Matrix<double, 3, 6> j;
  const Eigen::Matrix3d rx = x.r.matrix();
  j.leftCols<3>() = -a_i.r.matrix() * geom::skew(rx * c.p) +
                    a_i1.r.matrix() * geom::skew(rx * c.q);
  j.rightCols<3>() = a_i.r.matrix() - a_i1.r.matrix();
  return j;
}

double alignment_objective(const CorrespondenceSet& s,
                           const std::vector<RigidTransform>& poses,
                           const RigidTransform& x) {
  check_inputs(s, poses);
  const auto cache = build_cache(poses, x);
  const Eigen::Matrix3d rx = x.r.matrix();
  double f = 0.0;
  for (const auto& c : s.items) {
    const MotionCache& mc = cache[static_cast<std::size_t>(c.motion)];
    const Eigen::Vector3d g =
        mc.rot_i * (rx * c.p) + mc.off_i - mc.rot_i1 * (rx * c.q) - mc.off_i1;
    f += g.squaredNorm();
  }
  return f;
}

Vector6d gauss_newton_step(const CorrespondenceSet& s,
                           const std::vector<RigidTransform>& poses,
                           const RigidTransform& x) {
  check_inputs(s, poses);
  const auto cache = build_cache(poses, x);
  const Eigen::Matrix3d rx = x.r.matrix();

  Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
  Vector6d b = Vector6d::Zero();
  Eigen::Matrix<double, 3, 6> j;
  for (const auto& c : s.items) {
    const MotionCache& mc = cache[static_cast<std::size_t>(c.motion)];
    const Eigen::Vector3d wp = rx * c.p;
    const Eigen::Vector3d wq = rx * c.q;
    const Eigen::Vector3d g = mc.rot_i * wp + mc.off_i - mc.rot_i1 * wq - mc.off_i1;
    j.leftCols<3>() = -mc.rot_i * geom::skew(wp) + mc.rot_i1 * geom::skew(wq);
    j.rightCols<3>() = mc.rot_i - mc.rot_i1;
    h.noalias() += j.transpose() * j;
    b.noalias() += j.transpose() * g;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(h);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kConditionLimit)
    throw DegenerateGeometryError(
        "normal matrix condition exceeds 1e12; motions do not determine the "
        "transform (single motion, pure translation, or parallel axes)");
  return Eigen::LLT<Eigen::Matrix<double, 6, 6>>(h).solve(-b);
}

RigidTransform apply_update(const RigidTransform& x, const Vector6d& dx) {
  return {geom::so3_exp(dx.head<3>()) * x.r, x.t + dx.tail<3>()};
}

RigidTransform single_step_alignment(const CorrespondenceSet& s,
                                     const std::vector<RigidTransform>& poses,
                                     const RigidTransform& x) {
  return apply_update(x, gauss_newton_step(s, poses, x));
}

AlignResult solve_alignment(const CorrespondenceSet& s,
                            const std::vector<RigidTransform>& poses,
                            const RigidTransform& x0, double xi, int max_iters) {
  if (!(xi > 0.0)) throw std::invalid_argument("solve_alignment: xi must be positive");
  AlignResult res;
  res.x = x0;
  double f = alignment_objective(s, poses, x0);
  res.objective.push_back(f);
  for (int it = 0; it < max_iters; ++it) {
    const Vector6d dx = gauss_newton_step(s, poses, res.x);
    if (dx.norm() < xi) {
      res.converged = true;
      return res;
    }
    // halve until the objective does not increase; a full step is the norm
    double scale = 1.0;
    RigidTransform cand;
    double f_cand = 0.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half, scale *= 0.5) {
      cand = apply_update(res.x, scale * dx);
      f_cand = alignment_objective(s, poses, cand);
      if (f_cand <= f) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return res;  // stalled at line-search resolution
    res.x = cand;
    f = f_cand;
    res.iterations = it + 1;
    res.objective.push_back(f);
  }
  return res;
}

}  // namespace reghec::align
