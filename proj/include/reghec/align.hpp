#pragma once

#include <Eigen/Core>
#include <vector>

#include "reghec/geom.hpp"

namespace reghec::align {

using geom::RigidTransform;
using Vector6d = Eigen::Matrix<double, 6, 1>;

// One matched pair: p in the sensor frame at pose m, q in the sensor frame
// at pose m+1. Motion indices are 0-based: motion m relates poses[m] and
// poses[m+1].
struct Correspondence {
  Eigen::Vector3d p;
  Eigen::Vector3d q;
  int motion = 0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> items;
  std::vector<std::size_t> per_motion;  // tally of items per motion index
};

// Throws invalid_argument unless every motion index is within
// [0, motion_count) and per_motion tallies the items exactly.
void validate_set(const CorrespondenceSet& s, std::size_t motion_count);

// Difference of the two base-frame images of a matched pair.
Eigen::Vector3d residual(const RigidTransform& a_i, const RigidTransform& a_i1,
                         const RigidTransform& x, const Correspondence& c);

// Derivative of the residual w.r.t. a left rotation perturbation and a
// translation shift, evaluated at zero perturbation. Columns 0-2 rotation,
// 3-5 translation.
Eigen::Matrix<double, 3, 6> jacobian(const RigidTransform& a_i,
                                     const RigidTransform& a_i1,
                                     const RigidTransform& x,
                                     const Correspondence& c);

// Sum of squared residuals over the set.
double alignment_objective(const CorrespondenceSet& s,
                           const std::vector<RigidTransform>& poses,
                           const RigidTransform& x);

// Solves (sum J^T J) dx = -(sum J^T g). Throws DegenerateGeometryError when
// the normal matrix's eigenvalue ratio exceeds 1e12 (insufficient or
// degenerate motion).
Vector6d gauss_newton_step(const CorrespondenceSet& s,
                           const std::vector<RigidTransform>& poses,
                           const RigidTransform& x);

// R <- exp(dphi) R, t <- t + dt. Perturbations always re-linearized at zero.
RigidTransform apply_update(const RigidTransform& x, const Vector6d& dx);

// One raw Gauss-Newton step plus update; no acceptance test.
RigidTransform single_step_alignment(const CorrespondenceSet& s,
                                     const std::vector<RigidTransform>& poses,
                                     const RigidTransform& x);

struct AlignResult {
  RigidTransform x;
  bool converged = false;
  int iterations = 0;                  // applied updates
  std::vector<double> objective;       // initial value, then after each update
};

// Iterates Gauss-Newton with step halving so the objective never increases;
// stops when the proposed step norm drops below xi.
AlignResult solve_alignment(const CorrespondenceSet& s,
                            const std::vector<RigidTransform>& poses,
                            const RigidTransform& x0, double xi = 1e-10,
                            int max_iters = 50);

}  // namespace reghec::align
