#pragma once

#include <Eigen/Core>
#include <limits>
#include <memory>
#include <vector>

#include "reghec/align.hpp"
#include "reghec/cloud.hpp"
#include "reghec/geom.hpp"

namespace reghec::reg {

using geom::RigidTransform;
using geom::Twist6;

enum class Mode { eye_in_hand, eye_to_hand };

struct CalibrationProblem {
  std::vector<cloud::PointCloud> clouds;  // sensor frame, one per view
  std::vector<RigidTransform> poses;      // flange-in-base; already inverted for eye_to_hand
  Mode mode = Mode::eye_in_hand;
  double trim_ratio = 0.9;       // fraction of pooled candidate pairs kept
  double epsilon = 1e-4;         // fixed-point convergence threshold on ||f||
  int history_len = 4;           // acceleration window l; 0 disables acceleration
  int coarse_subset_size = 2000; // per-cloud subset for the coarse error surface
  bool per_pair_trim = false;    // trim within each motion instead of the global pool
  double f_norm_rot_weight = 1.0;  // weight on the rotation part of ||f||; 1 = plain norm

  std::size_t views() const { return clouds.size(); }
  std::size_t motions() const { return clouds.empty() ? 0 : clouds.size() - 1; }
  void validate() const;  // throws invalid_argument
};

struct RegResult {
  RigidTransform x;
  bool converged = false;
  int iterations = 0;
  int g_calls = 0;
  std::vector<double> mse_history;  // error at each accepted iterate
  double elapsed = 0.0;             // seconds
};

// Bookkeeping of the accelerated fixed-point run: iterates u^k, map outputs
// g^k, residuals f^k = g^k - u^k, the restart marker and last accepted error.
struct AaState {
  std::vector<Twist6> u_seq;
  std::vector<Twist6> g_seq;
  std::vector<Twist6> f_seq;
  int k_start = 0;
  double e_prev = std::numeric_limits<double>::infinity();
};

// Matches every point of the smaller cloud of each adjacent pair to its
// nearest neighbor in the larger, pools candidates over all motions, sorts
// by distance ascending and keeps ceil(trim_ratio * total). p, q stay in
// their original sensor frames.
align::CorrespondenceSet correspondence_step(const CalibrationProblem& prob,
                                             const Twist6& u);

// Mean squared residual norm of s at u.
double mse(const CalibrationProblem& prob, const Twist6& u,
           const align::CorrespondenceSet& s);

// One correspondence step followed by one Gauss-Newton alignment step.
Twist6 g_call(const CalibrationProblem& prob, const Twist6& u);

// Mixing weights for the residual history (oldest first, newest last).
// Unconstrained least squares after eliminating the sum-to-one constraint;
// Tikhonov 1e-10 keeps rank-deficient histories solvable.
Eigen::VectorXd anderson_coefficients(const std::vector<Twist6>& f_hist);

// Affine combination of map outputs; coefficients must sum to 1 within 1e-9.
Twist6 anderson_step(const std::vector<Twist6>& g_hist,
                     const Eigen::VectorXd& alpha);

RegResult run_aa_icpv(const CalibrationProblem& prob, const Twist6& u0,
                      int max_iters = 100);
RegResult run_plain_icpv(const CalibrationProblem& prob, const Twist6& u0,
                         int max_iters = 100);

// Shared machinery for repeated correspondence queries on one problem:
// nearest-neighbor indexes are built once over the raw clouds and queries
// are mapped through the relative transform of each motion.
class Matcher {
 public:
  explicit Matcher(const CalibrationProblem& prob);

  align::CorrespondenceSet step(const Twist6& u) const;
  double error(const Twist6& u) const;  // mse of step(u)

 private:
  const CalibrationProblem& prob_;
  struct MotionPlan {
    std::size_t small_view, large_view;
    bool small_is_first;  // smaller cloud belongs to the earlier pose
  };
  std::vector<MotionPlan> plans_;
  std::vector<std::shared_ptr<cloud::NnIndex>> index_by_view_;
};

}  // namespace reghec::reg
