#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "reghec/geom.hpp"
#include "reghec/reg.hpp"
#include "reghec/rng.hpp"

namespace reghec::boia {

using geom::Twist6;

// Axis-aligned region of twist space searched during initial alignment.
// Default rotation bounds are the smallest cube enclosing every rotation
// log; default translation bounds are +-0.1 m per axis.
struct SearchBox {
  Twist6 lower;
  Twist6 upper;

  SearchBox();
  void validate() const;  // throws invalid_argument unless lower < upper
  bool contains(const Twist6& u) const;
  Twist6 clamp(const Twist6& u) const;
  Twist6 sample(Rng& rng) const;  // one uniform draw per coordinate, in order
};

struct GpHyper {
  double sigma = 1.0;    // signal standard deviation
  double ell = 1.0;      // length scale
  double alpha_t = 1.0;  // exchange rate from meters into the rotation metric
  void validate() const;  // throws invalid_argument unless all positive
};

// Covariance switch. se3 is the working kernel; the others treat the twist
// as a plain 6-vector and exist only as comparison baselines.
enum class KernelKind { se3, squared_exp, squared_exp_ard, matern52 };

// sigma^2 * exp(-d / (2 ell^2)) with d the rotation geodesic plus
// alpha_t^2 times the translation gap. Antipodal rotation logs of one
// rotation give the same value; d enters unsquared by design.
double kernel_se3(const Twist6& u1, const Twist6& u2, const GpHyper& hyper);
double kernel_value(KernelKind kind, const Twist6& u1, const Twist6& u2,
                    const GpHyper& hyper);

// Gaussian-process posterior over the coarse registration error surface.
// Immutable: adding a sample or changing hyperparameters means building a
// new model, which factorizes the jittered gram matrix once; queries then
// cost one triangular solve. The prior mean is the mean of observed values.
class GpModel {
 public:
  GpModel(std::vector<Twist6> samples, std::vector<double> values,
          const GpHyper& hyper, KernelKind kind = KernelKind::se3);

  const std::vector<Twist6>& samples() const { return samples_; }
  const std::vector<double>& values() const { return values_; }
  const GpHyper& hyper() const { return hyper_; }
  KernelKind kind() const { return kind_; }
  std::size_t size() const { return samples_.size(); }
  double prior_mean() const { return prior_mean_; }
  double best_value() const { return best_value_; }  // minimum observed
  const Twist6& best_sample() const { return samples_[best_index_]; }

  // Covariances between u and every sample.
  Eigen::VectorXd kernel_column(const Twist6& u) const;
  // Cached (K + jitter I)^-1 (values - prior_mean).
  const Eigen::VectorXd& centered_weights() const { return weights_; }
  // k^T (K + jitter I)^-1 k via one forward substitution.
  double gram_quad_form(const Eigen::VectorXd& k) const;
  double log_det_gram() const { return log_det_; }

 private:
  std::vector<Twist6> samples_;
  std::vector<double> values_;
  GpHyper hyper_;
  KernelKind kind_;
  std::vector<geom::RotationMatrix> rots_;  // sample rotations, se3 kernel only
  double prior_mean_ = 0.0;
  double best_value_ = 0.0;
  std::size_t best_index_ = 0;
  double log_det_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
};

// Posterior (mean, variance) at u; variance clamped at zero from below.
std::pair<double, double> gp_posterior(const GpModel& model, const Twist6& u);

// Expected improvement below e_best for minimization, in closed form:
// (e_best - mean) Phi(z) + sigma phi(z), z = (e_best - mean) / sigma.
// Zero when the variance is zero.
double expected_improvement(double mean, double variance, double e_best);
double expected_improvement(const GpModel& model, const Twist6& u);

// Acquisition maximization: the model's best sample plus `budget` uniform
// seeds in the box, each refined by compass coordinate search (per-coordinate
// step halved on failure) until every step is below 1e-4; returns the best
// refined point. Deterministic.
Twist6 maximize_ei(const GpModel& model, const SearchBox& box,
                   int budget = 200, std::uint64_t seed = 0);

// Log marginal likelihood of the model's own data under its own
// hyperparameters: -(r^T (K+jI)^-1 r + log|K+jI| + n log 2 pi) / 2.
double log_marginal_likelihood(const GpModel& model);

// MLE refit over (sigma, ell, alpha_t) in log space within fixed bounds,
// multi-start coordinate search from the incumbent plus four spread starts.
// Returns the incumbent when nothing improves; if every candidate fails to
// factorize, keeps the incumbent and warns on stderr. Needs >= 2 samples.
GpHyper optimize_hyperparams(const GpModel& model);

// The problem with every cloud independently subsampled down to
// coarse_subset_size points; subsample streams derive from `seed` by view.
reg::CalibrationProblem coarse_problem(const reg::CalibrationProblem& prob,
                                       std::uint64_t seed);

// Global initial alignment: n0 error samples at box points drawn from a
// stream derived from `seed`, then acquisition-driven sampling up to
// n_total with a hyperparameter refit before the first acquisition and
// every refit_period samples after; errors are evaluated on the coarse
// problem. Returns the sampled twist with the best observed error (the
// earliest in case of ties). n_total = n0 degenerates to random search.
// Iterations whose posterior stops factorizing retry with the default
// hyperparameters and then fall back to one random draw, deterministically.
Twist6 run_bo_ia(const reg::CalibrationProblem& prob, const SearchBox& box,
                 int n0 = 50, int n_total = 100, int refit_period = 10,
                 std::uint64_t seed = 0, int ei_budget = 200,
                 KernelKind kind = KernelKind::se3);

}  // namespace reghec::boia
