#include "reghec/reg.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "reghec/errors.hpp"

namespace reghec::reg {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ||f|| with the rotation block scaled; weight 1 is the plain norm.
double step_norm(const Twist6& f, double rot_weight) {
  if (rot_weight == 1.0) return f.norm();
  Twist6 s = f;
  s.head<3>() *= rot_weight;
  return s.norm();
}

struct Candidate {
  double dist;
  std::uint32_t motion;
  std::uint32_t src;  // index into the smaller cloud, for deterministic ties
  std::uint32_t p_idx, q_idx;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.dist != b.dist) return a.dist < b.dist;
  if (a.motion != b.motion) return a.motion < b.motion;
  return a.src < b.src;
}

std::size_t trim_count(double ratio, std::size_t total) {
  auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(total)));
  return std::min(std::max<std::size_t>(k, 1), total);
}

}  // namespace

void CalibrationProblem::validate() const {
  if (clouds.size() != poses.size())
    throw std::invalid_argument("calibration problem: clouds/poses size mismatch");
  if (clouds.size() < 3)
    throw std::invalid_argument("calibration problem: needs at least 3 views");
  for (std::size_t i = 0; i < clouds.size(); ++i)
    if (clouds[i].empty())
      throw std::invalid_argument("calibration problem: view " + std::to_string(i) +
                                  " is empty");
  if (!(trim_ratio > 0.0) || trim_ratio > 1.0)
    throw std::invalid_argument("calibration problem: trim_ratio outside (0,1]");
  if (!(epsilon > 0.0))
    throw std::invalid_argument("calibration problem: epsilon must be positive");
  if (history_len < 0)
    throw std::invalid_argument("calibration problem: history_len must be >= 0");
  if (coarse_subset_size < 1)
    throw std::invalid_argument("calibration problem: coarse_subset_size must be >= 1");
  if (!(f_norm_rot_weight > 0.0))
    throw std::invalid_argument("calibration problem: f_norm_rot_weight must be positive");
}

Matcher::Matcher(const CalibrationProblem& prob) : prob_(prob) {
  prob.validate();
  index_by_view_.resize(prob.views());
  plans_.reserve(prob.motions());
  for (std::size_t m = 0; m < prob.motions(); ++m) {
    const bool first_small = prob.clouds[m].size() <= prob.clouds[m + 1].size();
    MotionPlan plan;
    plan.small_view = first_small ? m : m + 1;
    plan.large_view = first_small ? m + 1 : m;
    plan.small_is_first = first_small;
    if (!index_by_view_[plan.large_view])
      index_by_view_[plan.large_view] =
          std::make_shared<cloud::NnIndex>(prob.clouds[plan.large_view]);
    plans_.push_back(plan);
  }
}

align::CorrespondenceSet Matcher::step(const Twist6& u) const {
  const RigidTransform x = geom::unpack(u);
  std::vector<Candidate> cands;
  std::size_t total = 0;
  for (const auto& plan : plans_) total += prob_.clouds[plan.small_view].size();
  cands.reserve(total);

  std::vector<std::size_t> motion_begin(plans_.size() + 1, 0);
  for (std::size_t m = 0; m < plans_.size(); ++m) {
    const auto& plan = plans_[m];
    // Matching in the larger cloud's sensor frame needs only the relative
    // transform, so the index over the raw cloud stays valid for every u.
    const RigidTransform rel = (prob_.poses[plan.large_view] * x).inverse() *
                               (prob_.poses[plan.small_view] * x);
    const auto& small = prob_.clouds[plan.small_view].points;
    const auto& index = *index_by_view_[plan.large_view];
    motion_begin[m] = cands.size();
    for (std::size_t s = 0; s < small.size(); ++s) {
      auto [nn, d2] = index.nearest_sq(rel * small[s]);
      Candidate c;
      c.dist = std::sqrt(d2);
      c.motion = static_cast<std::uint32_t>(m);
      c.src = static_cast<std::uint32_t>(s);
      if (plan.small_is_first) {
        c.p_idx = c.src;
        c.q_idx = static_cast<std::uint32_t>(nn);
      } else {
        c.p_idx = static_cast<std::uint32_t>(nn);
        c.q_idx = c.src;
      }
      cands.push_back(c);
    }
    if (cands.size() == motion_begin[m])
      throw InvalidStateError("correspondence_step: view pair " + std::to_string(m) +
                              " has no candidates");
  }
  motion_begin[plans_.size()] = cands.size();

  align::CorrespondenceSet out;
  out.per_motion.assign(plans_.size(), 0);
  auto emit = [&](const Candidate& c) {
    align::Correspondence item;
    item.p = prob_.clouds[c.motion].points[c.p_idx];
    item.q = prob_.clouds[c.motion + 1].points[c.q_idx];
    item.motion = static_cast<int>(c.motion);
    out.items.push_back(item);
    ++out.per_motion[c.motion];
  };

  if (prob_.per_pair_trim) {
    for (std::size_t m = 0; m < plans_.size(); ++m) {
      auto begin = cands.begin() + static_cast<std::ptrdiff_t>(motion_begin[m]);
      auto end = cands.begin() + static_cast<std::ptrdiff_t>(motion_begin[m + 1]);
      std::sort(begin, end, candidate_less);
      auto keep = trim_count(prob_.trim_ratio, static_cast<std::size_t>(end - begin));
      for (auto it = begin; it != begin + static_cast<std::ptrdiff_t>(keep); ++it)
        emit(*it);
    }
  } else {
    std::sort(cands.begin(), cands.end(), candidate_less);
    auto keep = trim_count(prob_.trim_ratio, cands.size());
    out.items.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) emit(cands[i]);
  }
  return out;
}

double Matcher::error(const Twist6& u) const {
  return mse(prob_, u, step(u));
}

align::CorrespondenceSet correspondence_step(const CalibrationProblem& prob,
                                             const Twist6& u) {
  return Matcher(prob).step(u);
}

double mse(const CalibrationProblem& prob, const Twist6& u,
           const align::CorrespondenceSet& s) {
  if (s.items.empty()) throw std::invalid_argument("mse: empty correspondence set");
  return align::alignment_objective(s, prob.poses, geom::unpack(u)) /
         static_cast<double>(s.items.size());
}

Twist6 g_call(const CalibrationProblem& prob, const Twist6& u) {
  const auto s = correspondence_step(prob, u);
  return geom::pack(align::single_step_alignment(s, prob.poses, geom::unpack(u)));
}

Eigen::VectorXd anderson_coefficients(const std::vector<Twist6>& f_hist) {
  if (f_hist.empty())
    throw std::invalid_argument("anderson_coefficients: empty history");
  const auto m = static_cast<Eigen::Index>(f_hist.size()) - 1;
  Eigen::VectorXd alpha(m + 1);
  if (m == 0) {
    alpha[0] = 1.0;
    return alpha;
  }
  // Eliminate the sum-to-one constraint: minimize ||f_m + D b|| over the
  // first m weights, with D's columns the history differences f_i - f_m.
  Eigen::Matrix<double, 6, Eigen::Dynamic> d(6, m);
  for (Eigen::Index i = 0; i < m; ++i)
    d.col(i) = f_hist[static_cast<std::size_t>(i)] - f_hist.back();
  Eigen::MatrixXd lhs = d.transpose() * d;
  lhs.diagonal().array() += 1e-10;
  const Eigen::VectorXd b = lhs.ldlt().solve(-d.transpose() * f_hist.back());
  alpha.head(m) = b;
  alpha[m] = 1.0 - b.sum();
  return alpha;
}

Twist6 anderson_step(const std::vector<Twist6>& g_hist,
                     const Eigen::VectorXd& alpha) {
  if (g_hist.empty() ||
      static_cast<Eigen::Index>(g_hist.size()) != alpha.size())
    throw std::invalid_argument("anderson_step: history/coefficient size mismatch");
  if (std::abs(alpha.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("anderson_step: coefficients must sum to 1");
  Twist6 u = Twist6::Zero();
  for (std::size_t i = 0; i < g_hist.size(); ++i)
    u += alpha[static_cast<Eigen::Index>(i)] * g_hist[i];
  return u;
}

RegResult run_aa_icpv(const CalibrationProblem& prob, const Twist6& u0,
                      int max_iters) {
  if (max_iters < 1) throw std::invalid_argument("run_aa_icpv: max_iters must be >= 1");
  const auto t0 = Clock::now();
  const Matcher matcher(prob);
  RegResult res;
  AaState st;

  st.u_seq.push_back(u0);
  const auto s0 = matcher.step(u0);
  // The error of the start is recorded but deliberately not fed into e_prev:
  // the first safeguard comparison must accept iterate one unconditionally.
  const double e0 = mse(prob, u0, s0);
  res.mse_history.push_back(e0);
  const Twist6 g0 =
      geom::pack(align::single_step_alignment(s0, prob.poses, geom::unpack(u0)));
  res.g_calls = 1;
  st.g_seq.push_back(g0);
  st.f_seq.push_back(g0 - u0);
  st.u_seq.push_back(g0);

  Twist6 final_u = u0;
  Twist6 best_u = u0;
  double best_e = e0;
  int k = 1;
  while (k <= max_iters) {
    const auto s = matcher.step(st.u_seq[static_cast<std::size_t>(k)]);
    const double e = mse(prob, st.u_seq[static_cast<std::size_t>(k)], s);
    if (e > st.e_prev) {
      // Accelerated iterate made things worse: fall back to the plain map
      // output and restart the mixing window from here.
      st.u_seq[static_cast<std::size_t>(k)] = st.g_seq[static_cast<std::size_t>(k - 1)];
      st.k_start = k - 1;
      st.e_prev = std::numeric_limits<double>::infinity();
      continue;
    }
    st.e_prev = e;
    res.mse_history.push_back(e);
    res.iterations = k;
    if (e < best_e) {
      best_e = e;
      best_u = st.u_seq[static_cast<std::size_t>(k)];
    }
    const Twist6 gk = geom::pack(align::single_step_alignment(
        s, prob.poses, geom::unpack(st.u_seq[static_cast<std::size_t>(k)])));
    ++res.g_calls;
    st.g_seq.push_back(gk);
    st.f_seq.push_back(gk - st.u_seq[static_cast<std::size_t>(k)]);
    if (step_norm(st.f_seq.back(), prob.f_norm_rot_weight) < prob.epsilon) {
      final_u = gk;
      res.converged = true;
      break;
    }
    const int m = std::min(k - st.k_start, prob.history_len);
    const std::vector<Twist6> fh(st.f_seq.end() - (m + 1), st.f_seq.end());
    const std::vector<Twist6> gh(st.g_seq.end() - (m + 1), st.g_seq.end());
    st.u_seq.push_back(anderson_step(gh, anderson_coefficients(fh)));
    ++k;
  }
  if (!res.converged) final_u = best_u;
  res.x = geom::unpack(final_u);
  res.elapsed = seconds_since(t0);
  return res;
}

RegResult run_plain_icpv(const CalibrationProblem& prob, const Twist6& u0,
                         int max_iters) {
  if (max_iters < 1)
    throw std::invalid_argument("run_plain_icpv: max_iters must be >= 1");
  const auto t0 = Clock::now();
  const Matcher matcher(prob);
  RegResult res;
  Twist6 u = u0;
  for (int k = 1; k <= max_iters; ++k) {
    const auto s = matcher.step(u);
    res.mse_history.push_back(mse(prob, u, s));
    const Twist6 u_next =
        geom::pack(align::single_step_alignment(s, prob.poses, geom::unpack(u)));
    ++res.g_calls;
    res.iterations = k;
    const bool done = step_norm(u_next - u, prob.f_norm_rot_weight) < prob.epsilon;
    u = u_next;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.x = geom::unpack(u);
  res.elapsed = seconds_since(t0);
  return res;
}

}  // namespace reghec::reg
