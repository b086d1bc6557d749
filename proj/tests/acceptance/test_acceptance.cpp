// End-to-end acceptance checks. Each test case prints one summary line
// "criterion NN PASS/FAIL ..." with the measured numbers and the pinned
// tolerances, then asserts. Tolerances live in the constants below and in
// the fixture caps; nothing here reads configuration from outside.
#include "doctest.h"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "reghec/align.hpp"
#include "reghec/assess.hpp"
#include "reghec/boia.hpp"
#include "reghec/cli.hpp"
#include "reghec/cloud.hpp"
#include "reghec/errors.hpp"
#include "reghec/geom.hpp"
#include "reghec/reg.hpp"
#include "reghec/rng.hpp"
#include "reghec/sim.hpp"

namespace {

using reghec::Rng;
using reghec::derive_seed;
using reghec::geom::RigidTransform;
using reghec::geom::Twist6;
namespace geom = reghec::geom;
namespace align = reghec::align;
namespace cloud = reghec::cloud;
namespace reg = reghec::reg;
namespace boia = reghec::boia;
namespace sim = reghec::sim;
namespace assess = reghec::assess;
namespace cli = reghec::cli;

constexpr double kPi = 3.14159265358979323846;

// criterion 1: noiseless full-pipeline recovery
constexpr double kCleanRotTolDeg = 0.1;
constexpr double kCleanTransTolMm = 0.5;
constexpr int kCleanMinPasses = 8;  // of 10 trials per scene
constexpr double kRunSecondsCap = 60.0;

// criterion 2: recovery under 0.5 mm sensor noise
constexpr double kNoiseSigma = 0.0005;
constexpr double kNoisyRotTolDeg = 0.5;
constexpr double kNoisyTransTolMm = 2.0;
constexpr int kNoisyMinPasses = 7;

// criteria 3 and 4: accelerated vs plain refinement from 100 seeded starts
// near a fixed point. Per-axis caps keep every start within 20 degrees and
// 50 mm of it: sqrt(3)*0.2 rad = 19.85 deg, sqrt(3)*0.0288 m = 49.9 mm, and
// the rotation geodesic never exceeds the log-coordinate gap.
constexpr int kBenchRuns = 100;
constexpr double kBenchRotCap = 0.2;      // radians per axis
constexpr double kBenchTransCap = 0.0288; // meters per axis
constexpr double kAccelMinFraction = 0.80;
constexpr double kAccelMinMedianPct = 25.0;
constexpr double kSharedTwistTol = 1e-3;
constexpr double kSharedMinFraction = 0.95;

// criterion 5: analytic jacobian against central differences
constexpr int kJacobianInstances = 1000;
constexpr double kJacobianTol = 1e-5;

// criterion 6: objective trace of the damped alignment solver
constexpr int kMonotoneInstances = 100;
constexpr double kMonotoneSlack = 1e-12;

// criterion 7: posterior against a dense direct-inverse oracle, expected
// improvement against Monte Carlo
constexpr int kGpModels = 100;
constexpr int kGpQueriesPerModel = 20;
constexpr double kGpOracleTol = 1e-8;
constexpr int kEiTriples = 100;
constexpr int kEiDraws = 4000000;
constexpr double kEiRelTol = 0.01;

// criterion 8: wraparound identity of the rotation-aware kernel, in units
// of the machine epsilon of sigma^2
constexpr double kWrapCanonicalUlps = 4.0;
constexpr double kWrapRandomUlps = 32.0;
constexpr int kWrapRandomPairs = 1000;

// criterion 9: guided initial search against equal-budget random sampling
constexpr int kGuidedTrials = 100;
constexpr int kGuidedMinWins = 90;
constexpr double kGuidedRotBound = 1.2;  // radians per axis
constexpr int kGuidedEiBudget = 60;

Eigen::Vector3d vec3(Rng& rng, double r) {
  const double x = rng.uniform(-r, r);
  const double y = rng.uniform(-r, r);
  const double z = rng.uniform(-r, r);
  return {x, y, z};
}

RigidTransform random_transform(Rng& rng, double rot, double trans) {
  RigidTransform x;
  x.r = geom::so3_exp(vec3(rng, rot));
  x.t = vec3(rng, trans);
  return x;
}

// Same stream the simulator uses for its hidden transform.
RigidTransform draw_ground_truth(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 9000));
  return random_transform(rng, 0.6, 0.08);
}

// Tight orbit: viewing directions inside a narrow cone so adjacent views
// overlap far above the trim fraction; roll about the viewing axis supplies
// large, non-parallel motion rotations.
std::vector<RigidTransform> orbit_trajectory(const RigidTransform& x_gt,
                                             std::uint64_t seed, int count,
                                             double standoff) {
  Rng rng(derive_seed(seed, 41));
  const RigidTransform x_inv = x_gt.inverse();
  std::vector<RigidTransform> poses;
  for (int i = 0; i < count; ++i) {
    const double az = (-15.0 + 30.0 * i / (count - 1)) * kPi / 180.0 + rng.uniform(-0.02, 0.02);
    const double el = ((i % 2 ? 63.0 : 71.0) + rng.uniform(-2.0, 2.0)) * kPi / 180.0;
    const double rho = standoff + rng.uniform(-0.02, 0.02);
    const Eigen::Vector3d eye(rho * std::cos(el) * std::cos(az),
                              rho * std::cos(el) * std::sin(az),
                              rho * std::sin(el));
    const Eigen::Vector3d target(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01),
                                 rng.uniform(-0.01, 0.01));
    const Eigen::Vector3d z = (target - eye).normalized();
    Eigen::Vector3d up(0, 0, 1);
    if (std::abs(z.dot(up)) > 0.99) up = Eigen::Vector3d(1, 0, 0);
    const Eigen::Vector3d x = up.cross(z).normalized();
    const Eigen::Vector3d y = z.cross(x);
    const double roll = (-80.0 + 160.0 * i / (count - 1)) * kPi / 180.0 + rng.uniform(-0.1, 0.1);
    Eigen::Matrix3d r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    Eigen::Matrix3d rz;
    rz = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ());
    RigidTransform look;
    look.r = geom::RotationMatrix(Eigen::Matrix3d(r * rz));
    look.t = eye;
    poses.push_back(look * x_inv);
  }
  return poses;
}

constexpr std::array<sim::SceneKind, 5> kSceneKinds = {
    sim::SceneKind::sphere, sim::SceneKind::plane, sim::SceneKind::cylinder,
    sim::SceneKind::cone, sim::SceneKind::cluster};
constexpr std::array<const char*, 5> kSceneNames = {"sphere", "plane", "cylinder",
                                                    "cone", "cluster"};

Eigen::Vector3d scene_dimensions(int k) {
  switch (k) {
    case 0: return {0.08, 0.0, 0.0};
    case 1: return {0.21, 0.30, 0.0};
    case 2: return {0.06, 0.16, 0.0};
    case 3: return {0.08, 0.16, 0.0};
    default: return {1.0, 0.0, 0.0};
  }
}

struct RecoveryTally {
  std::array<int, 5> passes{};
  double worst_deg = 0.0;
  double worst_mm = 0.0;
  double worst_seconds = 0.0;
};

RecoveryTally recovery_runs(double noise_sigma, double tol_deg, double tol_mm) {
  RecoveryTally tally;
  for (int k = 0; k < 5; ++k) {
    for (int trial = 0; trial < 10; ++trial) {
      const std::uint64_t seed = derive_seed(1000 + k, static_cast<std::uint64_t>(trial));
      const RigidTransform x_gt = draw_ground_truth(seed);
      sim::SceneSpec spec;
      spec.kind = kSceneKinds[static_cast<std::size_t>(k)];
      spec.dimensions = scene_dimensions(k);
      spec.sample_density = 2e4;
      spec.seed = seed;
      sim::SensorModel sensor;
      sensor.noise_sigma = noise_sigma;
      const auto robot = orbit_trajectory(x_gt, seed, 9, 0.45);
      const auto simp = sim::make_problem(spec, x_gt, robot, reg::Mode::eye_in_hand,
                                          sensor, true);
      const auto t0 = std::chrono::steady_clock::now();
      const Twist6 u0 = boia::run_bo_ia(simp.problem, boia::SearchBox{}, 50, 100, 10,
                                        seed, 200);
      const auto res = reg::run_aa_icpv(simp.problem, u0, 100);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto [deg, mm] = assess::compare_to_ground_truth(res.x, x_gt);
      if (deg <= tol_deg && mm <= tol_mm) ++tally.passes[static_cast<std::size_t>(k)];
      tally.worst_deg = std::max(tally.worst_deg, deg);
      tally.worst_mm = std::max(tally.worst_mm, mm);
      tally.worst_seconds = std::max(tally.worst_seconds, seconds);
    }
  }
  return tally;
}

void print_recovery_line(const char* tag, const RecoveryTally& t, double tol_deg,
                         double tol_mm, int min_passes, bool pass) {
  std::printf("criterion %s %s  ", tag, pass ? "PASS" : "FAIL");
  for (int k = 0; k < 5; ++k)
    std::printf("%s %d/10 ", kSceneNames[static_cast<std::size_t>(k)],
                t.passes[static_cast<std::size_t>(k)]);
  std::printf(" worst %.4f deg / %.4f mm, slowest run %.1f s  [tol %.1f deg, %.1f mm, >=%d/10 per scene, <%.0f s per run]\n",
              t.worst_deg, t.worst_mm, t.worst_seconds, tol_deg, tol_mm, min_passes,
              kRunSecondsCap);
  std::fflush(stdout);
}

// Shared fixture for criteria 3 and 4: simulate one scene to disk, calibrate
// once for the fixed point, then benchmark both refinement variants from
// seeded starts boxed around it.
cli::BenchmarkSummary build_benchmark_summary() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "reghec_acceptance_bench";
  fs::create_directories(dir);
  cli::SimulateConfig sc;
  sc.kind = sim::SceneKind::cluster;
  // Density sets how tightly the correspondence map's fixed points cluster.
  // 5e4 keeps the whole cluster inside a third of the shared-point tolerance;
  // sparser scenes spread past it and, counterintuitively, so do much denser
  // ones, whose finer-grained plateaus slow contraction near the solution.
  sc.sample_density = 5e4;
  sc.views = 9;
  sc.noise_sigma = kNoiseSigma;
  sc.seed = 7;
  sc.out_dir = dir.string();
  const auto sim_out = cli::cmd_simulate(sc);

  cli::RunConfig rc;
  rc.cloud_paths = sim_out.cloud_paths;
  rc.pose_path = sim_out.pose_path;
  rc.seed = 7;
  rc.output_path = "";
  const auto report = cli::cmd_calibrate(rc);

  const Twist6 center = geom::pack(report.x);
  cli::RunConfig bc = rc;
  for (int i = 0; i < 3; ++i) {
    bc.box.lower[i] = center[i] - kBenchRotCap;
    bc.box.upper[i] = center[i] + kBenchRotCap;
    bc.box.lower[3 + i] = center[3 + i] - kBenchTransCap;
    bc.box.upper[3 + i] = center[3 + i] + kBenchTransCap;
  }
  bc.box_explicit = true;
  return cli::cmd_benchmark_aa(bc, kBenchRuns);
}

const cli::BenchmarkSummary& benchmark_summary() {
  static const cli::BenchmarkSummary s = build_benchmark_summary();
  return s;
}

}  // namespace

TEST_CASE("01 noiseless scene recovery") {
  const RecoveryTally t = recovery_runs(0.0, kCleanRotTolDeg, kCleanTransTolMm);
  bool pass = t.worst_seconds < kRunSecondsCap;
  for (int p : t.passes) pass = pass && p >= kCleanMinPasses;
  print_recovery_line("01", t, kCleanRotTolDeg, kCleanTransTolMm, kCleanMinPasses, pass);
  for (int k = 0; k < 5; ++k) CHECK(t.passes[static_cast<std::size_t>(k)] >= kCleanMinPasses);
  CHECK(t.worst_seconds < kRunSecondsCap);
}

TEST_CASE("02 noisy scene recovery") {
  const RecoveryTally t = recovery_runs(kNoiseSigma, kNoisyRotTolDeg, kNoisyTransTolMm);
  bool pass = t.worst_seconds < kRunSecondsCap;
  for (int p : t.passes) pass = pass && p >= kNoisyMinPasses;
  print_recovery_line("02", t, kNoisyRotTolDeg, kNoisyTransTolMm, kNoisyMinPasses, pass);
  for (int k = 0; k < 5; ++k) CHECK(t.passes[static_cast<std::size_t>(k)] >= kNoisyMinPasses);
  CHECK(t.worst_seconds < kRunSecondsCap);
}

TEST_CASE("03 acceleration cuts map calls") {
  const auto& s = benchmark_summary();
  const bool pass = s.both_converged >= 80 &&
                    s.accelerated_fraction >= kAccelMinFraction &&
                    s.median_g_call_reduction_percent >= kAccelMinMedianPct;
  std::printf("criterion 03 %s  %d/%d runs convergent in both variants, accelerated fraction %.2f, median map-call reduction %.1f%%  [>=%.2f accelerated, >=%.0f%% median cut]\n",
              pass ? "PASS" : "FAIL", s.both_converged, kBenchRuns,
              s.accelerated_fraction, s.median_g_call_reduction_percent,
              kAccelMinFraction, kAccelMinMedianPct);
  std::fflush(stdout);
  CHECK(s.both_converged >= 80);
  CHECK(s.accelerated_fraction >= kAccelMinFraction);
  CHECK(s.median_g_call_reduction_percent >= kAccelMinMedianPct);
}

TEST_CASE("04 accelerated and plain share fixed points") {
  const auto& s = benchmark_summary();
  int both = 0;
  int shared = 0;
  for (const auto& run : s.runs) {
    if (!(run.aa_converged && run.plain_converged)) continue;
    ++both;
    if (run.fixed_point_distance < kSharedTwistTol) ++shared;
  }
  const double fraction = both > 0 ? static_cast<double>(shared) / both : 0.0;
  const bool pass = both >= 80 && fraction >= kSharedMinFraction;
  std::printf("criterion 04 %s  %d/%d mutually convergent runs within twist distance %.0e, fraction %.2f  [>=%.2f]\n",
              pass ? "PASS" : "FAIL", shared, both, kSharedTwistTol, fraction,
              kSharedMinFraction);
  std::fflush(stdout);
  CHECK(both >= 80);
  CHECK(fraction >= kSharedMinFraction);
  CHECK(s.shared_fixed_point_fraction >= kSharedMinFraction);
}

TEST_CASE("05 alignment jacobian matches finite differences") {
  Rng rng(4721);
  const double h = 1e-6;
  double worst = 0.0;
  for (int inst = 0; inst < kJacobianInstances; ++inst) {
    const RigidTransform a_i = random_transform(rng, 2.5, 0.6);
    const RigidTransform a_i1 = random_transform(rng, 2.5, 0.6);
    const RigidTransform x = random_transform(rng, 2.5, 0.15);
    align::Correspondence c;
    c.p = vec3(rng, 0.4);
    c.q = vec3(rng, 0.4);
    c.motion = 0;
    const Eigen::Matrix<double, 3, 6> j = align::jacobian(a_i, a_i1, x, c);
    Eigen::Matrix<double, 3, 6> fd;
    for (int k = 0; k < 6; ++k) {
      align::Vector6d dx = align::Vector6d::Zero();
      dx[k] = h;
      const Eigen::Vector3d rp = align::residual(a_i, a_i1, align::apply_update(x, dx), c);
      dx[k] = -h;
      const Eigen::Vector3d rm = align::residual(a_i, a_i1, align::apply_update(x, dx), c);
      fd.col(k) = (rp - rm) / (2.0 * h);
    }
    const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
    worst = std::max(worst, (j - fd).cwiseAbs().maxCoeff() / scale);
  }
  const bool pass = worst < kJacobianTol;
  std::printf("criterion 05 %s  worst relative error %.3e over %d instances  [< %.0e]\n",
              pass ? "PASS" : "FAIL", worst, kJacobianInstances, kJacobianTol);
  std::fflush(stdout);
  CHECK(worst < kJacobianTol);
}

TEST_CASE("06 alignment steps never raise the objective") {
  Rng rng(6121);
  std::size_t steps = 0;
  int upticks = 0;
  double worst_uptick = 0.0;
  for (int inst = 0; inst < kMonotoneInstances; ++inst) {
    const RigidTransform x_gt = random_transform(rng, 0.5, 0.08);
    std::vector<RigidTransform> poses;
    for (int i = 0; i < 4; ++i) poses.push_back(random_transform(rng, 2.0, 0.5));
    align::CorrespondenceSet s;
    for (int m = 0; m < 3; ++m) {
      const RigidTransform si = (poses[static_cast<std::size_t>(m)] * x_gt).inverse();
      const RigidTransform si1 = (poses[static_cast<std::size_t>(m) + 1] * x_gt).inverse();
      for (int n = 0; n < 60; ++n) {
        const Eigen::Vector3d w = vec3(rng, 0.3);
        align::Correspondence c;
        c.p = si * w + 2e-4 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        c.q = si1 * w + 2e-4 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        c.motion = m;
        s.items.push_back(c);
      }
      s.per_motion.push_back(60);
    }
    align::Vector6d delta;
    delta.head<3>() = vec3(rng, 0.07);
    delta.tail<3>() = vec3(rng, 0.015);
    const RigidTransform x0 = align::apply_update(x_gt, delta);
    const auto res = align::solve_alignment(s, poses, x0);
    for (std::size_t i = 0; i + 1 < res.objective.size(); ++i) {
      ++steps;
      const double slack = kMonotoneSlack * std::max(1.0, res.objective[i]);
      const double uptick = res.objective[i + 1] - res.objective[i];
      if (uptick > slack) {
        ++upticks;
        worst_uptick = std::max(worst_uptick, uptick);
      }
    }
  }
  const bool pass = upticks == 0;
  std::printf("criterion 06 %s  %d objective increases across %zu accepted steps in %d instances (worst %.3e)  [0 allowed beyond %.0e relative slack]\n",
              pass ? "PASS" : "FAIL", upticks, steps, kMonotoneInstances, worst_uptick,
              kMonotoneSlack);
  std::fflush(stdout);
  CHECK(upticks == 0);
  CHECK(steps > 0);
}

TEST_CASE("07 posterior and improvement match dense oracles") {
  // Part one: posterior mean and variance against a direct dense inverse.
  Rng rng(7451);
  double worst_mean = 0.0;
  double worst_var = 0.0;
  for (int inst = 0; inst < kGpModels; ++inst) {
    const int n = 3 + inst % 23;
    std::vector<Twist6> samples;
    std::vector<double> values;
    for (int i = 0; i < n; ++i) {
      Twist6 u;
      u.head<3>() = vec3(rng, 1.5);
      u.tail<3>() = vec3(rng, 0.5);
      samples.push_back(u);
      values.push_back(std::sin(u.head<3>().norm()) + 0.3 * std::cos(3.0 * u[3]) +
                       0.1 * rng.normal());
    }
    boia::GpHyper hyper;
    hyper.sigma = rng.uniform(0.3, 2.0);
    hyper.ell = rng.uniform(0.4, 2.0);
    hyper.alpha_t = rng.uniform(0.5, 2.0);
    const boia::GpModel model(samples, values, hyper);

    Eigen::MatrixXd gram(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        gram(i, j) = boia::kernel_se3(samples[static_cast<std::size_t>(i)],
                                      samples[static_cast<std::size_t>(j)], hyper);
    gram.diagonal().array() += 1e-8 * hyper.sigma * hyper.sigma;
    const Eigen::MatrixXd inv = gram.inverse();
    double mean_v = 0.0;
    for (double v : values) mean_v += v;
    mean_v /= n;
    Eigen::VectorXd centered(n);
    for (int i = 0; i < n; ++i) centered[i] = values[static_cast<std::size_t>(i)] - mean_v;

    for (int q = 0; q < kGpQueriesPerModel; ++q) {
      Twist6 u;
      u.head<3>() = vec3(rng, 1.5);
      u.tail<3>() = vec3(rng, 0.5);
      Eigen::VectorXd k(n);
      for (int i = 0; i < n; ++i)
        k[i] = boia::kernel_se3(u, samples[static_cast<std::size_t>(i)], hyper);
      const double mean_o = mean_v + k.dot(inv * centered);
      const double var_o =
          std::max(0.0, boia::kernel_se3(u, u, hyper) - k.dot(inv * k));
      const auto [mean_m, var_m] = boia::gp_posterior(model, u);
      worst_mean = std::max(worst_mean, std::abs(mean_m - mean_o));
      worst_var = std::max(worst_var, std::abs(var_m - var_o));
    }
  }

  // Part two: closed-form expected improvement against Monte Carlo.
  double worst_rel = 0.0;
  for (int inst = 0; inst < kEiTriples; ++inst) {
    Rng trng(derive_seed(881, static_cast<std::uint64_t>(inst)));
    const double sd = trng.uniform(0.05, 2.0);
    const double mu = trng.uniform(-1.0, 1.0);
    const double z = trng.uniform(-1.2, 1.5);
    const double e_best = mu + z * sd;
    const double cf = boia::expected_improvement(mu, sd * sd, e_best);
    double acc = 0.0;
    for (int d = 0; d < kEiDraws; ++d) {
      const double v = e_best - (mu + sd * trng.normal());
      if (v > 0.0) acc += v;
    }
    const double mc = acc / kEiDraws;
    const double rel = std::abs(cf - mc) / std::max(std::abs(cf), std::abs(mc));
    worst_rel = std::max(worst_rel, rel);
  }

  const bool pass = worst_mean < kGpOracleTol && worst_var < kGpOracleTol &&
                    worst_rel < kEiRelTol;
  std::printf("criterion 07 %s  posterior gap mean %.2e var %.2e over %d models x %d queries, worst EI relative gap %.4f over %d triples  [< %.0e, < %.0e, < %.2f]\n",
              pass ? "PASS" : "FAIL", worst_mean, worst_var, kGpModels,
              kGpQueriesPerModel, worst_rel, kEiTriples, kGpOracleTol, kGpOracleTol,
              kEiRelTol);
  std::fflush(stdout);
  CHECK(worst_mean < kGpOracleTol);
  CHECK(worst_var < kGpOracleTol);
  CHECK(worst_rel < kEiRelTol);
}

TEST_CASE("08 rotation wraparound kernel identity") {
  boia::GpHyper hyper;
  hyper.sigma = 1.3;
  hyper.ell = 0.9;
  hyper.alpha_t = 1.1;
  const double s2 = hyper.sigma * hyper.sigma;
  const double eps = std::numeric_limits<double>::epsilon() * s2;

  // A half-turn has two logs, w and -w. The kernel must see one rotation.
  double worst_canonical = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    Twist6 u1 = Twist6::Zero();
    Twist6 u2 = Twist6::Zero();
    u1[axis] = kPi;
    u2[axis] = -kPi;
    u1.tail<3>() = Eigen::Vector3d(0.02, -0.03, 0.05);
    u2.tail<3>() = u1.tail<3>();
    worst_canonical =
        std::max(worst_canonical, std::abs(boia::kernel_se3(u1, u2, hyper) - s2));
  }

  Rng rng(1783);
  double worst_random = 0.0;
  for (int i = 0; i < kWrapRandomPairs; ++i) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    while (axis.norm() < 1e-12) axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    Twist6 u1;
    Twist6 u2;
    u1.head<3>() = kPi * axis;
    u2.head<3>() = -kPi * axis;
    u1.tail<3>() = vec3(rng, 0.1);
    u2.tail<3>() = u1.tail<3>();
    worst_random =
        std::max(worst_random, std::abs(boia::kernel_se3(u1, u2, hyper) - s2));
  }

  // Identical twists sit at distance zero up to the rotation log round trip.
  Twist6 same;
  same.head<3>() = Eigen::Vector3d(0.3, -0.2, 0.4);
  same.tail<3>() = Eigen::Vector3d(0.01, 0.02, -0.03);
  const double k_same = boia::kernel_se3(same, same, hyper);

  // A kernel on raw twist coordinates treats the two logs as far apart.
  Twist6 c1 = Twist6::Zero();
  Twist6 c2 = Twist6::Zero();
  c1[2] = kPi;
  c2[2] = -kPi;
  const double k_plain = boia::kernel_value(boia::KernelKind::squared_exp, c1, c2, hyper);

  const bool pass = worst_canonical <= kWrapCanonicalUlps * eps &&
                    worst_random <= kWrapRandomUlps * eps &&
                    std::abs(k_same - s2) <= 1e-7 * s2 &&
                    std::abs(k_plain - s2) > 0.5 * s2;
  std::printf("criterion 08 %s  antipodal gap axis-aligned %.1f ulp, random %.1f ulp of sigma^2 (%d pairs), raw-coordinate kernel %.2e vs sigma^2 %.2f  [<= %.0f / %.0f ulp; baseline must differ]\n",
              pass ? "PASS" : "FAIL", worst_canonical / eps, worst_random / eps,
              kWrapRandomPairs, k_plain, s2, kWrapCanonicalUlps, kWrapRandomUlps);
  std::fflush(stdout);
  CHECK(worst_canonical <= kWrapCanonicalUlps * eps);
  CHECK(worst_random <= kWrapRandomUlps * eps);
  CHECK(std::abs(k_same - s2) <= 1e-7 * s2);
  CHECK(std::abs(k_plain - s2) > 0.5 * s2);
}

TEST_CASE("09 guided search beats random sampling") {
  sim::SceneSpec spec;
  spec.kind = sim::SceneKind::cluster;
  spec.dimensions = {1.0, 0.0, 0.0};
  spec.sample_density = 2e4;
  spec.seed = 71;
  const RigidTransform x_gt = draw_ground_truth(9);
  const auto robot = sim::default_trajectory(x_gt, 9, 4);
  sim::SensorModel sensor;
  sensor.noise_sigma = kNoiseSigma;
  const auto simp = sim::make_problem(spec, x_gt, robot, reg::Mode::eye_in_hand, sensor,
                                      false);

  boia::SearchBox box;
  for (int i = 0; i < 3; ++i) {
    box.lower[i] = -kGuidedRotBound;
    box.upper[i] = kGuidedRotBound;
  }
  REQUIRE(box.contains(geom::pack(x_gt)));

  int wins = 0;
  for (int trial = 0; trial < kGuidedTrials; ++trial) {
    const std::uint64_t seed = derive_seed(12, static_cast<std::uint64_t>(trial));
    // Both arms share the seed, so the guided run's initial draws coincide
    // with the random run's first half: the comparison is fifty acquisitions
    // against fifty more random probes on the same error surface.
    const Twist6 guided =
        boia::run_bo_ia(simp.problem, box, 50, 100, 10, seed, kGuidedEiBudget);
    const Twist6 random =
        boia::run_bo_ia(simp.problem, box, 100, 100, 10, seed, kGuidedEiBudget);
    const reg::CalibrationProblem coarse = boia::coarse_problem(simp.problem, seed);
    const reg::Matcher matcher(coarse);
    if (matcher.error(guided) <= matcher.error(random)) ++wins;
  }
  const bool pass = wins >= kGuidedMinWins;
  std::printf("criterion 09 %s  guided best at or below equal-budget random best in %d/%d trials  [>=%d]\n",
              pass ? "PASS" : "FAIL", wins, kGuidedTrials, kGuidedMinWins);
  std::fflush(stdout);
  CHECK(wins >= kGuidedMinWins);
}

TEST_CASE("10 fixed-sensor and wrist-sensor duality") {
  sim::SceneSpec spec;
  spec.kind = sim::SceneKind::cluster;
  spec.dimensions = {1.0, 0.0, 0.0};
  spec.sample_density = 2e4;
  spec.seed = 33;
  const RigidTransform x_gt = draw_ground_truth(33);
  sim::SensorModel sensor;
  sensor.noise_sigma = kNoiseSigma;

  // Robot poses whose inverses aim the sensor at the scene.
  const auto traj = sim::default_trajectory(x_gt, 33, 5);
  std::vector<RigidTransform> robot;
  for (const auto& p : traj) robot.push_back(p.inverse());

  const auto dual = sim::make_problem(spec, x_gt, robot, reg::Mode::eye_to_hand, sensor,
                                      false);
  std::vector<RigidTransform> inverted;
  for (const auto& p : robot) inverted.push_back(p.inverse());
  const auto twin = sim::make_problem(spec, x_gt, inverted, reg::Mode::eye_in_hand,
                                      sensor, false);

  REQUIRE(dual.problem.clouds.size() == twin.problem.clouds.size());
  bool clouds_equal = true;
  for (std::size_t v = 0; v < dual.problem.clouds.size(); ++v) {
    const auto& a = dual.problem.clouds[v].points;
    const auto& b = twin.problem.clouds[v].points;
    if (a.size() != b.size()) {
      clouds_equal = false;
      break;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      if ((a[i].array() != b[i].array()).any()) clouds_equal = false;
  }
  bool poses_equal = dual.problem.poses.size() == twin.problem.poses.size();
  for (std::size_t v = 0; poses_equal && v < dual.problem.poses.size(); ++v)
    poses_equal = (dual.problem.poses[v].matrix4().array() ==
                   twin.problem.poses[v].matrix4().array())
                      .all();

  const boia::SearchBox box;
  const Twist6 u_dual = boia::run_bo_ia(dual.problem, box, 12, 24, 6, 33, 40);
  const Twist6 u_twin = boia::run_bo_ia(twin.problem, box, 12, 24, 6, 33, 40);
  const auto r_dual = reg::run_aa_icpv(dual.problem, u_dual, 100);
  const auto r_twin = reg::run_aa_icpv(twin.problem, u_twin, 100);

  const bool bo_equal = (u_dual.array() == u_twin.array()).all();
  const bool x_equal =
      (r_dual.x.matrix4().array() == r_twin.x.matrix4().array()).all();
  const bool trace_equal = r_dual.converged == r_twin.converged &&
                           r_dual.iterations == r_twin.iterations &&
                           r_dual.g_calls == r_twin.g_calls &&
                           r_dual.mse_history == r_twin.mse_history;
  const bool pass = dual.problem.mode == reg::Mode::eye_to_hand &&
                    twin.problem.mode == reg::Mode::eye_in_hand && clouds_equal &&
                    poses_equal && bo_equal && x_equal && trace_equal;
  std::printf("criterion 10 %s  clouds %s, stored poses %s, search %s, result %s, trace %s across the mode pair  [all bit-identical]\n",
              pass ? "PASS" : "FAIL", clouds_equal ? "identical" : "DIFFER",
              poses_equal ? "identical" : "DIFFER", bo_equal ? "identical" : "DIFFER",
              x_equal ? "identical" : "DIFFER", trace_equal ? "identical" : "DIFFER");
  std::fflush(stdout);
  CHECK(dual.problem.mode == reg::Mode::eye_to_hand);
  CHECK(twin.problem.mode == reg::Mode::eye_in_hand);
  CHECK(clouds_equal);
  CHECK(poses_equal);
  CHECK(bo_equal);
  CHECK(x_equal);
  CHECK(trace_equal);
}

TEST_CASE("11 unusable trajectories are flagged") {
  Rng rng(9371);

  std::vector<RigidTransform> two;
  two.push_back(random_transform(rng, 1.0, 0.3));
  two.push_back(random_transform(rng, 1.0, 0.3));
  const auto v_two = sim::validate_poses(two);

  std::vector<RigidTransform> sliding;
  for (int i = 0; i < 4; ++i) {
    RigidTransform p;
    p.t = Eigen::Vector3d(0.1 * i, 0.05, -0.02 * i);
    sliding.push_back(p);
  }
  const auto v_slide = sim::validate_poses(sliding);

  std::vector<RigidTransform> screw;
  for (int i = 0; i < 3; ++i) {
    RigidTransform p;
    p.r = geom::so3_exp(Eigen::Vector3d(0.0, 0.0, 0.4 * i));
    p.t = Eigen::Vector3d(0.05 * i, 0.0, 0.0);
    screw.push_back(p);
  }
  const auto v_screw = sim::validate_poses(screw);

  const auto v_good = sim::validate_poses(sim::default_trajectory(
      random_transform(rng, 0.5, 0.08), 5, 9));

  // Exact correspondences under parallel-axis motion leave the normal
  // matrix rank deficient, which the solver must refuse rather than guess.
  const RigidTransform x_gt = random_transform(rng, 0.5, 0.08);
  align::CorrespondenceSet s;
  for (int m = 0; m < 2; ++m) {
    const RigidTransform si = (screw[static_cast<std::size_t>(m)] * x_gt).inverse();
    const RigidTransform si1 = (screw[static_cast<std::size_t>(m) + 1] * x_gt).inverse();
    for (int n = 0; n < 40; ++n) {
      const Eigen::Vector3d w(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                              rng.uniform(0.2, 0.6));
      align::Correspondence c;
      c.p = si * w;
      c.q = si1 * w;
      c.motion = m;
      s.items.push_back(c);
    }
    s.per_motion.push_back(40);
  }
  bool threw = false;
  try {
    align::gauss_newton_step(s, screw, x_gt);
  } catch (const reghec::DegenerateGeometryError&) {
    threw = true;
  }

  const bool pass = v_two.too_few && v_two.describe() == "single robot motion" &&
                    v_slide.pure_translation && !v_slide.parallel_axes &&
                    v_slide.describe() == "pure translation motion" &&
                    v_screw.parallel_axes && !v_screw.pure_translation &&
                    v_screw.describe() == "parallel rotation axes" && v_good.ok() &&
                    threw;
  std::printf("criterion 11 %s  two poses -> \"%s\", translations -> \"%s\", one axis -> \"%s\", healthy sweep -> \"%s\", parallel-axis step %s  [flags exact, solver must throw]\n",
              pass ? "PASS" : "FAIL", v_two.describe().c_str(),
              v_slide.describe().c_str(), v_screw.describe().c_str(),
              v_good.describe().c_str(), threw ? "throws" : "DOES NOT THROW");
  std::fflush(stdout);
  CHECK(v_two.too_few);
  CHECK(v_two.describe() == "single robot motion");
  CHECK(v_slide.pure_translation);
  CHECK_FALSE(v_slide.parallel_axes);
  CHECK(v_slide.describe() == "pure translation motion");
  CHECK(v_screw.parallel_axes);
  CHECK_FALSE(v_screw.pure_translation);
  CHECK(v_screw.describe() == "parallel rotation axes");
  CHECK(v_good.ok());
  CHECK(threw);
}
