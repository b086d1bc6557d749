#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "reghec/assess.hpp"
#include "reghec/geom.hpp"
#include "reghec/rng.hpp"

namespace {

using reghec::assess::PoseSample;
using reghec::geom::RigidTransform;
using reghec::geom::RotationMatrix;

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = 180.0 / kPi;

PoseSample sample_of(const Eigen::Vector3d& w, const Eigen::Vector3d& t) {
  return {reghec::geom::so3_exp(w), t};
}

}  // namespace

TEST_SUITE("assess") {

TEST_CASE("identical samples spread to zero") {
  const PoseSample s = sample_of({0.4, -0.2, 0.9}, {0.3, 0.1, -0.2});
  const std::vector<PoseSample> samples(5, s);
  CHECK(reghec::assess::err_rotation(samples) < 1e-10);
  CHECK(reghec::assess::err_translation(samples) < 1e-10);
}

TEST_CASE("opposed rotations spread to their half-angle") {
  const double theta = 0.3;
  const std::vector<PoseSample> samples{sample_of({0, 0, theta}, {0, 0, 0}),
                                        sample_of({0, 0, -theta}, {0, 0, 0})};
  CHECK(reghec::assess::err_rotation(samples) ==
        doctest::Approx(theta * kDeg).epsilon(1e-9));
}

TEST_CASE("rotation spread tracks the noise level") {
  // every sample is the base pose with a small random rotation tacked on;
  // the expected spread comes from an independent larger replay
  const double s = 0.01;
  const RotationMatrix base = reghec::geom::so3_exp({0.7, -0.3, 0.2});
  reghec::Rng rng(71);
  std::vector<PoseSample> samples;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d w(rng.normal(0.0, s), rng.normal(0.0, s),
                            rng.normal(0.0, s));
    samples.push_back({base * reghec::geom::so3_exp(w), Eigen::Vector3d::Zero()});
  }
  const double measured = reghec::assess::err_rotation(samples);

  reghec::Rng oracle_rng(72);
  double acc = 0.0;
  const int reps = 10000;
  for (int i = 0; i < reps; ++i) {
    const Eigen::Vector3d w(oracle_rng.normal(0.0, s), oracle_rng.normal(0.0, s),
                            oracle_rng.normal(0.0, s));
    acc += w.squaredNorm();
  }
  const double expected = std::sqrt(acc / reps) * kDeg;
  CHECK(std::fabs(measured - expected) < 0.2 * expected);
}

TEST_CASE("opposed translations spread to their half-gap") {
  const std::vector<PoseSample> samples{
      sample_of({0, 0, 0}, {0.001, 0, 0}), sample_of({0, 0, 0}, {-0.001, 0, 0})};
  CHECK(reghec::assess::err_translation(samples) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("translation spread matches the direct formula") {
  reghec::Rng rng(73);
  std::vector<PoseSample> samples;
  for (int i = 0; i < 40; ++i)
    samples.push_back(sample_of({0, 0, 0}, {rng.normal(0.0, 0.02),
                                            rng.normal(0.0, 0.02),
                                            rng.normal(0.0, 0.02)}));
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : samples) mean += p.t;
  mean /= 40.0;
  double acc = 0.0;
  for (const auto& p : samples) acc += (p.t - mean).squaredNorm();
  const double oracle = std::sqrt(acc / 40.0) * 1000.0;
  CHECK(reghec::assess::err_translation(samples) ==
        doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("spreads ignore a common motion") {
  reghec::Rng rng(74);
  std::vector<PoseSample> samples;
  for (int i = 0; i < 12; ++i)
    samples.push_back(sample_of({rng.normal(0.0, 0.1), rng.normal(0.0, 0.1),
                                 rng.normal(0.0, 0.1)},
                                {rng.normal(0.0, 0.05), rng.normal(0.0, 0.05),
                                 rng.normal(0.0, 0.05)}));
  const double rot0 = reghec::assess::err_rotation(samples);
  const double tr0 = reghec::assess::err_translation(samples);

  const RotationMatrix q = reghec::geom::so3_exp({1.1, -0.4, 0.8});
  const Eigen::Vector3d shift(0.7, -0.2, 0.9);
  std::vector<PoseSample> moved;
  for (const auto& p : samples) moved.push_back({q * p.r, p.t + shift});

  CHECK(reghec::assess::err_rotation(moved) == doctest::Approx(rot0).epsilon(1e-9));
  CHECK(reghec::assess::err_translation(moved) ==
        doctest::Approx(tr0).epsilon(1e-12));
}

TEST_CASE("spreads are positive as soon as one sample differs") {
  std::vector<PoseSample> samples(4, sample_of({0.2, 0.1, -0.3}, {0.1, 0.2, 0.3}));
  samples.back() = sample_of({0.2, 0.1, -0.3 + 1e-6}, {0.1, 0.2, 0.3 + 1e-7});
  CHECK(reghec::assess::err_rotation(samples) > 0.0);
  CHECK(reghec::assess::err_translation(samples) > 0.0);
}

TEST_CASE("ground-truth comparison") {
  const RigidTransform x_gt = {reghec::geom::so3_exp({0.3, -0.7, 0.1}),
                               {0.2, -0.1, 0.4}};
  const auto [a0, d0] = reghec::assess::compare_to_ground_truth(x_gt, x_gt);
  CHECK(a0 < 1e-10);
  CHECK(d0 == 0.0);

  RigidTransform rotated = x_gt;
  rotated.r = x_gt.r * reghec::geom::so3_exp({0, 0, 1.0 / kDeg});
  const auto [a1, d1] = reghec::assess::compare_to_ground_truth(rotated, x_gt);
  CHECK(a1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d1 == 0.0);

  reghec::Rng rng(75);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d dw(rng.normal(0.0, 0.1), rng.normal(0.0, 0.1),
                             rng.normal(0.0, 0.1));
    const Eigen::Vector3d dt(rng.normal(0.0, 0.01), rng.normal(0.0, 0.01),
                             rng.normal(0.0, 0.01));
    RigidTransform est;
    est.r = x_gt.r * reghec::geom::so3_exp(dw);
    est.t = x_gt.t + dt;
    const auto [angle, dist] = reghec::assess::compare_to_ground_truth(est, x_gt);
    CHECK(std::fabs(angle - dw.norm() * kDeg) < 1e-9);
    CHECK(std::fabs(dist - dt.norm() * 1000.0) < 1e-9);
  }
}

TEST_CASE("spread metrics need two samples") {
  const std::vector<PoseSample> one{sample_of({0, 0, 0}, {0, 0, 0})};
  CHECK_THROWS_AS(reghec::assess::err_rotation(one), std::invalid_argument);
  CHECK_THROWS_AS(reghec::assess::err_translation(one), std::invalid_argument);
  CHECK_THROWS_AS(reghec::assess::err_rotation({}), std::invalid_argument);
  CHECK_THROWS_AS(reghec::assess::err_translation({}), std::invalid_argument);
}

}  // TEST_SUITE
