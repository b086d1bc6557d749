#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reghec/assess.hpp"
#include "reghec/boia.hpp"
#include "reghec/geom.hpp"
#include "reghec/reg.hpp"
#include "reghec/sim.hpp"

namespace reghec::cli {

std::string mode_name(reg::Mode mode);              // "eye-in-hand" etc.
reg::Mode mode_from_name(const std::string& name);  // throws on unknown names

std::string scene_name(sim::SceneKind kind);  // "sphere", ..., "blob"
sim::SceneKind scene_from_name(const std::string& name);

// One calibration run, normally loaded from a JSON document. Defaults are
// the reference settings; eye-to-hand runs must supply explicit box bounds
// because sensible translation limits depend on where the sensor stands.
struct RunConfig {
  reg::Mode mode = reg::Mode::eye_in_hand;
  std::vector<std::string> cloud_paths;
  std::string pose_path;
  boia::SearchBox box;
  bool box_explicit = false;
  double epsilon = 1e-4;
  double trim_ratio = 0.9;
  int history_len = 4;
  int n0 = 50;
  int n_total = 100;
  int refit_period = 10;
  int ei_budget = 200;
  int max_iters = 100;
  double voxel_leaf = 0.001;
  int coarse_subset_size = 2000;
  std::uint64_t seed = 0;
  std::string output_path = "report.json";
};

// Single JSON object; unknown keys are rejected so typos surface early.
RunConfig parse_config(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);

// eye_in_hand passes through; eye_to_hand inverts every pose, which maps the
// problem onto the eye-in-hand formulation.
std::vector<geom::RigidTransform> prepare_poses(
    const std::vector<geom::RigidTransform>& raw, reg::Mode mode);

// fnv1a:<16 hex digits> over the raw bytes of every input file, pose file
// last, so a report can be matched to the exact inputs that produced it.
std::string input_digest(const RunConfig& config);

struct CalibrationReport {
  int schema_major = 1;
  int schema_minor = 0;
  geom::RigidTransform x;
  bool converged = false;
  int iterations = 0;
  int g_calls = 0;
  std::vector<double> mse_history;
  double bo_best_mse = 0.0;
  double bo_seconds = 0.0;
  double aa_seconds = 0.0;
  std::string input_digest;
  std::string mode = "eye-in-hand";
  std::uint64_t seed = 0;
};

// Lossless round trip: doubles are serialized with shortest-round-trip
// precision. Loading rejects any schema major version other than the one
// written by this build.
std::string report_to_json(const CalibrationReport& report);
CalibrationReport report_from_json(const std::string& text,
                                   const std::string& origin);
void save_report(const CalibrationReport& report, const std::string& path);
CalibrationReport load_report(const std::string& path);

// Full pipeline: load clouds and poses, voxel downsample, validate the raw
// robot poses (a single motion is fatal; other degeneracy flags warn on
// stderr and continue), prepare poses for the mode, coarse global search,
// then accelerated refinement. Writes the report to config.output_path
// unless it is empty. Inputs are only ever read.
CalibrationReport cmd_calibrate(const RunConfig& config);

struct SimulateConfig {
  sim::SceneKind kind = sim::SceneKind::sphere;
  // Zero means the per-kind default (see default_dimensions).
  Eigen::Vector3d dimensions = Eigen::Vector3d::Zero();
  double sample_density = 2e5;
  int views = 9;
  double noise_sigma = 0.0005;
  std::uint64_t seed = 7;
  reg::Mode mode = reg::Mode::eye_in_hand;
  bool shared_sampling = false;
  std::string out_dir = ".";
};

Eigen::Vector3d default_dimensions(sim::SceneKind kind);

struct SimulateResult {
  std::vector<std::string> cloud_paths;
  std::string pose_path;
  std::string ground_truth_path;
  geom::RigidTransform x_gt;
};

// Writes view_00.ply .. view_NN.ply, poses.csv (robot poses as a controller
// would report them, so eye-to-hand runs store the uninverted originals) and
// ground_truth.csv (one line, the hand-eye transform) into out_dir.
SimulateResult cmd_simulate(const SimulateConfig& config);

struct BenchmarkRun {
  std::uint64_t seed = 0;
  bool aa_converged = false;
  bool plain_converged = false;
  int aa_g_calls = 0;
  int plain_g_calls = 0;
  double aa_seconds = 0.0;
  double plain_seconds = 0.0;
  double g_call_reduction_percent = 0.0;  // vs plain; 0 unless both converged
  double fixed_point_distance = 0.0;      // twist distance between results
};

struct BenchmarkSummary {
  std::vector<BenchmarkRun> runs;
  int both_converged = 0;
  double accelerated_fraction = 0.0;  // strictly fewer G calls, of convergent
  double median_g_call_reduction_percent = 0.0;
  double median_time_speedup_percent = 0.0;
  double shared_fixed_point_fraction = 0.0;  // twist distance < 1e-3
};

// Accelerated vs plain refinement from `runs` seeded random starts inside
// config.box; runs execute on the worker pool and non-convergent runs are
// recorded, not fatal.
BenchmarkSummary cmd_benchmark_aa(const RunConfig& config, int runs);
std::string summary_to_json(const BenchmarkSummary& summary);

struct AssessMetrics {
  std::size_t sample_count = 0;
  double err_rotation_deg = 0.0;
  double err_translation_mm = 0.0;
  bool has_ground_truth = false;
  double gt_angle_deg = 0.0;     // mean measured pose vs ground truth
  double gt_distance_mm = 0.0;
};

// Repeatability of a set of measured poses; with a ground-truth file (one
// pose) also the offset of the mean measured pose from it.
AssessMetrics cmd_assess(const std::string& poses_path,
                         const std::string& ground_truth_path = "");
std::string metrics_to_json(const AssessMetrics& metrics);

}  // namespace reghec::cli
