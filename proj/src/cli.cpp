#include "reghec/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "reghec/errors.hpp"
#include "reghec/pose_io.hpp"
#include "reghec/rng.hpp"
#include "reghec/threading.hpp"

namespace reghec::cli {

using json = nlohmann::json;
using geom::RigidTransform;
using geom::Twist6;

namespace {

double seconds_between(std::chrono::steady_clock::time_point a,
                       std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Clouds and poses loaded, counts checked, raw trajectory screened, poses
// prepared for the mode. Shared by calibrate and benchmark-aa.
reg::CalibrationProblem build_problem(const RunConfig& config) {
  if (config.mode == reg::Mode::eye_to_hand && !config.box_explicit)
    throw std::invalid_argument(
        "config: eye-to-hand runs need explicit search box bounds");
  if (config.cloud_paths.empty())
    throw std::invalid_argument("config: no cloud files given");
  if (config.pose_path.empty())
    throw std::invalid_argument("config: no pose file given");

  const auto raw = pose_io::load_poses(config.pose_path);
  if (raw.size() != config.cloud_paths.size())
    throw std::invalid_argument(
        "config: " + std::to_string(config.cloud_paths.size()) +
        " clouds but " + std::to_string(raw.size()) + " poses");

  const auto flags = sim::validate_poses(raw);
  if (flags.too_few)
    throw DegenerateGeometryError("robot trajectory unusable: " + flags.describe());
  if (!flags.ok())
    std::cerr << "warning: robot trajectory may not determine the result: "
              << flags.describe() << "\n";

  reg::CalibrationProblem prob;
  prob.mode = config.mode;
  prob.poses = prepare_poses(raw, config.mode);
  prob.trim_ratio = config.trim_ratio;
  prob.epsilon = config.epsilon;
  prob.history_len = config.history_len;
  prob.coarse_subset_size = config.coarse_subset_size;
  prob.clouds.reserve(config.cloud_paths.size());
  for (std::size_t i = 0; i < config.cloud_paths.size(); ++i) {
    auto c = cloud::voxel_downsample(cloud::load_cloud(config.cloud_paths[i]),
                                     config.voxel_leaf);
    c.view = static_cast<int>(i);
    prob.clouds.push_back(std::move(c));
  }
  prob.validate();
  return prob;
}

}  // namespace

std::string mode_name(reg::Mode mode) {
  return mode == reg::Mode::eye_in_hand ? "eye-in-hand" : "eye-to-hand";
}

reg::Mode mode_from_name(const std::string& name) {
  if (name == "eye-in-hand") return reg::Mode::eye_in_hand;
  if (name == "eye-to-hand") return reg::Mode::eye_to_hand;
  throw std::invalid_argument("unknown mode '" + name +
                              "' (expected eye-in-hand or eye-to-hand)");
}

std::string scene_name(sim::SceneKind kind) {
  switch (kind) {
    case sim::SceneKind::plane:      return "plane";
    case sim::SceneKind::sphere:     return "sphere";
    case sim::SceneKind::cylinder:   return "cylinder";
    case sim::SceneKind::cone:       return "cone";
    case sim::SceneKind::cluster:    return "cluster";
    case sim::SceneKind::point_blob: return "blob";
  }
  throw std::invalid_argument("unknown scene kind");
}

sim::SceneKind scene_from_name(const std::string& name) {
  if (name == "plane") return sim::SceneKind::plane;
  if (name == "sphere") return sim::SceneKind::sphere;
  if (name == "cylinder") return sim::SceneKind::cylinder;
  if (name == "cone") return sim::SceneKind::cone;
  if (name == "cluster") return sim::SceneKind::cluster;
  if (name == "blob") return sim::SceneKind::point_blob;
  throw std::invalid_argument("unknown scene '" + name +
                              "' (plane|sphere|cylinder|cone|cluster|blob)");
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(origin, 0, e.what());
  }
  if (!j.is_object()) throw ParseError(origin, 0, "config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "mode") {
        c.mode = mode_from_name(value.get<std::string>());
      } else if (key == "clouds") {
        c.cloud_paths = value.get<std::vector<std::string>>();
      } else if (key == "poses") {
        c.pose_path = value.get<std::string>();
      } else if (key == "box") {
        for (const auto& [bk, bv] : value.items()) {
          (void)bv;
          if (bk != "lower" && bk != "upper")
            throw ParseError(origin, 0, "unknown box key '" + bk + "'");
        }
        const auto lower = value.at("lower").get<std::vector<double>>();
        const auto upper = value.at("upper").get<std::vector<double>>();
        if (lower.size() != 6 || upper.size() != 6)
          throw ParseError(origin, 0, "box bounds must have 6 entries each");
        for (int i = 0; i < 6; ++i) {
          c.box.lower[i] = lower[i];
          c.box.upper[i] = upper[i];
        }
        c.box.validate();
        c.box_explicit = true;
      } else if (key == "epsilon") {
        c.epsilon = value.get<double>();
      } else if (key == "trim_ratio") {
        c.trim_ratio = value.get<double>();
      } else if (key == "history_len") {
        c.history_len = value.get<int>();
      } else if (key == "n0") {
        c.n0 = value.get<int>();
      } else if (key == "n_total") {
        c.n_total = value.get<int>();
      } else if (key == "refit_period") {
        c.refit_period = value.get<int>();
      } else if (key == "ei_budget") {
        c.ei_budget = value.get<int>();
      } else if (key == "max_iters") {
        c.max_iters = value.get<int>();
      } else if (key == "voxel_leaf") {
        c.voxel_leaf = value.get<double>();
      } else if (key == "coarse_subset_size") {
        c.coarse_subset_size = value.get<int>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "output") {
        c.output_path = value.get<std::string>();
      } else {
        throw ParseError(origin, 0, "unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(origin, 0, e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  return parse_config(read_file(path), path);
}

std::vector<RigidTransform> prepare_poses(const std::vector<RigidTransform>& raw,
                                          reg::Mode mode) {
  if (mode == reg::Mode::eye_in_hand) return raw;
  std::vector<RigidTransform> out;
  out.reserve(raw.size());
  for (const auto& p : raw) out.push_back(p.inverse());
  return out;
}

std::string input_digest(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& bytes) {
    for (const unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& path : config.cloud_paths) mix(read_file(path));
  mix(read_file(config.pose_path));
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string report_to_json(const CalibrationReport& report) {
  json x;
  const Eigen::Matrix4d m = report.x.matrix4();
  for (int row = 0; row < 4; ++row) {
    json r = json::array();
    for (int col = 0; col < 4; ++col) r.push_back(m(row, col));
    x["matrix"].push_back(r);
  }
  const Twist6 u = geom::pack(report.x);
  for (int i = 0; i < 6; ++i) x["twist"].push_back(u[i]);

  const json j = {{"schema", {{"major", report.schema_major},
                              {"minor", report.schema_minor}}},
                  {"mode", report.mode},
                  {"seed", report.seed},
                  {"input_digest", report.input_digest},
                  {"x", x},
                  {"converged", report.converged},
                  {"iterations", report.iterations},
                  {"g_calls", report.g_calls},
                  {"mse_history", report.mse_history},
                  {"bo", {{"best_mse", report.bo_best_mse}}},
                  {"timing", {{"bo_seconds", report.bo_seconds},
                              {"aa_seconds", report.aa_seconds}}}};
  return j.dump(2) + "\n";
}

CalibrationReport report_from_json(const std::string& text,
                                   const std::string& origin) {
  CalibrationReport report;
  try {
    const json j = json::parse(text);
    const int major = j.at("schema").at("major").get<int>();
    if (major != report.schema_major)
      throw ParseError(origin, 0,
                       "unsupported report schema major version " +
                           std::to_string(major));
    report.schema_minor = j.at("schema").at("minor").get<int>();
    report.mode = j.at("mode").get<std::string>();
    mode_from_name(report.mode);
    report.seed = j.at("seed").get<std::uint64_t>();
    report.input_digest = j.at("input_digest").get<std::string>();
    Eigen::Matrix3d r;
    Eigen::Vector3d t;
    const auto& rows = j.at("x").at("matrix");
    if (rows.size() != 4) throw ParseError(origin, 0, "x.matrix must be 4x4");
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r(row, col) = rows.at(row).at(col).get<double>();
      t[row] = rows.at(row).at(3).get<double>();
    }
    report.x = {geom::RotationMatrix(r), t};
    report.converged = j.at("converged").get<bool>();
    report.iterations = j.at("iterations").get<int>();
    report.g_calls = j.at("g_calls").get<int>();
    report.mse_history = j.at("mse_history").get<std::vector<double>>();
    report.bo_best_mse = j.at("bo").at("best_mse").get<double>();
    report.bo_seconds = j.at("timing").at("bo_seconds").get<double>();
    report.aa_seconds = j.at("timing").at("aa_seconds").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(origin, 0, e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(origin, 0, e.what());
  }
  return report;
}

void save_report(const CalibrationReport& report, const std::string& path) {
  write_file(path, report_to_json(report));
}

CalibrationReport load_report(const std::string& path) {
  return report_from_json(read_file(path), path);
}

CalibrationReport cmd_calibrate(const RunConfig& config) {
  const reg::CalibrationProblem prob = build_problem(config);

  CalibrationReport report;
  report.mode = mode_name(config.mode);
  report.seed = config.seed;
  report.input_digest = input_digest(config);

  const auto t0 = std::chrono::steady_clock::now();
  const Twist6 u0 =
      boia::run_bo_ia(prob, config.box, config.n0, config.n_total,
                      config.refit_period, config.seed, config.ei_budget);
  report.bo_seconds = seconds_between(t0, std::chrono::steady_clock::now());
  report.bo_best_mse =
      reg::Matcher(boia::coarse_problem(prob, config.seed)).error(u0);

  const reg::RegResult res = reg::run_aa_icpv(prob, u0, config.max_iters);
  report.aa_seconds = res.elapsed;
  report.x = res.x;
  report.converged = res.converged;
  report.iterations = res.iterations;
  report.g_calls = res.g_calls;
  report.mse_history = res.mse_history;

  if (!config.output_path.empty()) save_report(report, config.output_path);
  return report;
}

Eigen::Vector3d default_dimensions(sim::SceneKind kind) {
  switch (kind) {
    case sim::SceneKind::plane:      return {0.21, 0.30, 0.0};
    case sim::SceneKind::sphere:     return {0.08, 0.0, 0.0};
    case sim::SceneKind::cylinder:   return {0.06, 0.16, 0.0};
    case sim::SceneKind::cone:       return {0.08, 0.16, 0.0};
    case sim::SceneKind::cluster:    return {1.0, 0.0, 0.0};
    case sim::SceneKind::point_blob: return {0.05, 0.0, 0.0};
  }
  throw std::invalid_argument("default_dimensions: unknown scene kind");
}

SimulateResult cmd_simulate(const SimulateConfig& config) {
  if (config.views < 3)
    throw std::invalid_argument("simulate: needs at least 3 views");

  sim::SceneSpec spec;
  spec.kind = config.kind;
  spec.dimensions = config.dimensions.isZero()
                        ? default_dimensions(config.kind)
                        : config.dimensions;
  spec.sample_density = config.sample_density;
  spec.seed = config.seed;

  // Ground truth well inside the default search box so default calibration
  // settings can recover it.
  Rng rng(derive_seed(config.seed, 9000));
  Eigen::Vector3d w, t;
  for (int i = 0; i < 3; ++i) w[i] = rng.uniform(-0.6, 0.6);
  for (int i = 0; i < 3; ++i) t[i] = rng.uniform(-0.08, 0.08);
  const RigidTransform x_gt{geom::so3_exp(w), t};

  std::vector<RigidTransform> robot =
      sim::default_trajectory(x_gt, config.seed, config.views);
  if (config.mode == reg::Mode::eye_to_hand)
    for (auto& p : robot) p = p.inverse();

  sim::SensorModel sensor;
  sensor.noise_sigma = config.noise_sigma;
  const sim::SimulatedProblem sp = sim::make_problem(
      spec, x_gt, robot, config.mode, sensor, config.shared_sampling);

  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);

  SimulateResult out;
  out.x_gt = x_gt;
  char name[32];
  for (int i = 0; i < config.views; ++i) {
    std::snprintf(name, sizeof name, "view_%02d.ply", i);
    const std::string path = (dir / name).string();
    cloud::save_cloud(sp.problem.clouds[static_cast<std::size_t>(i)], path);
    out.cloud_paths.push_back(path);
  }
  out.pose_path = (dir / "poses.csv").string();
  pose_io::save_poses(robot, out.pose_path);
  out.ground_truth_path = (dir / "ground_truth.csv").string();
  pose_io::save_poses({x_gt}, out.ground_truth_path);
  return out;
}

BenchmarkSummary cmd_benchmark_aa(const RunConfig& config, int runs) {
  if (runs < 1) throw std::invalid_argument("benchmark: runs must be >= 1");
  const reg::CalibrationProblem prob = build_problem(config);

  BenchmarkSummary summary;
  summary.runs.resize(static_cast<std::size_t>(runs));
  parallel_for(summary.runs.size(), [&](std::size_t r) {
    BenchmarkRun& run = summary.runs[r];
    run.seed = derive_seed(config.seed, 6000 + r);
    Rng start_rng(run.seed);
    const Twist6 u0 = config.box.sample(start_rng);
    const reg::RegResult aa = reg::run_aa_icpv(prob, u0, config.max_iters);
    const reg::RegResult plain = reg::run_plain_icpv(prob, u0, config.max_iters);
    run.aa_converged = aa.converged;
    run.plain_converged = plain.converged;
    run.aa_g_calls = aa.g_calls;
    run.plain_g_calls = plain.g_calls;
    run.aa_seconds = aa.elapsed;
    run.plain_seconds = plain.elapsed;
    run.fixed_point_distance =
        geom::se3_distance(geom::pack(aa.x), geom::pack(plain.x), 1.0);
    if (aa.converged && plain.converged && plain.g_calls > 0)
      run.g_call_reduction_percent =
          100.0 * (plain.g_calls - aa.g_calls) / plain.g_calls;
  });

  int accelerated = 0, shared_fp = 0;
  std::vector<double> reductions, speedups;
  for (const auto& run : summary.runs) {
    if (!(run.aa_converged && run.plain_converged)) continue;
    ++summary.both_converged;
    if (run.aa_g_calls < run.plain_g_calls) ++accelerated;
    reductions.push_back(run.g_call_reduction_percent);
    if (run.aa_seconds > 0.0)
      speedups.push_back(100.0 * (run.plain_seconds - run.aa_seconds) /
                         run.aa_seconds);
    if (run.fixed_point_distance < 1e-3) ++shared_fp;
  }
  if (summary.both_converged > 0) {
    summary.accelerated_fraction =
        static_cast<double>(accelerated) / summary.both_converged;
    summary.median_g_call_reduction_percent = median(reductions);
    summary.median_time_speedup_percent = median(speedups);
    summary.shared_fixed_point_fraction =
        static_cast<double>(shared_fp) / summary.both_converged;
  }
  return summary;
}

std::string summary_to_json(const BenchmarkSummary& summary) {
  json runs = json::array();
  for (const auto& run : summary.runs)
    runs.push_back({{"seed", run.seed},
                    {"aa", {{"converged", run.aa_converged},
                            {"g_calls", run.aa_g_calls},
                            {"seconds", run.aa_seconds}}},
                    {"plain", {{"converged", run.plain_converged},
                               {"g_calls", run.plain_g_calls},
                               {"seconds", run.plain_seconds}}},
                    {"g_call_reduction_percent", run.g_call_reduction_percent},
                    {"fixed_point_distance", run.fixed_point_distance}});
  const json j = {
      {"runs", runs},
      {"both_converged", summary.both_converged},
      {"accelerated_fraction", summary.accelerated_fraction},
      {"median_g_call_reduction_percent", summary.median_g_call_reduction_percent},
      {"median_time_speedup_percent", summary.median_time_speedup_percent},
      {"shared_fixed_point_fraction", summary.shared_fixed_point_fraction}};
  return j.dump(2) + "\n";
}

AssessMetrics cmd_assess(const std::string& poses_path,
                         const std::string& ground_truth_path) {
  const auto poses = pose_io::load_poses(poses_path);
  if (poses.size() < 2)
    throw std::invalid_argument("assess: needs at least 2 measured poses, got " +
                                std::to_string(poses.size()));
  std::vector<assess::PoseSample> samples;
  samples.reserve(poses.size());
  for (const auto& p : poses) samples.push_back({p.r, p.t});

  AssessMetrics m;
  m.sample_count = poses.size();
  m.err_rotation_deg = assess::err_rotation(samples);
  m.err_translation_mm = assess::err_translation(samples);

  if (!ground_truth_path.empty()) {
    const auto gt = pose_io::load_poses(ground_truth_path);
    if (gt.size() != 1)
      throw std::invalid_argument(
          "assess: ground-truth file must hold exactly one pose, got " +
          std::to_string(gt.size()));
    std::vector<geom::RotationMatrix> rs;
    Eigen::Vector3d mean_t = Eigen::Vector3d::Zero();
    for (const auto& p : poses) {
      rs.push_back(p.r);
      mean_t += p.t;
    }
    mean_t /= static_cast<double>(poses.size());
    const RigidTransform mean{geom::rotation_mean(rs), mean_t};
    const auto [angle, distance] = assess::compare_to_ground_truth(mean, gt[0]);
    m.has_ground_truth = true;
    m.gt_angle_deg = angle;
    m.gt_distance_mm = distance;
  }
  return m;
}

std::string metrics_to_json(const AssessMetrics& metrics) {
  json j = {{"samples", metrics.sample_count},
            {"err_rotation_deg", metrics.err_rotation_deg},
            {"err_translation_mm", metrics.err_translation_mm}};
  if (metrics.has_ground_truth)
    j["ground_truth"] = {{"angle_deg", metrics.gt_angle_deg},
                         {"distance_mm", metrics.gt_distance_mm}};
  return j.dump(2) + "\n";
}

}  // namespace reghec::cli
