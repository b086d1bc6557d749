#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "reghec/assess.hpp"
#include "reghec/boia.hpp"
#include "reghec/cli.hpp"
#include "reghec/geom.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using reghec::geom::RigidTransform;
using reghec::geom::Twist6;

RigidTransform transform_of(const Eigen::Matrix4d& m) {
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("pose matrix must end with row 0,0,0,1");
  return {reghec::geom::RotationMatrix(m.topLeftCorner<3, 3>()),
          m.topRightCorner<3, 1>()};
}

std::vector<reghec::assess::PoseSample> samples_of(
    const std::vector<Eigen::Matrix4d>& poses) {
  std::vector<reghec::assess::PoseSample> out;
  out.reserve(poses.size());
  for (const auto& m : poses) {
    const RigidTransform x = transform_of(m);
    out.push_back({x.r, x.t});
  }
  return out;
}

py::dict json_dict(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

reghec::cli::RunConfig config_of(const py::object& config) {
  if (py::isinstance<py::str>(config))
    return reghec::cli::load_config(config.cast<std::string>());
  if (py::isinstance<py::dict>(config)) {
    const std::string text =
        py::module_::import("json").attr("dumps")(config).cast<std::string>();
    return reghec::cli::parse_config(text, "<config>");
  }
  throw std::invalid_argument("config must be a dict or a path string");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multiview point-set registration for robotic hand-eye calibration";

  m.def(
      "so3_exp",
      [](const Eigen::Vector3d& w) { return reghec::geom::so3_exp(w).matrix(); },
      "w"_a, "Rotation matrix of an axis-angle vector (radians).");
  m.def(
      "so3_log",
      [](const Eigen::Matrix3d& r) {
        return reghec::geom::so3_log(reghec::geom::RotationMatrix(r));
      },
      "r"_a, "Principal axis-angle vector of a rotation matrix.");
  m.def("se3_distance", &reghec::geom::se3_distance, "a"_a, "b"_a, "alpha_t"_a,
        "Rotation geodesic plus alpha_t^2 times translation distance between "
        "two twists.");
  m.def(
      "kernel_se3",
      [](const Twist6& a, const Twist6& b, double sigma, double ell,
         double alpha_t) {
        return reghec::boia::kernel_se3(a, b, {sigma, ell, alpha_t});
      },
      "a"_a, "b"_a, py::kw_only(), "sigma"_a = 1.0, "ell"_a = 1.0,
      "alpha_t"_a = 1.0,
      "Covariance between two twists under the rotation-aware kernel.");

  m.def(
      "err_rotation",
      [](const std::vector<Eigen::Matrix4d>& poses) {
        return reghec::assess::err_rotation(samples_of(poses));
      },
      "poses"_a, "Rotation spread of repeated pose measurements, degrees.");
  m.def(
      "err_translation",
      [](const std::vector<Eigen::Matrix4d>& poses) {
        return reghec::assess::err_translation(samples_of(poses));
      },
      "poses"_a, "Translation spread of repeated pose measurements, mm.");
  m.def(
      "compare_to_ground_truth",
      [](const Eigen::Matrix4d& estimate, const Eigen::Matrix4d& truth) {
        return reghec::assess::compare_to_ground_truth(transform_of(estimate),
                                                       transform_of(truth));
      },
      "estimate"_a, "truth"_a,
      "(rotation error in degrees, translation error in mm).");

  m.def(
      "simulate",
      [](const std::string& out_dir, const std::string& scene, int views,
         double noise, std::uint64_t seed, double density,
         const py::object& dims, const std::string& mode,
         bool shared_sampling) {
        reghec::cli::SimulateConfig config;
        config.kind = reghec::cli::scene_from_name(scene);
        config.views = views;
        config.noise_sigma = noise;
        config.seed = seed;
        config.sample_density = density;
        config.mode = reghec::cli::mode_from_name(mode);
        config.shared_sampling = shared_sampling;
        config.out_dir = out_dir;
        if (!dims.is_none()) {
          const auto v = dims.cast<std::vector<double>>();
          if (v.empty() || v.size() > 3)
            throw std::invalid_argument("dims must hold 1 to 3 values");
          for (std::size_t i = 0; i < v.size(); ++i)
            config.dimensions[static_cast<int>(i)] = v[i];
        }
        reghec::cli::SimulateResult result;
        {
          py::gil_scoped_release release;
          result = reghec::cli::cmd_simulate(config);
        }
        py::dict out;
        out["clouds"] = result.cloud_paths;
        out["poses"] = result.pose_path;
        out["ground_truth"] = result.ground_truth_path;
        out["x_gt"] = result.x_gt.matrix4();
        return out;
      },
      "out_dir"_a, py::kw_only(), "scene"_a = "sphere", "views"_a = 9,
      "noise"_a = 0.0005, "seed"_a = 7, "density"_a = 2e5,
      "dims"_a = py::none(), "mode"_a = "eye-in-hand",
      "shared_sampling"_a = false,
      "Write a synthetic fixture (PLY views, poses.csv, ground_truth.csv).");

  m.def(
      "calibrate",
      [](const py::object& config) {
        const reghec::cli::RunConfig run = config_of(config);
        reghec::cli::CalibrationReport report;
        {
          py::gil_scoped_release release;
          report = reghec::cli::cmd_calibrate(run);
        }
        return json_dict(reghec::cli::report_to_json(report));
      },
      "config"_a,
      "Run the calibration pipeline from a config dict or JSON file path; "
      "returns the report as a dict.");

  m.def(
      "benchmark_aa",
      [](const py::object& config, int runs) {
        const reghec::cli::RunConfig run = config_of(config);
        reghec::cli::BenchmarkSummary summary;
        {
          py::gil_scoped_release release;
          summary = reghec::cli::cmd_benchmark_aa(run, runs);
        }
        return json_dict(reghec::cli::summary_to_json(summary));
      },
      "config"_a, "runs"_a = 100,
      "Accelerated vs plain refinement from seeded random starts.");

  m.def(
      "assess",
      [](const std::string& poses, const std::string& ground_truth) {
        reghec::cli::AssessMetrics metrics;
        {
          py::gil_scoped_release release;
          metrics = reghec::cli::cmd_assess(poses, ground_truth);
        }
        return json_dict(reghec::cli::metrics_to_json(metrics));
      },
      "poses"_a, "ground_truth"_a = "",
      "Repeatability metrics of a pose CSV, optionally against a single "
      "reference pose.");
}
