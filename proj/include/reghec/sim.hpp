#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reghec/cloud.hpp"
#include "reghec/geom.hpp"
#include "reghec/reg.hpp"

namespace reghec::sim {

using geom::RigidTransform;

enum class SceneKind { plane, sphere, cylinder, cone, cluster, point_blob };

// dimensions are kind-specific, in meters:
//   plane     x,y extents          sphere    radius
//   cylinder  radius, height       cone      base radius, height
//   cluster   scale factor         point_blob std deviation
struct SceneSpec {
  SceneKind kind = SceneKind::plane;
  Eigen::Vector3d dimensions{0.21, 0.30, 0.0};
  double sample_density = 2e5;  // points per m^2
  std::uint64_t seed = 0;

  void validate() const;  // throws invalid_argument
};

// Surface sampling with outward normals; normals is empty for point_blob
// (no oriented surface), otherwise parallel to points.
struct Scene {
  cloud::PointCloud points;
  std::vector<Eigen::Vector3d> normals;
};

Scene generate_scene(const SceneSpec& spec);

struct SensorModel {
  double fov_deg = 60.0;
  double min_range = 0.1;  // meters
  double max_range = 2.0;
  double noise_sigma = 0.0005;

  void validate() const;  // fov in (0,180), 0 <= min < max, sigma >= 0
};

// Culls the scene against the view cone, range and (when normals exist)
// back-facing surfaces, then adds isotropic Gaussian noise in the sensor
// frame. Throws DegenerateGeometryError when nothing is visible.
cloud::PointCloud render_view(const Scene& scene, const RigidTransform& sensor_pose,
                              const SensorModel& sensor, std::uint64_t seed);

struct PoseValidation {
  bool too_few = false;           // fewer than 3 poses: a single motion at most
  bool pure_translation = false;  // some motion rotates less than 0.5 degrees
  bool parallel_axes = false;     // all rotation axes pairwise within 0.5 degrees
  bool ok() const { return !(too_few || pure_translation || parallel_axes); }
  std::string describe() const;   // comma-joined flag names, "ok" when clean
};

PoseValidation validate_poses(const std::vector<RigidTransform>& poses);

// Flange poses whose sensor frames (pose * x_gt) look at the scene origin
// from jittered directions on a viewing hemisphere; consecutive motions get
// distinct, non-parallel rotation axes by construction.
std::vector<RigidTransform> default_trajectory(const RigidTransform& x_gt,
                                               std::uint64_t seed, int count = 9,
                                               double standoff = 0.45);

struct SimulatedProblem {
  reg::CalibrationProblem problem;
  RigidTransform x_gt;
  cloud::PointCloud scene;  // world-frame reference sampling
  // Per view, indices into scene of the rendered points. Filled only in
  // shared-point mode; independent resampling leaves the maps empty.
  std::vector<std::vector<std::uint32_t>> visible;
};

// Builds views with sensor pose robot_poses[i] * x_gt. Eye-to-hand scenes
// ride on the flange with the sensor fixed at x_gt from the base, which is
// the same construction with every robot pose inverted; the stored poses
// are those inverses. shared_points makes all views cull one world sampling
// so exact overlap correspondences exist; otherwise each view resamples the
// surface independently.
SimulatedProblem make_problem(const SceneSpec& spec, const RigidTransform& x_gt,
                              const std::vector<RigidTransform>& robot_poses,
                              reg::Mode mode, const SensorModel& sensor = {},
                              bool shared_points = false);

}  // namespace reghec::sim
