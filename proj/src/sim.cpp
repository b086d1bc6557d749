#include "reghec/sim.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>

#include "reghec/errors.hpp"
#include "reghec/rng.hpp"

namespace reghec::sim {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegenerateAngle = 0.5 * kPi / 180.0;

std::size_t count_for(double density, double area) {
  return static_cast<std::size_t>(std::ceil(density * area));
}

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

void append_plane(Scene& s, double wx, double wy, double density, Rng& rng,
                  const RigidTransform& place) {
  const auto n = count_for(density, wx * wy);
  const Eigen::Vector3d normal = place.r * Eigen::Vector3d(0, 0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d p(wx * (rng.uniform() - 0.5), wy * (rng.uniform() - 0.5), 0.0);
    s.points.points.push_back(place * p);
    s.normals.push_back(normal);
  }
}

void append_sphere(Scene& s, double r, double density, Rng& rng,
                   const RigidTransform& place) {
  const auto n = count_for(density, 4.0 * kPi * r * r);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
    double len = dir.norm();
    while (len < 1e-12) {  // nearly impossible, but keeps the draw valid
      dir = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
      len = dir.norm();
    }
    dir /= len;
    s.points.points.push_back(place * (r * dir));
    s.normals.push_back(place.r * dir);
  }
}

// Lateral wall plus top cap; base sits on z=0.
void append_cylinder(Scene& s, double r, double h, double density, Rng& rng,
                     const RigidTransform& place) {
  const double lateral = 2.0 * kPi * r * h;
  const double cap = kPi * r * r;
  const auto n = count_for(density, lateral + cap);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() * (lateral + cap) < lateral) {
      const double phi = 2.0 * kPi * rng.uniform();
      const Eigen::Vector3d p(r * std::cos(phi), r * std::sin(phi), h * rng.uniform());
      s.points.points.push_back(place * p);
      s.normals.push_back(place.r * Eigen::Vector3d(std::cos(phi), std::sin(phi), 0));
    } else {
      const double rho = r * std::sqrt(rng.uniform());
      const double phi = 2.0 * kPi * rng.uniform();
      const Eigen::Vector3d p(rho * std::cos(phi), rho * std::sin(phi), h);
      s.points.points.push_back(place * p);
      s.normals.push_back(place.r * Eigen::Vector3d(0, 0, 1));
    }
  }
}

// Lateral surface only; base on z=0, apex at (0,0,h). Area-uniform sampling
// puts the slant-distance fraction from the apex at sqrt(U).
void append_cone(Scene& s, double r, double h, double density, Rng& rng,
                 const RigidTransform& place) {
  const double slant = std::sqrt(r * r + h * h);
  const auto n = count_for(density, kPi * r * slant);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::sqrt(rng.uniform());
    const double phi = 2.0 * kPi * rng.uniform();
    const Eigen::Vector3d p(r * t * std::cos(phi), r * t * std::sin(phi), h * (1.0 - t));
    s.points.points.push_back(place * p);
    const Eigen::Vector3d raw(h * std::cos(phi), h * std::sin(phi), r);
    s.normals.push_back(place.r * raw.normalized());
  }
}

RigidTransform at(double x, double y, double z) {
  RigidTransform t;
  t.t = Eigen::Vector3d(x, y, z);
  return t;
}

}  // namespace

void SceneSpec::validate() const {
  require(sample_density > 0.0, "scene spec: density must be positive");
  const auto& d = dimensions;
  switch (kind) {
    case SceneKind::plane:
      require(d[0] > 0.0 && d[1] > 0.0, "scene spec: plane extents must be positive");
      break;
    case SceneKind::sphere:
      require(d[0] > 0.0, "scene spec: sphere radius must be positive");
      break;
    case SceneKind::cylinder:
    case SceneKind::cone:
      require(d[0] > 0.0 && d[1] > 0.0,
              "scene spec: radius and height must be positive");
      break;
    case SceneKind::cluster:
      require(d[0] > 0.0, "scene spec: cluster scale must be positive");
      break;
    case SceneKind::point_blob:
      require(d[0] > 0.0, "scene spec: blob deviation must be positive");
      break;
    default:
      throw std::invalid_argument("scene spec: unknown kind");
  }
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Scene s;
  Rng rng(spec.seed);
  const auto& d = spec.dimensions;
  const RigidTransform origin;
  switch (spec.kind) {
    case SceneKind::plane:
      append_plane(s, d[0], d[1], spec.sample_density, rng, origin);
      break;
    case SceneKind::sphere:
      append_sphere(s, d[0], spec.sample_density, rng, origin);
      break;
    case SceneKind::cylinder:
      append_cylinder(s, d[0], d[1], spec.sample_density, rng, origin);
      break;
    case SceneKind::cone:
      append_cone(s, d[0], d[1], spec.sample_density, rng, origin);
      break;
    case SceneKind::cluster: {
      // Tabletop arrangement of the three solids, scaled uniformly.
      const double k = d[0];
      append_sphere(s, 0.04 * k, spec.sample_density, rng,
                    at(-0.07 * k, 0.0, 0.04 * k));
      append_cylinder(s, 0.03 * k, 0.10 * k, spec.sample_density, rng,
                      at(0.05 * k, -0.04 * k, 0.0));
      append_cone(s, 0.035 * k, 0.09 * k, spec.sample_density, rng,
                  at(0.03 * k, 0.07 * k, 0.0));
      break;
    }
    case SceneKind::point_blob: {
      // Volumetric Gaussian; (2*sigma)^2 stands in for surface area.
      const auto n = count_for(spec.sample_density, 4.0 * d[0] * d[0]);
      for (std::size_t i = 0; i < n; ++i)
        s.points.points.push_back(d[0] *
                                  Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));
      break;
    }
    default:
      throw std::invalid_argument("generate_scene: unknown kind");
  }
  return s;
}

void SensorModel::validate() const {
  require(fov_deg > 0.0 && fov_deg < 180.0, "sensor: fov must be in (0,180)");
  require(min_range >= 0.0 && max_range > min_range, "sensor: invalid range");
  require(noise_sigma >= 0.0, "sensor: noise_sigma must be >= 0");
}

namespace {

// Core of render_view that also reports which scene points survived.
cloud::PointCloud render_indexed(const Scene& scene, const RigidTransform& pose,
                                 const SensorModel& sensor, std::uint64_t seed,
                                 std::vector<std::uint32_t>* kept) {
  sensor.validate();
  const RigidTransform inv = pose.inverse();
  const double cos_half = std::cos(0.5 * sensor.fov_deg * kPi / 180.0);
  const bool oriented = !scene.normals.empty();
  cloud::PointCloud out;
  for (std::size_t j = 0; j < scene.points.size(); ++j) {
    const Eigen::Vector3d& p = scene.points.points[j];
    if (oriented && (p - pose.t).dot(scene.normals[j]) >= 0.0) continue;
    const Eigen::Vector3d q = inv * p;
    const double dist = q.norm();
    if (dist < sensor.min_range || dist > sensor.max_range) continue;
    if (q[2] < dist * cos_half) continue;  // outside the view cone
    out.points.push_back(q);
    if (kept) kept->push_back(static_cast<std::uint32_t>(j));
  }
  if (out.empty())
    throw DegenerateGeometryError("render_view: no visible points");
  if (sensor.noise_sigma > 0.0) {
    Rng rng(seed);
    for (auto& q : out.points)
      q += sensor.noise_sigma * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  }
  return out;
}

}  // namespace

cloud::PointCloud render_view(const Scene& scene, const RigidTransform& sensor_pose,
                              const SensorModel& sensor, std::uint64_t seed) {
  return render_indexed(scene, sensor_pose, sensor, seed, nullptr);
}

PoseValidation validate_poses(const std::vector<RigidTransform>& poses) {
  PoseValidation v;
  if (poses.size() < 3) v.too_few = true;
  std::vector<Eigen::Vector3d> axes;
  for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
    const RigidTransform motion = poses[i + 1] * poses[i].inverse();
    const Eigen::Vector3d w = geom::so3_log(motion.r);
    const double angle = w.norm();
    if (angle < kDegenerateAngle)
      v.pure_translation = true;
    else
      axes.push_back(w / angle);
  }
  if (axes.size() >= 2) {  // fewer usable axes is already covered by the flags above
    bool all_parallel = true;
    for (std::size_t a = 0; a < axes.size() && all_parallel; ++a)
      for (std::size_t b = a + 1; b < axes.size(); ++b) {
        const double c = std::min(1.0, std::abs(axes[a].dot(axes[b])));
        if (std::acos(c) >= kDegenerateAngle) {
          all_parallel = false;
          break;
        }
      }
    v.parallel_axes = all_parallel;
  }
  return v;
}

std::string PoseValidation::describe() const {
  if (ok()) return "ok";
  std::string out;
  auto add = [&out](const char* name) {
    if (!out.empty()) out += ", ";
    out += name;
  };
  if (too_few) add("single robot motion");
  if (pure_translation) add("pure translation motion");
  if (parallel_axes) add("parallel rotation axes");
  return out;
}

std::vector<RigidTransform> default_trajectory(const RigidTransform& x_gt,
                                               std::uint64_t seed, int count,
                                               double standoff) {
  require(count >= 3, "default_trajectory: needs at least 3 poses");
  require(standoff > 0.0, "default_trajectory: standoff must be positive");
  Rng rng(derive_seed(seed, 77));
  const RigidTransform x_inv = x_gt.inverse();
  std::vector<RigidTransform> poses;
  poses.reserve(static_cast<std::size_t>(count));
  const double elevations[3] = {35.0, 55.0, 75.0};
  for (int i = 0; i < count; ++i) {
    const double az = 2.0 * kPi * i / count + rng.uniform(-0.15, 0.15);
    const double el =
        (elevations[i % 3] + rng.uniform(-5.0, 5.0)) * kPi / 180.0;
    const double rho = standoff + rng.uniform(-0.05, 0.05);
    const Eigen::Vector3d eye(rho * std::cos(el) * std::cos(az),
                              rho * std::cos(el) * std::sin(az),
                              rho * std::sin(el));
    const Eigen::Vector3d target(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                                 rng.uniform(-0.02, 0.02));
    const Eigen::Vector3d z = (target - eye).normalized();
    Eigen::Vector3d up(0, 0, 1);
    if (std::abs(z.dot(up)) > 0.99) up = Eigen::Vector3d(1, 0, 0);
    const Eigen::Vector3d x = up.cross(z).normalized();
    const Eigen::Vector3d y = z.cross(x);
    Eigen::Matrix3d r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    RigidTransform look;
    look.r = geom::RotationMatrix(r);
    look.t = eye;
    poses.push_back(look * x_inv);  // flange pose whose sensor frame is `look`
  }
  return poses;
}

SimulatedProblem make_problem(const SceneSpec& spec, const RigidTransform& x_gt,
                              const std::vector<RigidTransform>& robot_poses,
                              reg::Mode mode, const SensorModel& sensor,
                              bool shared_points) {
  if (mode == reg::Mode::eye_to_hand) {
    std::vector<RigidTransform> inverted;
    inverted.reserve(robot_poses.size());
    for (const auto& a : robot_poses) inverted.push_back(a.inverse());
    SimulatedProblem sp =
        make_problem(spec, x_gt, inverted, reg::Mode::eye_in_hand, sensor, shared_points);
    sp.problem.mode = reg::Mode::eye_to_hand;
    return sp;
  }

  const PoseValidation report = validate_poses(robot_poses);
  if (!report.ok())
    throw std::invalid_argument("make_problem: degenerate poses: " + report.describe());
  sensor.validate();

  SimulatedProblem sp;
  sp.x_gt = x_gt;
  const Scene world = generate_scene(spec);
  sp.scene = world.points;
  sp.visible.resize(robot_poses.size());

  sp.problem.mode = reg::Mode::eye_in_hand;
  sp.problem.poses = robot_poses;
  sp.problem.clouds.reserve(robot_poses.size());
  for (std::size_t i = 0; i < robot_poses.size(); ++i) {
    const RigidTransform sensor_pose = robot_poses[i] * x_gt;
    const std::uint64_t noise_seed = derive_seed(spec.seed, 500 + i);
    cloud::PointCloud view;
    if (shared_points) {
      view = render_indexed(world, sensor_pose, sensor, noise_seed, &sp.visible[i]);
    } else {
      SceneSpec local = spec;
      local.seed = derive_seed(spec.seed, 1000 + i);
      view = render_indexed(generate_scene(local), sensor_pose, sensor, noise_seed,
                            nullptr);
    }
    view.view = static_cast<int>(i);
    sp.problem.clouds.push_back(std::move(view));
  }
  return sp;
}

}  // namespace reghec::sim
