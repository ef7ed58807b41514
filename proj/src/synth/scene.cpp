#include "lumen/synth/scene.hpp"

#include "lumen/random.hpp"

#include <cmath>
#include <numbers>

namespace lumen::synth {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double unit(std::uint64_t seed, std::uint64_t tag) { return static_cast<double>(derive_seed(seed, tag) >> 11) * 0x1.0p-53; }
}  // namespace

void TubeScene::validate() const {
  if (!(length > 0) || !(base_radius > 0)) throw ConfigError("tube scene: length and radius must be positive");
  if (!(fold_amplitude >= 0 && fold_amplitude <= 0.8)) throw ConfigError("tube scene: fold_amplitude must lie in [0, 0.8]");
  if (!(fold_period > 0)) throw ConfigError("tube scene: fold_period must be positive");
  if (!std::isfinite(fold_phase_jitter)) throw ConfigError("tube scene: fold_phase_jitter must be finite");
}

double TubeScene::jitter(double theta) const {
  const double p1 = kTwoPi * unit(seed, 1);
  const double p2 = kTwoPi * unit(seed, 2);
  return fold_phase_jitter * (0.6 * std::sin(theta + p1) + 0.4 * std::sin(2.0 * theta + p2));
}

double TubeScene::jitter_derivative(double theta) const {
  const double p1 = kTwoPi * unit(seed, 1);
  const double p2 = kTwoPi * unit(seed, 2);
  return fold_phase_jitter * (0.6 * std::cos(theta + p1) + 0.8 * std::cos(2.0 * theta + p2));
}

double TubeScene::radius(double z, double theta) const {
  const double s = std::sin(kTwoPi * z / fold_period + jitter(theta));
  return base_radius * (1.0 - fold_amplitude * std::max(0.0, s));
}

Eigen::Vector2d TubeScene::radius_gradient(double z, double theta) const {
  const double phase = kTwoPi * z / fold_period + jitter(theta);
  if (std::sin(phase) <= 0) return Eigen::Vector2d::Zero();
  const double k = -base_radius * fold_amplitude * std::cos(phase);
  return {k * kTwoPi / fold_period, k * jitter_derivative(theta)};
}

Vec3 TubeScene::surface_normal(double z, double theta) const {
  const double r = radius(z, theta);
  const Eigen::Vector2d g = radius_gradient(z, theta);
  const double c = std::cos(theta), s = std::sin(theta);
  const Vec3 dz(g[0] * c, g[0] * s, 1.0);
  const Vec3 dtheta(g[1] * c - r * s, g[1] * s + r * c, 0.0);
  Vec3 n = dz.cross(dtheta);  // points toward the axis
  return n.normalized();
}

bool TubeScene::contains(const Vec3& p) const {
  if (p.z() < 0 || p.z() > length) return false;
  const double rho = std::hypot(p.x(), p.y());
  return rho < radius(p.z(), std::atan2(p.y(), p.x()));
}

TriangleMesh build_mesh(const TubeScene& scene, int axial_steps, int radial_steps) {
  scene.validate();
  if (axial_steps < 8 || radial_steps < 8) throw ConfigError("build_mesh: need at least 8 axial and radial steps");
  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>((axial_steps + 1) * radial_steps));
  for (int i = 0; i <= axial_steps; ++i) {
    const double z = scene.length * i / axial_steps;
    for (int j = 0; j < radial_steps; ++j) {
      const double theta = kTwoPi * j / radial_steps;
      const double r = scene.radius(z, theta);
      mesh.vertices.emplace_back(r * std::cos(theta), r * std::sin(theta), z);
    }
  }
  auto id = [radial_steps](int i, int j) { return i * radial_steps + (j % radial_steps); };
  mesh.faces.reserve(static_cast<std::size_t>(2 * axial_steps * radial_steps));
  for (int i = 0; i < axial_steps; ++i)
    for (int j = 0; j < radial_steps; ++j) {
      const int a = id(i, j), b = id(i, j + 1), c = id(i + 1, j), d = id(i + 1, j + 1);
      mesh.faces.emplace_back(a, c, b);
      mesh.faces.emplace_back(b, c, d);
    }
  mesh.visible.assign(mesh.faces.size(), 0);
  return mesh;
}

Vec3 CameraPose::right() const {
  const Vec3 ref = std::abs(forward.dot(Vec3::UnitY())) < 0.99 ? Vec3::UnitY() : Vec3::UnitX();
  return ref.cross(forward).normalized();
}

Vec3 CameraPose::up() const { return forward.cross(right()).normalized(); }

Vec3 CameraPose::ray_direction(double u, double v) const {
  const double t = std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
  return (forward + (2.0 * u - 1.0) * t * right() + (1.0 - 2.0 * v) * t * up()).normalized();
}

bool CameraPose::in_frustum(const Vec3& p) const {
  const Vec3 d = p - position;
  const double zc = d.dot(forward);
  if (zc <= 0) return false;
  const double t = std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
  return std::abs(d.dot(right())) <= zc * t && std::abs(d.dot(up())) <= zc * t;
}

void CameraTrajectory::validate(const TubeScene& scene) const {
  for (const auto& p : poses) {
    if (!scene.contains(p.position)) throw ConfigError("camera pose outside the tube");
    if (std::abs(p.forward.norm() - 1.0) > 1e-9) throw ConfigError("camera direction is not unit length");
    if (!(p.fov_deg > 0 && p.fov_deg < 180)) throw ConfigError("camera fov must lie in (0, 180)");
  }
}

CameraTrajectory make_trajectory(const TubeScene& scene, const TrajectoryOptions& opts) {
  if (opts.poses < 1) throw ConfigError("trajectory: need at least one pose");
  const double last = scene.length - opts.end_margin;
  if (!(last >= opts.start)) throw ConfigError("trajectory: tube too short for the requested span");
  RandomStream rng(derive_seed(opts.seed, 0x7472616a));
  CameraTrajectory traj;
  for (int k = 0; k < opts.poses; ++k) {
    const double z = opts.poses == 1 ? opts.start : opts.start + (last - opts.start) * k / (opts.poses - 1);
    CameraPose pose;
    pose.fov_deg = opts.fov_deg;
    const double ang = kTwoPi * rng.uniform();
    const double off = opts.lateral_jitter * scene.base_radius * rng.uniform();
    pose.position = Vec3(off * std::cos(ang), off * std::sin(ang), z);
    const double tilt = opts.direction_jitter * std::numbers::pi / 180.0 * rng.uniform();
    const double tilt_dir = kTwoPi * rng.uniform();
    Vec3 f(std::sin(tilt) * std::cos(tilt_dir), std::sin(tilt) * std::sin(tilt_dir), std::cos(tilt));
    if (opts.backward) f.z() = -f.z();
    pose.forward = f.normalized();
    traj.poses.push_back(pose);
  }
  traj.validate(scene);
  return traj;
}

}  // namespace lumen::synth
