#pragma once

#include "lumen/tensor.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

namespace lumen::synth {

using Vec3 = Eigen::Vector3d;

/// Parametric colon stand-in: a straight tube along +z whose wall bulges
/// inward in periodic haustral-like folds,
///   r(z, theta) = R (1 - A max(0, sin(2 pi z / P + jitter(theta)))).
struct TubeScene {
  double length = 14.0;
  double base_radius = 1.0;
  double fold_amplitude = 0.5;  // fraction of the radius, in [0, 0.8]
  double fold_period = 2.0;
  double fold_phase_jitter = 0.6;  // radians
  std::uint64_t seed = 0;

  void validate() const;
  double radius(double z, double theta) const;
  /// d r / d z and d r / d theta.
  Eigen::Vector2d radius_gradient(double z, double theta) const;
  /// Inward unit normal of the analytic surface.
  Vec3 surface_normal(double z, double theta) const;
  double jitter(double theta) const;
  double jitter_derivative(double theta) const;
  bool contains(const Vec3& p) const;
};

/// Indexed triangle mesh of the tube interior with per-face visibility flags.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> faces;
  std::vector<std::uint8_t> visible;  // filled by mark_visibility

  Index face_count() const { return static_cast<Index>(faces.size()); }
  const Vec3& corner(Index f, int k) const { return vertices[static_cast<std::size_t>(faces[static_cast<std::size_t>(f)][k])]; }
  Vec3 centroid(Index f) const { return (corner(f, 0) + corner(f, 1) + corner(f, 2)) / 3.0; }
  /// Unnormalized geometric normal from the winding.
  Vec3 normal(Index f) const { return (corner(f, 1) - corner(f, 0)).cross(corner(f, 2) - corner(f, 0)); }
};

/// 2 * axial_steps * radial_steps triangles, vertices exactly on r(z, theta),
/// wound so every normal points toward the axis. Both ends are open.
TriangleMesh build_mesh(const TubeScene& scene, int axial_steps, int radial_steps);

struct CameraPose {
  Vec3 position = Vec3::Zero();
  Vec3 forward = Vec3::UnitZ();
  double fov_deg = 90.0;

  Vec3 right() const;
  Vec3 up() const;
  /// Primary ray direction through normalized image coords u, v in [0, 1].
  Vec3 ray_direction(double u, double v) const;
  /// True when p projects inside the square image.
  bool in_frustum(const Vec3& p) const;
};

struct CameraTrajectory {
  std::vector<CameraPose> poses;
  void validate(const TubeScene& scene) const;
};

struct TrajectoryOptions {
  int poses = 50;
  double start = 0.5;       // world z of the first pose
  double end_margin = 4.0;  // distance kept between the last pose and the far end
  double fov_deg = 90.0;
  double lateral_jitter = 0.0;    // max centerline offset, fraction of the radius
  double direction_jitter = 0.0;  // max tilt of the view direction, degrees
  bool backward = false;          // look toward -z instead of +z
  std::uint64_t seed = 0;
};

/// Evenly spaced poses along the centerline, optionally jittered.
CameraTrajectory make_trajectory(const TubeScene& scene, const TrajectoryOptions& opts);

}  // namespace lumen::synth
