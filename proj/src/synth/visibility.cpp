#include "lumen/synth/visibility.hpp"

namespace lumen::synth {

std::vector<std::uint8_t> mark_visibility(const MeshIntersector& bvh, const CameraTrajectory& trajectory,
                                          const VisibilityOptions& opts) {
  const TriangleMesh& mesh = bvh.mesh();
  std::vector<std::uint8_t> visible(static_cast<std::size_t>(mesh.face_count()), 0);
  for (const CameraPose& pose : trajectory.poses) {
    if (opts.mode == VisibilityMode::centroid) {
      for (Index f = 0; f < mesh.face_count(); ++f) {
        if (visible[static_cast<std::size_t>(f)]) continue;
        const Vec3 c = mesh.centroid(f);
        if (!pose.in_frustum(c)) continue;
        const Ray ray{pose.position, (c - pose.position).normalized()};
        if (auto hit = bvh.nearest(ray); hit && hit->face == f) visible[static_cast<std::size_t>(f)] = 1;
      }
    } else {
      const int n = opts.image_size * opts.supersample;
      if (n <= 0) throw ConfigError("mark_visibility: image_size and supersample must be positive");
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const Ray ray{pose.position, pose.ray_direction((x + 0.5) / n, (y + 0.5) / n)};
          if (auto hit = bvh.nearest(ray)) visible[static_cast<std::size_t>(hit->face)] = 1;
        }
    }
  }
  return visible;
}

void mark_visibility(TriangleMesh& mesh, const CameraTrajectory& trajectory, const VisibilityOptions& opts) {
  const MeshIntersector bvh(mesh);
  mesh.visible = mark_visibility(bvh, trajectory, opts);
}

}  // namespace lumen::synth
