#pragma once

#include "lumen/synth/raycast.hpp"

#include <cstdint>
#include <vector>

namespace lumen::synth {

enum class VisibilityMode {
  centroid,  // one sight ray per in-frustum face centroid per pose
  pixel,     // supersampled per-pixel primary rays
};

struct VisibilityOptions {
  VisibilityMode mode = VisibilityMode::centroid;
  int image_size = 64;
  int supersample = 2;  // pixel mode: supersample^2 rays per pixel
};

/// Per-face flags: 1 when the face is the nearest hit of at least one sight
/// ray from at least one pose. Zero flags form the missed set.
std::vector<std::uint8_t> mark_visibility(const MeshIntersector& bvh, const CameraTrajectory& trajectory,
                                          const VisibilityOptions& opts = {});

/// Convenience overload: builds the acceleration structure and stores the
/// flags in mesh.visible.
void mark_visibility(TriangleMesh& mesh, const CameraTrajectory& trajectory, const VisibilityOptions& opts = {});

}  // namespace lumen::synth
