#pragma once

#include "lumen/image.hpp"
#include "lumen/synth/raycast.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace lumen::synth {

struct RenderOptions {
  int image_size = 64;
  double opacity = 0.6;  // alpha of the green missed-surface overlay
  double ambient = 0.15;
  double falloff = 0.08;  // headlight attenuation 1 / (1 + falloff d^2)
  Vec3 vc_tint{0.95, 0.72, 0.70};
  bool specular = true;  // OC renders only
};

/// Per-pixel nearest hits of the primary rays. Misses have face -1 and
/// infinite depth.
struct PrimaryHits {
  int size = 0;
  std::vector<Hit> hits;
  std::vector<Vec3> points;

  double depth(int y, int x) const {
    const Hit& h = hits[static_cast<std::size_t>(y * size + x)];
    return h.face < 0 ? std::numeric_limits<double>::infinity() : h.distance;
  }
};

PrimaryHits trace_primary(const MeshIntersector& bvh, const CameraPose& pose, int size);

struct VcFrame {
  RgbImage image;
  MissedMask mask;
  PrimaryHits primary;
};

/// Headlight Lambertian render with a pink-gray tint. Each pixel ray then
/// continues past its first hit; if any later intersection lies on a missed
/// face (flag 0), green is composited at `opacity` and the mask bit is set.
VcFrame render_vc_frame(const MeshIntersector& bvh, const TubeScene& scene, const CameraPose& pose,
                        const std::vector<std::uint8_t>& visible, const RenderOptions& opts = {});

/// Appearance parameters of an OC-style render, drawn from a seed.
struct OcAppearance {
  Vec3 tint;
  double texture_frequency = 3.0;
  double texture_strength = 0.25;
  double light_intensity = 1.0;
  double light_falloff = 0.1;
  Eigen::Vector2d light_offset = Eigen::Vector2d::Zero();  // in camera right/up units of the radius
  double specular_strength = 0.5;
  double shininess = 20.0;
  std::uint64_t texture_seed = 0;

  static OcAppearance sample(std::uint64_t appearance_seed);
};

struct OcFrame {
  RgbImage image;
  PrimaryHits primary;
};

/// Same geometry as the VC render, with procedural-noise albedo, a point light
/// near the camera with distance falloff, Phong specular highlights and a
/// seeded color tint.
OcFrame render_oc_frame(const MeshIntersector& bvh, const TubeScene& scene, const CameraPose& pose,
                        std::uint64_t appearance_seed, const RenderOptions& opts = {});

struct FrameTriple {
  RgbImage vc_image;
  RgbImage oc_image;
  MissedMask missed_mask;
};

FrameTriple render_frame_triple(const MeshIntersector& bvh, const TubeScene& scene, const CameraPose& pose,
                                const std::vector<std::uint8_t>& visible, std::uint64_t appearance_seed,
                                const RenderOptions& opts = {});

/// Smooth periodic-in-theta value noise in [0, 1].
double value_noise(double z, double theta, double frequency, double radius, std::uint64_t seed);

}  // namespace lumen::synth
