#include "lumen/synth/render.hpp"

#include "lumen/random.hpp"

#include <cmath>
#include <numbers>

namespace lumen::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_inside(const TubeScene& scene, const CameraPose& pose) {
  if (!scene.contains(pose.position)) throw ConfigError("render: camera pose outside the tube");
}

double lattice(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  const std::uint64_t h = derive_seed(derive_seed(seed, static_cast<std::uint64_t>(i)), static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

Vec3 hit_normal(const TubeScene& scene, const Vec3& p) { return scene.surface_normal(p.z(), std::atan2(p.y(), p.x())); }

}  // namespace

double value_noise(double z, double theta, double frequency, double radius, std::uint64_t seed) {
  const auto cells = std::max<std::int64_t>(1, std::llround(kTwoPi * radius * frequency));
  double u = (theta / kTwoPi) * static_cast<double>(cells);
  u -= std::floor(u / static_cast<double>(cells)) * static_cast<double>(cells);
  const double v = z * frequency;
  const auto i0 = static_cast<std::int64_t>(std::floor(u));
  const auto j0 = static_cast<std::int64_t>(std::floor(v));
  const double fu = smooth(u - static_cast<double>(i0));
  const double fv = smooth(v - static_cast<double>(j0));
  const std::int64_t i1 = (i0 + 1) % cells;
  const double a = lattice(i0 % cells, j0, seed), b = lattice(i1, j0, seed);
  const double c = lattice(i0 % cells, j0 + 1, seed), d = lattice(i1, j0 + 1, seed);
  return (a * (1 - fu) + b * fu) * (1 - fv) + (c * (1 - fu) + d * fu) * fv;
}

PrimaryHits trace_primary(const MeshIntersector& bvh, const CameraPose& pose, int size) {
  if (size <= 0) throw ConfigError("render: image size must be positive");
  PrimaryHits out;
  out.size = size;
  out.hits.assign(static_cast<std::size_t>(size * size), Hit{});
  out.points.assign(static_cast<std::size_t>(size * size), Vec3::Zero());
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const Vec3 dir = pose.ray_direction((x + 0.5) / size, (y + 0.5) / size);
      if (auto hit = bvh.nearest(Ray{pose.position, dir})) {
        out.hits[static_cast<std::size_t>(y * size + x)] = *hit;
        out.points[static_cast<std::size_t>(y * size + x)] = pose.position + hit->distance * dir;
      }
    }
  return out;
}

VcFrame render_vc_frame(const MeshIntersector& bvh, const TubeScene& scene, const CameraPose& pose,
                        const std::vector<std::uint8_t>& visible, const RenderOptions& opts) {
  require_inside(scene, pose);
  if (visible.size() != static_cast<std::size_t>(bvh.mesh().face_count()))
    throw ConfigError("render_vc_frame: visibility flags do not match the mesh");
  const int size = opts.image_size;
  VcFrame frame;
  frame.primary = trace_primary(bvh, pose, size);
  frame.image = RgbImage(size, size);
  frame.mask = MissedMask(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const std::size_t k = static_cast<std::size_t>(y * size + x);
      const Hit& hit = frame.primary.hits[k];
      if (hit.face < 0) continue;
      const Vec3 dir = pose.ray_direction((x + 0.5) / size, (y + 0.5) / size);
      const Vec3& p = frame.primary.points[k];
      const double lambert = std::max(0.0, hit_normal(scene, p).dot(-dir));
      const double shade = (opts.ambient + (1.0 - opts.ambient) * lambert) / (1.0 + opts.falloff * hit.distance * hit.distance);
      Vec3 color = shade * opts.vc_tint;

      bool missed_behind = false;
      for (const Hit& later : bvh.all_hits(Ray{pose.position, dir}, hit.distance + 1e-7)) {
        if (later.face == hit.face) continue;
        if (!visible[static_cast<std::size_t>(later.face)]) {
          missed_behind = true;
          break;
        }
      }
      if (missed_behind) {
        color = (1.0 - opts.opacity) * color + opts.opacity * Vec3(0.0, 1.0, 0.0);
        frame.mask.at(y, x) = 1;
      }
      for (int c = 0; c < 3; ++c) frame.image.at(c, y, x) = static_cast<float>(std::clamp(color[c], 0.0, 1.0));
    }
  return frame;
}

OcAppearance OcAppearance::sample(std::uint64_t appearance_seed) {
  RandomStream rng(derive_seed(appearance_seed, 0x6f63));
  OcAppearance a;
  a.tint = Vec3(rng.uniform(0.78, 0.98), rng.uniform(0.36, 0.56), rng.uniform(0.30, 0.48));
  a.texture_frequency = rng.uniform(2.0, 5.0);
  a.texture_strength = rng.uniform(0.15, 0.35);
  a.light_intensity = rng.uniform(0.9, 1.35);
  a.light_falloff = rng.uniform(0.04, 0.16);
  a.light_offset = Eigen::Vector2d(rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25));
  a.specular_strength = rng.uniform(0.25, 0.6);
  a.shininess = rng.uniform(15.0, 50.0);
  a.texture_seed = rng.next_u64();
  return a;
}

OcFrame render_oc_frame(const MeshIntersector& bvh, const TubeScene& scene, const CameraPose& pose,
                        std::uint64_t appearance_seed, const RenderOptions& opts) {
  require_inside(scene, pose);
  const OcAppearance look = OcAppearance::sample(appearance_seed);
  const int size = opts.image_size;
  OcFrame frame;
  frame.primary = trace_primary(bvh, pose, size);
  frame.image = RgbImage(size, size);
  const Vec3 light = pose.position + scene.base_radius * (look.light_offset.x() * pose.right() + look.light_offset.y() * pose.up());
  constexpr double ambient = 0.06;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const std::size_t k = static_cast<std::size_t>(y * size + x);
      const Hit& hit = frame.primary.hits[k];
      if (hit.face < 0) continue;
      const Vec3& p = frame.primary.points[k];
      const double theta = std::atan2(p.y(), p.x());
      const Vec3 n = hit_normal(scene, p);
      const Vec3 to_light = light - p;
      const double dist = to_light.norm();
      const Vec3 l = to_light / dist;
      const Vec3 v = (pose.position - p).normalized();
      const double atten = look.light_intensity / (1.0 + look.light_falloff * dist * dist);
      const double diffuse = std::max(0.0, n.dot(l));

      const double tex = 0.65 * value_noise(p.z(), theta, look.texture_frequency, scene.base_radius, look.texture_seed) +
                         0.35 * value_noise(p.z(), theta, 2.7 * look.texture_frequency, scene.base_radius,
                                            look.texture_seed + 1);
      const Vec3 albedo = look.tint * (1.0 - look.texture_strength + look.texture_strength * 2.0 * tex);
      Vec3 color = albedo * (ambient + diffuse * atten);
      if (opts.specular && diffuse > 0) {
        const Vec3 r = 2.0 * n.dot(l) * n - l;
        const double spec = look.specular_strength * std::pow(std::max(0.0, r.dot(v)), look.shininess) * atten;
        color += Vec3::Constant(spec);
      }
      for (int c = 0; c < 3; ++c) frame.image.at(c, y, x) = static_cast<float>(std::clamp(color[c], 0.0, 1.0));
    }
  return frame;
}

FrameTriple render_frame_triple(const MeshIntersector& bvh, const TubeScene& scene, const CameraPose& pose,
                                const std::vector<std::uint8_t>& visible, std::uint64_t appearance_seed,
                                const RenderOptions& opts) {
  VcFrame vc = render_vc_frame(bvh, scene, pose, visible, opts);
  OcFrame oc = render_oc_frame(bvh, scene, pose, appearance_seed, opts);
  return {std::move(vc.image), std::move(oc.image), std::move(vc.mask)};
}

}  // namespace lumen::synth
