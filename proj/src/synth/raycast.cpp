#include "lumen/synth/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lumen::synth {

std::optional<double> intersect_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1, const Vec3& v2, double t_min) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 p = ray.direction.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - v0;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = ray.direction.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= t_min) return std::nullopt;
  return t;
}

MeshIntersector::MeshIntersector(const TriangleMesh& mesh) : mesh_(mesh) {
  const int n = static_cast<int>(mesh.face_count());
  order_.resize(static_cast<std::size_t>(n));
  std::iota(order_.begin(), order_.end(), 0);
  centroids_.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) centroids_.push_back(mesh.centroid(f));
  nodes_.reserve(static_cast<std::size_t>(2 * n / 2 + 1));
  if (n > 0) build(0, n);
}

int MeshIntersector::build(int first, int count) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Box box, cbox;
  for (int i = first; i < first + count; ++i) {
    const int f = order_[static_cast<std::size_t>(i)];
    for (int k = 0; k < 3; ++k) box.grow(mesh_.corner(f, k));
    cbox.grow(centroids_[static_cast<std::size_t>(f)]);
  }
  nodes_[static_cast<std::size_t>(index)].box = box;
  if (count <= 4) {
    nodes_[static_cast<std::size_t>(index)].first = first;
    nodes_[static_cast<std::size_t>(index)].count = count;
    return index;
  }
  int axis = 0;
  (cbox.hi - cbox.lo).maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count, [&](int a, int b) {
    const double ca = centroids_[static_cast<std::size_t>(a)][axis];
    const double cb = centroids_[static_cast<std::size_t>(b)][axis];
    return ca < cb || (ca == cb && a < b);
  });
  const int left = build(first, mid - first);
  const int right = build(mid, first + count - mid);
  nodes_[static_cast<std::size_t>(index)].left = left;
  nodes_[static_cast<std::size_t>(index)].right = right;
  return index;
}

bool MeshIntersector::slab(const Box& box, const Ray& ray, const Vec3& inv, double t_min, double t_max) const {
  double lo = t_min, hi = t_max;
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.lo[a] - ray.origin[a]) * inv[a];
    double t1 = (box.hi[a] - ray.origin[a]) * inv[a];
    if (std::isnan(t0) || std::isnan(t1)) {
      // Ray parallel to and lying in a slab plane.
      if (ray.origin[a] < box.lo[a] || ray.origin[a] > box.hi[a]) return false;
      continue;
    }
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    if (lo > hi * (1 + 1e-12) + 1e-12) return false;
  }
  return true;
}

template <typename Visit>
void MeshIntersector::traverse(const Ray& ray, double t_min, Visit&& visit, const double* bound) const {
  if (nodes_.empty()) return;
  const Vec3 inv = ray.direction.cwiseInverse();
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const BvhNode& node = nodes_[static_cast<std::size_t>(stack[--top])];
    const double t_max = bound ? *bound : std::numeric_limits<double>::infinity();
    if (!slab(node.box, ray, inv, t_min, t_max)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) visit(order_[static_cast<std::size_t>(i)]);
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
}

std::optional<Hit> MeshIntersector::nearest(const Ray& ray, double t_min) const {
  Hit best{-1, std::numeric_limits<double>::infinity()};
  traverse(
      ray, t_min,
      [&](int f) {
        if (auto t = intersect_triangle(ray, mesh_.corner(f, 0), mesh_.corner(f, 1), mesh_.corner(f, 2), t_min)) {
          const Hit h{f, *t};
          if (best.face < 0 || closer(h, best)) best = h;
        }
      },
      &best.distance);
  if (best.face < 0) return std::nullopt;
  return best;
}

std::vector<Hit> MeshIntersector::all_hits(const Ray& ray, double t_min) const {
  std::vector<Hit> hits;
  traverse(
      ray, t_min,
      [&](int f) {
        if (auto t = intersect_triangle(ray, mesh_.corner(f, 0), mesh_.corner(f, 1), mesh_.corner(f, 2), t_min))
          hits.push_back({f, *t});
      },
      nullptr);
  std::sort(hits.begin(), hits.end(), closer);
  return hits;
}

std::optional<Hit> cast_ray(const TriangleMesh& mesh, const Vec3& origin, const Vec3& direction) {
  const Ray ray{origin, direction};
  std::optional<Hit> best;
  for (Index f = 0; f < mesh.face_count(); ++f) {
    if (auto t = intersect_triangle(ray, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2))) {
      const Hit h{f, *t};
      if (!best || closer(h, *best)) best = h;
    }
  }
  return best;
}

std::optional<Hit> cast_ray(const MeshIntersector& bvh, const Vec3& origin, const Vec3& direction) {
  return bvh.nearest(Ray{origin, direction});
}

}  // namespace lumen::synth
