#pragma once

#include "lumen/synth/scene.hpp"

#include <array>
#include <optional>
#include <vector>

namespace lumen::synth {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit
};

struct Hit {
  Index face = -1;
  double distance = 0;
};

/// Hits are ordered by distance, then by face id.
inline bool closer(const Hit& a, const Hit& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.face < b.face);
}

inline constexpr double kRayEpsilon = 1e-9;

/// Moller-Trumbore, two-sided. Returns the ray parameter of a hit beyond t_min.
std::optional<double> intersect_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                                         double t_min = kRayEpsilon);

/// Bounding volume hierarchy over a mesh's faces. Holds a reference to the mesh.
class MeshIntersector {
 public:
  explicit MeshIntersector(const TriangleMesh& mesh);

  /// Nearest hit beyond t_min; ties go to the lowest face id.
  std::optional<Hit> nearest(const Ray& ray, double t_min = kRayEpsilon) const;
  /// Every hit beyond t_min, sorted with `closer`.
  std::vector<Hit> all_hits(const Ray& ray, double t_min = kRayEpsilon) const;

  const TriangleMesh& mesh() const { return mesh_; }

 private:
  struct Box {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
    void grow(const Vec3& p) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    void grow(const Box& b) {
      lo = lo.cwiseMin(b.lo);
      hi = hi.cwiseMax(b.hi);
    }
  };
  struct BvhNode {
    Box box;
    int left = -1;  // children; -1 for a leaf
    int right = -1;
    int first = 0;  // leaf range into order_
    int count = 0;
  };

  int build(int first, int count);
  bool slab(const Box& box, const Ray& ray, const Vec3& inv, double t_min, double t_max) const;
  template <typename Visit>
  void traverse(const Ray& ray, double t_min, Visit&& visit, const double* bound) const;

  const TriangleMesh& mesh_;
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
  std::vector<BvhNode> nodes_;
};

/// Nearest hit by brute force over every face. Intended for small meshes.
std::optional<Hit> cast_ray(const TriangleMesh& mesh, const Vec3& origin, const Vec3& direction);
/// Nearest hit through an acceleration structure.
std::optional<Hit> cast_ray(const MeshIntersector& bvh, const Vec3& origin, const Vec3& direction);

}  // namespace lumen::synth
