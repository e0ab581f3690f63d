#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "printacc/geometry.hpp"

namespace printacc {

struct ClosestPoint {
    Point3 point = Point3::Zero();
    double distance = 0.0;
    std::size_t triangle = 0;
};

// Closest point on triangle abc to p (Voronoi-region walk over vertices,
// edges and face).
Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c);

// Ray/triangle intersection, two-sided. Returns the ray parameter of the hit
// or nothing. `ambiguous` is raised when the hit lies within a relative 1e-9
// of an edge or the ray grazes the triangle plane.
std::optional<double> intersect_ray_triangle(const Point3& origin, const Vector3& dir, const Point3& a,
                                             const Point3& b, const Point3& c, bool* ambiguous = nullptr);

// Bounding-volume hierarchy over a closed triangle mesh answering distance,
// ray and containment queries. Holds a copy of the mesh.
class MeshQuery {
public:
    // Throws GeometryError unless the mesh is watertight and consistently oriented.
    explicit MeshQuery(TriangleMesh mesh);

    const TriangleMesh& mesh() const { return mesh_; }

    ClosestPoint closest(const Point3& p) const;

    // Inside test by parity of ray crossings. The ray direction comes from a
    // fixed list of skewed directions; a direction is abandoned when any hit
    // is ambiguous. Points on the surface may report either side.
    bool contains(const Point3& p) const;

    // Positive outside, negative inside, 0 on the surface.
    double signed_distance(const Point3& p) const;

    // Smallest ray parameter t > t_min at which the ray meets the surface.
    std::optional<double> first_hit(const Point3& origin, const Vector3& dir, double t_min = 0.0) const;

private:
    struct Node {
        Eigen::AlignedBox3d box;
        std::uint32_t begin = 0, end = 0;
        std::int32_t left = -1, right = -1;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void closest_in(std::int32_t node, const Point3& p, ClosestPoint& best) const;
    // Calls visit(triangle) for every triangle whose subtree box the ray touches.
    template <class Visit>
    void traverse_ray(const Point3& origin, const Vector3& inv_dir, Visit&& visit) const;

    TriangleMesh mesh_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

// Reference implementations scanning every triangle, for cross-checks.
double brute_force_distance(const TriangleMesh& mesh, const Point3& p);

} // namespace printacc
