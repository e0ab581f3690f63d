// Test-only helpers: synthetic geometry and independent oracles. Nothing in
// here calls into the library's query code, so oracle comparisons stay honest.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Geometry>

#include "printacc/geometry.hpp"
#include "printacc/random.hpp"

namespace fixtures {

using printacc::Point3;
using printacc::PointCloud;
using printacc::ReferencePrism;
using printacc::TriangleMesh;
using printacc::Vector3;

inline Eigen::Matrix3d rotation_about(const Vector3& axis, double angle_rad)
{
    return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

inline Vector3 random_unit(printacc::Rng& rng)
{
    for (;;) {
        Vector3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const double n = v.norm();
        if (n > 1e-3 && n <= 1.0)
            return v / n;
    }
}

inline std::vector<Point3> random_points(printacc::Rng& rng, std::size_t n, double extent)
{
    std::vector<Point3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent));
    return pts;
}

// Distance from p to triangle abc: plane projection when the foot falls inside
// (tested with signed sub-areas), otherwise the nearest of the three edges.
inline double oracle_point_triangle_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c)
{
    auto segment = [&](const Point3& s0, const Point3& s1) {
        const Vector3 d = s1 - s0;
        const double t = std::clamp((p - s0).dot(d) / d.squaredNorm(), 0.0, 1.0);
        return (s0 + t * d - p).norm();
    };
    const Vector3 n = (b - a).cross(c - a);
    const Vector3 unit = n.normalized();
    const Point3 foot = p - unit.dot(p - a) * unit;
    const double s0 = (b - a).cross(foot - a).dot(n);
    const double s1 = (c - b).cross(foot - b).dot(n);
    const double s2 = (a - c).cross(foot - c).dot(n);
    if (s0 >= 0 && s1 >= 0 && s2 >= 0)
        return std::abs(unit.dot(p - a));
    return std::min({segment(a, b), segment(b, c), segment(c, a)});
}

inline double oracle_mesh_distance(const TriangleMesh& mesh, const Point3& p)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.size(); ++t)
        best = std::min(best, oracle_point_triangle_distance(p, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)));
    return best;
}

// Parity of crossings along a fixed direction, solving the 3x3 system for
// each triangle with Eigen's LU. Returns nullopt when a hit lands within 1e-7
// of an edge so the caller can resample.
inline std::optional<bool> oracle_parity_inside(const TriangleMesh& mesh, const Point3& p,
                                                const Vector3& dir = Vector3(0.267, -0.534, 0.802))
{
    int crossings = 0;
    for (std::size_t t = 0; t < mesh.size(); ++t) {
        const Point3 a = mesh.corner(t, 0), b = mesh.corner(t, 1), c = mesh.corner(t, 2);
        Eigen::Matrix3d m;
        m.col(0) = b - a;
        m.col(1) = c - a;
        m.col(2) = -dir;
        if (std::abs(m.determinant()) < 1e-12)
            continue;
        const Vector3 sol = m.partialPivLu().solve(p - a);
        const double u = sol[0], v = sol[1], s = sol[2];
        if (s <= 0)
            continue;
        if (u < -1e-7 || v < -1e-7 || u + v > 1 + 1e-7)
            continue;
        if (u < 1e-7 || v < 1e-7 || u + v > 1 - 1e-7)
            return std::nullopt;
        ++crossings;
    }
    return crossings % 2 == 1;
}

inline double oracle_box_signed_distance(const Point3& p, const Point3& lo, const Point3& hi)
{
    const Vector3 q = (p - 0.5 * (lo + hi)).cwiseAbs() - 0.5 * (hi - lo);
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(q.maxCoeff(), 0.0);
    return outside + inside;
}

struct LabelledPoint {
    Point3 point;
    int face; // 0..5 in +x,-x,+y,-y,+z,-z order
};

// Points on the box faces moved by `delta` along the outward normal. Face
// coordinates keep a margin of |delta| + 1e-3 from the face edges, so each
// point's nearest surface point is its foot on the original face.
inline std::vector<LabelledPoint> offset_face_samples(const ReferencePrism& prism, double delta, std::size_t n,
                                                      std::uint64_t seed)
{
    printacc::Rng rng(seed);
    const double margin = std::abs(delta) + 1e-3;
    std::vector<LabelledPoint> out;
    out.reserve(n);
    const Point3 lo = prism.min_corner(), hi = prism.max_corner();
    for (std::size_t i = 0; i < n; ++i) {
        const int face = static_cast<int>(i % 6);
        const int axis = face / 2;
        const bool positive = face % 2 == 0;
        Point3 p;
        for (int k = 0; k < 3; ++k) {
            if (k == axis)
                p[k] = positive ? hi[k] + delta : lo[k] - delta;
            else
                p[k] = rng.uniform(lo[k] + margin, hi[k] - margin);
        }
        out.push_back({p, face});
    }
    return out;
}

// Samples of the outward offset surface of a box: faces shifted by delta,
// quarter cylinders along the edges, sphere octants at the corners. Every
// sample lies exactly delta from the box. Half land on the flat parts, which
// span the full face rectangles.
inline PointCloud minkowski_offset_samples(const ReferencePrism& prism, double delta, std::size_t n,
                                           std::uint64_t seed)
{
    printacc::Rng rng(seed);
    const Point3 lo = prism.min_corner(), hi = prism.max_corner();
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point3 base(rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]), rng.uniform(lo[2], hi[2]));
        // 1 axis -> face, 2 -> edge, 3 -> corner.
        const std::uint64_t r = rng.below(4);
        const int active = r < 2 ? 1 : static_cast<int>(r);
        const int skip = static_cast<int>(rng.below(3));
        Vector3 dir = Vector3::Zero();
        for (int m = 0; m < active; ++m) {
            const int k = (skip + m) % 3;
            const double mag = active == 1 ? 1.0 : rng.uniform(0.05, 1.0);
            dir[k] = rng.below(2) ? mag : -mag;
            base[k] = dir[k] > 0 ? hi[k] : lo[k];
        }
        cloud.points.push_back(base + delta * dir.normalized());
    }
    return cloud;
}

// Surface samples taken in antipodal pairs about the box center, so the
// cloud's mean is the center.
inline PointCloud symmetric_box_samples(const ReferencePrism& prism, std::size_t pairs, std::uint64_t seed)
{
    printacc::Rng rng(seed);
    PointCloud cloud;
    const Point3 c = prism.center();
    for (std::size_t i = 0; i < pairs; ++i) {
        const int face = static_cast<int>(rng.below(6));
        const int axis = face / 2;
        Point3 p;
        for (int k = 0; k < 3; ++k) {
            if (k == axis)
                p[k] = face % 2 == 0 ? prism.max_corner()[k] : prism.min_corner()[k];
            else
                p[k] = prism.min_corner()[k] + rng.uniform() * prism.dims[k];
        }
        cloud.points.push_back(p);
        cloud.points.push_back(2.0 * c - p);
    }
    return cloud;
}

// Icosahedron subdivided `levels` times and projected onto a sphere.
inline TriangleMesh icosphere(double radius, int levels, const Point3& center = Point3::Zero())
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Point3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v)
        p.normalize();
    std::vector<printacc::Triangle> f = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                                         {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int l = 0; l < levels; ++l) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end())
                return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const auto idx = static_cast<std::uint32_t>(v.size() - 1);
            mid.emplace(key, idx);
            return idx;
        };
        std::vector<printacc::Triangle> next;
        for (const auto& tri : f) {
            const auto a = midpoint(tri[0], tri[1]);
            const auto b = midpoint(tri[1], tri[2]);
            const auto c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    TriangleMesh mesh;
    for (const auto& p : v)
        mesh.vertices.push_back(center + radius * p);
    mesh.triangles = std::move(f);
    return mesh;
}

inline TriangleMesh transformed(const TriangleMesh& mesh, const Eigen::Matrix3d& r, const Vector3& t)
{
    TriangleMesh out = mesh;
    for (auto& v : out.vertices)
        v = r * v + t;
    return out;
}

} // namespace fixtures
