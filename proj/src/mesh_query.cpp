#include "printacc/mesh_query.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "printacc/error.hpp"

namespace printacc {

namespace {

constexpr std::uint32_t kLeafTriangles = 4;
constexpr double kBaryTolerance = 1e-9;
// Distances at or below this are reported as lying on the surface.
constexpr double kOnSurface = 1e-12;

// Skewed unit directions for parity casts; none is parallel to a coordinate
// plane or to a box diagonal.
const std::array<Vector3, 6>& cast_directions()
{
    static const std::array<Vector3, 6> dirs = [] {
        std::array<Vector3, 6> d{Vector3(0.8506508, 0.3090170, 0.4253254),
                                 Vector3(-0.2873479, 0.9072866, 0.3071611),
                                 Vector3(0.1934223, -0.4127391, 0.8901247),
                                 Vector3(-0.7071915, -0.5312741, 0.4665313),
                                 Vector3(0.3826834, 0.1273611, -0.9150147),
                                 Vector3(-0.5527864, 0.6914727, -0.4650218)};
        for (auto& v : d)
            v.normalize();
        return d;
    }();
    return dirs;
}

bool ray_hits_box(const Eigen::AlignedBox3d& box, const Point3& origin, const Vector3& dir, double& t_enter)
{
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const double lo = box.min()[k], hi = box.max()[k];
        if (dir[k] == 0.0) {
            if (origin[k] < lo || origin[k] > hi)
                return false;
            continue;
        }
        double a = (lo - origin[k]) / dir[k];
        double b = (hi - origin[k]) / dir[k];
        if (a > b)
            std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
        if (t0 > t1)
            return false;
    }
    t_enter = t0;
    return true;
}

double box_squared_distance(const Eigen::AlignedBox3d& box, const Point3& p)
{
    const Vector3 d = (box.min() - p).cwiseMax(p - box.max()).cwiseMax(0.0);
    return d.squaredNorm();
}

} // namespace

Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c)
{
    const Vector3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0)
        return a;

    const Vector3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3)
        return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
        return a + (d1 / (d1 - d3)) * ab;

    const Vector3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6)
        return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
        return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

std::optional<double> intersect_ray_triangle(const Point3& origin, const Vector3& dir, const Point3& a,
                                             const Point3& b, const Point3& c, bool* ambiguous)
{
    const Vector3 e1 = b - a, e2 = c - a;
    const Vector3 pvec = dir.cross(e2);
    const double det = e1.dot(pvec);
    const double scale = e1.norm() * e2.norm() * dir.norm();
    if (std::abs(det) <= kBaryTolerance * scale) {
        // Ray parallel to the plane. Only matters if it actually lies in it.
        const Vector3 n = e1.cross(e2);
        if (ambiguous && std::abs(n.dot(origin - a)) <= kBaryTolerance * n.norm() * (origin - a).norm() + 1e-300)
            *ambiguous = true;
        return std::nullopt;
    }
    const double inv = 1.0 / det;
    const Vector3 tvec = origin - a;
    const double u = tvec.dot(pvec) * inv;
    if (u < -kBaryTolerance || u > 1.0 + kBaryTolerance)
        return std::nullopt;
    const Vector3 qvec = tvec.cross(e1);
    const double v = dir.dot(qvec) * inv;
    if (v < -kBaryTolerance || u + v > 1.0 + kBaryTolerance)
        return std::nullopt;
    if (ambiguous && (u < kBaryTolerance || v < kBaryTolerance || u + v > 1.0 - kBaryTolerance))
        *ambiguous = true;
    return e2.dot(qvec) * inv;
}

MeshQuery::MeshQuery(TriangleMesh mesh) : mesh_(std::move(mesh))
{
    if (!mesh_.is_watertight())
        throw GeometryError("reference mesh is not watertight");
    if (!mesh_.is_consistently_oriented())
        throw GeometryError("reference mesh is not consistently oriented");
    order_.resize(mesh_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * mesh_.size() / kLeafTriangles + 1);
    build(0, static_cast<std::uint32_t>(mesh_.size()));
}

std::int32_t MeshQuery::build(std::uint32_t begin, std::uint32_t end)
{
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    Eigen::AlignedBox3d box, centers;
    for (auto i = begin; i < end; ++i) {
        const auto t = order_[i];
        Point3 sum = Point3::Zero();
        for (int k = 0; k < 3; ++k) {
            box.extend(mesh_.corner(t, k));
            sum += mesh_.corner(t, k);
        }
        centers.extend(sum / 3.0);
    }
    // Padding keeps hits exactly on a box boundary from being culled by rounding.
    const double pad = 1e-9 * box.diagonal().norm() + 1e-12;
    box.min().array() -= pad;
    box.max().array() += pad;
    nodes_[id].box = box;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafTriangles)
        return id;

    int axis;
    centers.sizes().maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    auto center_of = [&](std::uint32_t t) {
        return mesh_.corner(t, 0)[axis] + mesh_.corner(t, 1)[axis] + mesh_.corner(t, 2)[axis];
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t x, std::uint32_t y) { return center_of(x) < center_of(y); });
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void MeshQuery::closest_in(std::int32_t id, const Point3& p, ClosestPoint& best) const
{
    const Node& node = nodes_[id];
    if (node.left < 0) {
        for (auto i = node.begin; i < node.end; ++i) {
            const auto t = order_[i];
            const Point3 q = closest_point_on_triangle(p, mesh_.corner(t, 0), mesh_.corner(t, 1), mesh_.corner(t, 2));
            const double d = (q - p).norm();
            if (d < best.distance || (d == best.distance && t < best.triangle))
                best = {q, d, t};
        }
        return;
    }
    const double dl = box_squared_distance(nodes_[node.left].box, p);
    const double dr = box_squared_distance(nodes_[node.right].box, p);
    const std::int32_t first = dl <= dr ? node.left : node.right;
    const std::int32_t second = dl <= dr ? node.right : node.left;
    const double d_second = dl <= dr ? dr : dl;
    if (std::min(dl, dr) <= best.distance * best.distance)
        closest_in(first, p, best);
    if (d_second <= best.distance * best.distance)
        closest_in(second, p, best);
}

ClosestPoint MeshQuery::closest(const Point3& p) const
{
    ClosestPoint best;
    best.distance = std::numeric_limits<double>::infinity();
    best.triangle = std::numeric_limits<std::size_t>::max();
    closest_in(0, p, best);
    return best;
}

template <class Visit>
void MeshQuery::traverse_ray(const Point3& origin, const Vector3& dir, Visit&& visit) const
{
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        double t_enter;
        if (!ray_hits_box(node.box, origin, dir, t_enter))
            continue;
        if (node.left < 0) {
            for (auto i = node.begin; i < node.end; ++i)
                visit(order_[i]);
        } else {
            stack.push_back(node.left);
            stack.push_back(node.right);
        }
    }
}

bool MeshQuery::contains(const Point3& p) const
{
    for (const auto& dir : cast_directions()) {
        bool ambiguous = false;
        int crossings = 0;
        traverse_ray(p, dir, [&](std::uint32_t t) {
            bool amb = false;
            const auto hit = intersect_ray_triangle(p, dir, mesh_.corner(t, 0), mesh_.corner(t, 1),
                                                    mesh_.corner(t, 2), &amb);
            if (hit && *hit > 0.0)
                ++crossings;
            if (amb || (hit && *hit == 0.0))
                ambiguous = true;
        });
        if (!ambiguous)
            return crossings % 2 == 1;
    }
    throw GeometryError("inside test is ambiguous along every cast direction");
}

double MeshQuery::signed_distance(const Point3& p) const
{
    const double d = closest(p).distance;
    if (d <= kOnSurface)
        return 0.0;
    return contains(p) ? -d : d;
}

std::optional<double> MeshQuery::first_hit(const Point3& origin, const Vector3& dir, double t_min) const
{
    std::optional<double> best;
    traverse_ray(origin, dir, [&](std::uint32_t t) {
        const auto hit = intersect_ray_triangle(origin, dir, mesh_.corner(t, 0), mesh_.corner(t, 1),
                                                mesh_.corner(t, 2));
        if (hit && *hit > t_min && (!best || *hit < *best))
            best = hit;
    });
    return best;
}

double brute_force_distance(const TriangleMesh& mesh, const Point3& p)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.size(); ++t) {
        const Point3 q = closest_point_on_triangle(p, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
        best = std::min(best, (q - p).norm());
    }
    return best;
}

} // namespace printacc
