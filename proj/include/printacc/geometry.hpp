#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "printacc/random.hpp"

namespace printacc {

// All lengths are millimetres. No unit conversion happens anywhere.
using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Triangle = std::array<std::uint32_t, 3>;

struct PointCloud {
    std::vector<Point3> points;
    // Either empty or one unit vector per point.
    std::vector<Vector3> normals;

    PointCloud() = default;
    explicit PointCloud(std::vector<Point3> pts) : points(std::move(pts)) {}
    PointCloud(std::vector<Point3> pts, std::vector<Vector3> nrm)
        : points(std::move(pts)), normals(std::move(nrm)) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }

    // Throws GeometryError on non-finite coordinates, a normals array of the
    // wrong length or a normal that is not unit length within 1e-9.
    void validate() const;
};

struct TriangleMesh {
    std::vector<Point3> vertices;
    std::vector<Triangle> triangles;

    std::size_t size() const { return triangles.size(); }
    bool empty() const { return triangles.empty(); }

    Point3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }

    // Indices in range, finite vertices and every triangle area above 1e-12 mm².
    void validate() const;

    // Every undirected edge is shared by exactly two triangles.
    bool is_watertight() const;

    // Watertight and every directed edge occurs once, i.e. neighbouring
    // triangles traverse their shared edge in opposite directions.
    bool is_consistently_oriented() const;

    Eigen::AlignedBox3d bounds() const;
    double surface_area() const;
};

// Axis-aligned reference specimen. Faces are labelled by outward normal.
struct ReferencePrism {
    Vector3 dims{159.6, 39.9, 39.9};
    Point3 origin = Point3::Zero();

    ReferencePrism() = default;
    ReferencePrism(const Vector3& dims, const Point3& origin = Point3::Zero());

    Point3 min_corner() const { return origin; }
    Point3 max_corner() const { return origin + dims; }
    Point3 center() const { return origin + 0.5 * dims; }
    double volume() const { return dims.prod(); }

    std::array<Point3, 8> corners() const;

    // Closed box surface, 8 vertices and 12 outward-oriented triangles.
    TriangleMesh to_mesh() const;

    // Unsigned distance from p to the box boundary.
    double surface_distance(const Point3& p) const;
};

// Absolute enclosed volume by the divergence theorem. Throws GeometryError if
// the mesh is not watertight and consistently oriented.
double mesh_volume(const TriangleMesh& mesh);

// Centroid of the enclosed solid. Same preconditions as mesh_volume.
Point3 mesh_centroid(const TriangleMesh& mesh);

Point3 centroid(std::span<const Point3> points);

// n_random area-weighted surface samples followed by the 8 box corners.
// Samples are drawn in antithetic pairs (p and its reflection through the
// box center), so for even n_random the cloud's mean is the box center.
PointCloud sample_reference_surface(const ReferencePrism& prism, std::size_t n_random,
                                    std::uint64_t seed = kDefaultSeed);

// Area-weighted uniform samples on an arbitrary triangle mesh.
PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n,
                               std::uint64_t seed = kDefaultSeed);

// Uniform subset without replacement of exactly `target` points, kept in input
// order. Returns the cloud unchanged if it is already small enough.
PointCloud downsample_random(const PointCloud& cloud, std::size_t target,
                             std::uint64_t seed = kDefaultSeed);

// Whitespace separated XYZ text, one point per line, optionally followed by
// three normal components. Blank lines and lines starting with '#' are skipped.
PointCloud parse_xyz(std::string_view text);
std::string format_xyz(const PointCloud& cloud, int precision = 6);

// Loads a scan: STL files yield their (deduplicated) vertex cloud, anything
// else is read as XYZ text.
PointCloud read_point_cloud(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

} // namespace printacc
