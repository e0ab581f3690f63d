#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "printacc/geometry.hpp"
#include "printacc/mesh_query.hpp"

namespace printacc {

// Prism faces by outward normal. The enumerator order is the tie-break order
// used by classify_face.
enum class Face : std::uint8_t { PosX, NegX, PosY, NegY, PosZ, NegZ };

inline constexpr std::array<Face, 6> kAllFaces{Face::PosX, Face::NegX, Face::PosY,
                                                Face::NegY, Face::PosZ, Face::NegZ};

constexpr int face_axis(Face f) { return static_cast<int>(f) / 2; }
constexpr bool face_is_positive(Face f) { return static_cast<int>(f) % 2 == 0; }
constexpr std::size_t face_index(Face f) { return static_cast<std::size_t>(f); }
Vector3 face_normal(Face f);
std::string_view face_name(Face f); // "+x", "-x", ...
Face parse_face(std::string_view name);

// Distance from p to the (closed) face rectangle of the prism.
double distance_to_face(const Point3& p, const ReferencePrism& prism, Face face);

// Face whose rectangle is nearest to p, first in enumerator order on ties.
Face classify_face(const Point3& p, const ReferencePrism& prism);

// Mesh-based signed distance: positive outside, negative inside, 0 on the
// surface. The convenience overload builds a MeshQuery per call.
double signed_distance(const Point3& p, const MeshQuery& reference);
double signed_distance(const Point3& p, const TriangleMesh& reference);

// Closed form for the box; agrees with the mesh path to rounding.
double box_signed_distance(const Point3& p, const ReferencePrism& prism);

struct DeviationField {
    PointCloud points;
    std::vector<double> signed_distance; // mm
    std::vector<Face> face;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

DeviationField deviation_field(const PointCloud& aligned, const MeshQuery& reference, const ReferencePrism& prism);
DeviationField deviation_field(const PointCloud& aligned, const TriangleMesh& reference, const ReferencePrism& prism);

struct FaceStats {
    Face face = Face::PosX;
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0; // sample (n-1); NaN below two points
    double min = 0.0;
    double max = 0.0;
};

// One entry per face in kAllFaces order. Empty groups report NaN statistics.
std::array<FaceStats, 6> face_statistics(const DeviationField& field);
// Same statistics over every point, `face` left at its default.
FaceStats overall_statistics(const DeviationField& field);

// CSV: header "x,y,z,signed_distance_mm,face" then one row per point.
std::string deviation_to_csv(const DeviationField& field, int precision = 4);
DeviationField deviation_from_csv(std::string_view text);

} // namespace printacc
