#include "printacc/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "printacc/error.hpp"
#include "printacc/textio.hpp"

namespace printacc {

Vector3 face_normal(Face f)
{
    Vector3 n = Vector3::Zero();
    n[face_axis(f)] = face_is_positive(f) ? 1.0 : -1.0;
    return n;
}

std::string_view face_name(Face f)
{
    static constexpr std::array<std::string_view, 6> names{"+x", "-x", "+y", "-y", "+z", "-z"};
    return names[face_index(f)];
}

Face parse_face(std::string_view name)
{
    for (Face f : kAllFaces) {
        if (face_name(f) == name)
            return f;
    }
    // Accept the unicode minus some spreadsheets substitute.
    if (name.size() == 4 && name.substr(0, 3) == "\xE2\x88\x92")
        return parse_face(std::string("-") + name[3]);
    throw FormatError("unknown face label '" + std::string(name) + "'");
}

double distance_to_face(const Point3& p, const ReferencePrism& prism, Face face)
{
    const int axis = face_axis(face);
    Point3 q = p.cwiseMax(prism.min_corner()).cwiseMin(prism.max_corner());
    q[axis] = face_is_positive(face) ? prism.max_corner()[axis] : prism.min_corner()[axis];
    return (p - q).norm();
}

Face classify_face(const Point3& p, const ReferencePrism& prism)
{
    Face best = Face::PosX;
    double best_d = std::numeric_limits<double>::infinity();
    for (Face f : kAllFaces) {
        const double d = distance_to_face(p, prism, f);
        if (d < best_d) {
            best_d = d;
            best = f;
        }
    }
    return best;
}

double signed_distance(const Point3& p, const MeshQuery& reference) { return reference.signed_distance(p); }

double signed_distance(const Point3& p, const TriangleMesh& reference)
{
    return MeshQuery(reference).signed_distance(p);
}

double box_signed_distance(const Point3& p, const ReferencePrism& prism)
{
    const Vector3 below = prism.min_corner() - p;
    const Vector3 above = p - prism.max_corner();
    const Vector3 excess = below.cwiseMax(above);
    if ((excess.array() <= 0.0).all())
        return excess.maxCoeff(); // inside or on the surface: distance to nearest face, negated
    return excess.cwiseMax(0.0).norm();
}

DeviationField deviation_field(const PointCloud& aligned, const MeshQuery& reference, const ReferencePrism& prism)
{
    DeviationField field;
    field.points = aligned;
    field.signed_distance.reserve(aligned.size());
    field.face.reserve(aligned.size());
    for (const auto& p : aligned.points) {
        if (!p.allFinite())
            throw GeometryError("deviation: non-finite scan point");
        field.signed_distance.push_back(reference.signed_distance(p));
        field.face.push_back(classify_face(p, prism));
    }
    return field;
}

DeviationField deviation_field(const PointCloud& aligned, const TriangleMesh& reference, const ReferencePrism& prism)
{
    return deviation_field(aligned, MeshQuery(reference), prism);
}

namespace {

FaceStats summarize(const std::vector<double>& values)
{
    FaceStats s;
    s.count = values.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (values.empty()) {
        s.mean = s.std = s.min = s.max = nan;
        return s;
    }
    double sum = 0.0;
    for (double v : values)
        sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values)
        sq += (v - s.mean) * (v - s.mean);
    s.std = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : nan;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

} // namespace

std::array<FaceStats, 6> face_statistics(const DeviationField& field)
{
    std::array<std::vector<double>, 6> groups;
    for (std::size_t i = 0; i < field.size(); ++i)
        groups[face_index(field.face[i])].push_back(field.signed_distance[i]);
    std::array<FaceStats, 6> out;
    for (Face f : kAllFaces) {
        out[face_index(f)] = summarize(groups[face_index(f)]);
        out[face_index(f)].face = f;
    }
    return out;
}

FaceStats overall_statistics(const DeviationField& field) { return summarize(field.signed_distance); }

std::string deviation_to_csv(const DeviationField& field, int precision)
{
    std::string out = "x,y,z,signed_distance_mm,face\n";
    out.reserve(field.size() * 48);
    for (std::size_t i = 0; i < field.size(); ++i) {
        const Point3& p = field.points.points[i];
        out += format_fixed(p.x(), precision);
        out += ',';
        out += format_fixed(p.y(), precision);
        out += ',';
        out += format_fixed(p.z(), precision);
        out += ',';
        out += format_fixed(field.signed_distance[i], precision);
        out += ',';
        out += face_name(field.face[i]);
        out += '\n';
    }
    return out;
}

DeviationField deviation_from_csv(std::string_view text)
{
    const CsvTable table = parse_csv(text);
    const std::size_t cx = table.require("x"), cy = table.require("y"), cz = table.require("z");
    const std::size_t cd = table.require("signed_distance_mm"), cf = table.require("face");
    DeviationField field;
    for (const auto& row : table.rows) {
        field.points.points.emplace_back(parse_number(row[cx], "x"), parse_number(row[cy], "y"),
                                         parse_number(row[cz], "z"));
        const double d = parse_number(row[cd], "signed_distance_mm");
        if (!std::isfinite(d))
            throw FormatError("deviation csv: non-finite signed distance");
        field.signed_distance.push_back(d);
        field.face.push_back(parse_face(row[cf]));
    }
    return field;
}

} // namespace printacc
