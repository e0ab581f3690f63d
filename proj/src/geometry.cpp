#include "printacc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "printacc/error.hpp"
#include "printacc/stl.hpp"

namespace printacc {

namespace {

constexpr double kMinTriangleArea = 1e-12;
constexpr double kUnitTolerance = 1e-9;

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b)
{
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

bool is_finite(const Point3& p) { return p.allFinite(); }

} // namespace

void PointCloud::validate() const
{
    for (const auto& p : points) {
        if (!is_finite(p))
            throw GeometryError("point cloud contains a non-finite coordinate");
    }
    if (normals.empty())
        return;
    if (normals.size() != points.size())
        throw GeometryError("point cloud has " + std::to_string(normals.size()) +
                            " normals for " + std::to_string(points.size()) + " points");
    for (const auto& n : normals) {
        if (!is_finite(n) || std::abs(n.norm() - 1.0) > kUnitTolerance)
            throw GeometryError("point cloud normal is not unit length");
    }
}

void TriangleMesh::validate() const
{
    for (const auto& v : vertices) {
        if (!is_finite(v))
            throw GeometryError("mesh vertex has a non-finite coordinate");
    }
    for (std::size_t i = 0; i < triangles.size(); ++i) {
        for (auto idx : triangles[i]) {
            if (idx >= vertices.size())
                throw GeometryError("triangle " + std::to_string(i) + " references vertex " +
                                    std::to_string(idx) + " out of range");
        }
        const Vector3 n = (corner(i, 1) - corner(i, 0)).cross(corner(i, 2) - corner(i, 0));
        if (0.5 * n.norm() <= kMinTriangleArea)
            throw GeometryError("triangle " + std::to_string(i) + " is degenerate");
    }
}

bool TriangleMesh::is_watertight() const
{
    if (triangles.empty())
        return false;
    std::unordered_map<std::uint64_t, int> uses;
    uses.reserve(triangles.size() * 3);
    for (const auto& t : triangles) {
        for (int k = 0; k < 3; ++k) {
            auto a = t[k], b = t[(k + 1) % 3];
            ++uses[edge_key(std::min(a, b), std::max(a, b))];
        }
    }
    return std::all_of(uses.begin(), uses.end(), [](const auto& e) { return e.second == 2; });
}

bool TriangleMesh::is_consistently_oriented() const
{
    if (!is_watertight())
        return false;
    std::unordered_map<std::uint64_t, int> directed;
    directed.reserve(triangles.size() * 3);
    for (const auto& t : triangles) {
        for (int k = 0; k < 3; ++k) {
            if (++directed[edge_key(t[k], t[(k + 1) % 3])] > 1)
                return false;
        }
    }
    return true;
}

Eigen::AlignedBox3d TriangleMesh::bounds() const
{
    Eigen::AlignedBox3d box;
    for (const auto& v : vertices)
        box.extend(v);
    return box;
}

double TriangleMesh::surface_area() const
{
    double area = 0.0;
    for (std::size_t i = 0; i < triangles.size(); ++i)
        area += 0.5 * (corner(i, 1) - corner(i, 0)).cross(corner(i, 2) - corner(i, 0)).norm();
    return area;
}

ReferencePrism::ReferencePrism(const Vector3& d, const Point3& o) : dims(d), origin(o)
{
    if (!(dims.array() > 0.0).all() || !dims.allFinite() || !origin.allFinite())
        throw DomainError("reference prism dimensions must be finite and strictly positive");
}

std::array<Point3, 8> ReferencePrism::corners() const
{
    std::array<Point3, 8> out;
    for (int i = 0; i < 8; ++i) {
        out[i] = origin + Vector3((i & 1) ? dims.x() : 0.0, (i & 2) ? dims.y() : 0.0,
                                  (i & 4) ? dims.z() : 0.0);
    }
    return out;
}

TriangleMesh ReferencePrism::to_mesh() const
{
    TriangleMesh mesh;
    const auto c = corners();
    mesh.vertices.assign(c.begin(), c.end());
    // Corner index bits: 1 = +x, 2 = +y, 4 = +z. Counter-clockwise seen from outside.
    mesh.triangles = {
        {0, 2, 3}, {0, 3, 1}, // -z
        {4, 5, 7}, {4, 7, 6}, // +z
        {0, 1, 5}, {0, 5, 4}, // -y
        {2, 6, 7}, {2, 7, 3}, // +y
        {0, 4, 6}, {0, 6, 2}, // -x
        {1, 3, 7}, {1, 7, 5}, // +x
    };
    return mesh;
}

double ReferencePrism::surface_distance(const Point3& p) const
{
    const Vector3 lo = p - min_corner();
    const Vector3 hi = max_corner() - p;
    const bool inside = (lo.array() >= 0.0).all() && (hi.array() >= 0.0).all();
    if (inside)
        return std::min(lo.minCoeff(), hi.minCoeff());
    const Vector3 outside = (-lo).cwiseMax(-hi).cwiseMax(0.0);
    return outside.norm();
}

namespace {

void require_closed(const TriangleMesh& mesh)
{
    if (!mesh.is_watertight())
        throw GeometryError("mesh is not watertight");
    if (!mesh.is_consistently_oriented())
        throw GeometryError("mesh is not consistently oriented");
}

} // namespace

double mesh_volume(const TriangleMesh& mesh)
{
    require_closed(mesh);
    double six_volume = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i)
        six_volume += mesh.corner(i, 0).dot(mesh.corner(i, 1).cross(mesh.corner(i, 2)));
    return std::abs(six_volume / 6.0);
}

Point3 mesh_centroid(const TriangleMesh& mesh)
{
    require_closed(mesh);
    // Tetrahedra against a point near the mesh keep the sums well conditioned.
    const Point3 anchor = mesh.vertices.front();
    double six_volume = 0.0;
    Vector3 moment = Vector3::Zero();
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const Vector3 a = mesh.corner(i, 0) - anchor;
        const Vector3 b = mesh.corner(i, 1) - anchor;
        const Vector3 c = mesh.corner(i, 2) - anchor;
        const double v = a.dot(b.cross(c));
        six_volume += v;
        moment += v * (a + b + c) / 4.0;
    }
    if (six_volume == 0.0)
        throw GeometryError("mesh encloses no volume");
    return anchor + moment / six_volume;
}

Point3 centroid(std::span<const Point3> points)
{
    if (points.empty())
        throw GeometryError("centroid of an empty point set");
    Vector3 sum = Vector3::Zero();
    for (const auto& p : points)
        sum += p;
    return sum / static_cast<double>(points.size());
}

PointCloud sample_reference_surface(const ReferencePrism& prism, std::size_t n_random,
                                    std::uint64_t seed)
{
    Rng rng(seed);
    const Vector3& d = prism.dims;
    // Area of one face normal to each axis.
    const std::array<double, 3> area{d.y() * d.z(), d.x() * d.z(), d.x() * d.y()};
    const double total = area[0] + area[1] + area[2];

    PointCloud cloud;
    cloud.points.reserve(n_random + 8);
    const Point3 lo = prism.min_corner();
    const Point3 hi = prism.max_corner();

    while (cloud.points.size() < n_random) {
        const double pick = rng.uniform() * total;
        const int axis = pick < area[0] ? 0 : (pick < area[0] + area[1] ? 1 : 2);
        const bool positive = rng.uniform() < 0.5;
        Point3 p, mirror;
        for (int k = 0; k < 3; ++k) {
            if (k == axis) {
                p[k] = positive ? hi[k] : lo[k];
                mirror[k] = positive ? lo[k] : hi[k];
            } else {
                const double a = rng.uniform();
                p[k] = lo[k] + a * d[k];
                mirror[k] = lo[k] + (1.0 - a) * d[k];
            }
        }
        cloud.points.push_back(p);
        if (cloud.points.size() < n_random)
            cloud.points.push_back(mirror);
    }
    for (const auto& c : prism.corners())
        cloud.points.push_back(c);
    return cloud;
}

PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed)
{
    if (mesh.empty())
        throw GeometryError("cannot sample an empty mesh");
    std::vector<double> cumulative(mesh.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        total += 0.5 * (mesh.corner(i, 1) - mesh.corner(i, 0))
                           .cross(mesh.corner(i, 2) - mesh.corner(i, 0))
                           .norm();
        cumulative[i] = total;
    }
    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double pick = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const std::size_t tri =
            std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), mesh.size() - 1);
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const Point3 a = mesh.corner(tri, 0);
        cloud.points.push_back(a + u * (mesh.corner(tri, 1) - a) + v * (mesh.corner(tri, 2) - a));
    }
    return cloud;
}

PointCloud downsample_random(const PointCloud& cloud, std::size_t target, std::uint64_t seed)
{
    if (target == 0)
        throw DomainError("downsample target must be at least 1");
    if (cloud.size() <= target)
        return cloud;

    // Partial Fisher-Yates over the index range.
    std::vector<std::size_t> index(cloud.size());
    std::iota(index.begin(), index.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < target; ++i) {
        const std::size_t j = i + rng.below(index.size() - i);
        std::swap(index[i], index[j]);
    }
    index.resize(target);
    std::sort(index.begin(), index.end());

    PointCloud out;
    out.points.reserve(target);
    for (auto i : index)
        out.points.push_back(cloud.points[i]);
    if (cloud.has_normals()) {
        out.normals.reserve(target);
        for (auto i : index)
            out.normals.push_back(cloud.normals[i]);
    }
    return out;
}

PointCloud parse_xyz(std::string_view text)
{
    PointCloud cloud;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    int columns = -1;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string line(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;

        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        for (auto& ch : line) {
            if (ch == ',' || ch == ';')
                ch = ' ';
        }
        std::istringstream in(line);
        std::vector<double> values;
        std::string token;
        while (in >> token) {
            char* stop = nullptr;
            const double v = std::strtod(token.c_str(), &stop);
            if (stop == token.c_str() || *stop != '\0')
                throw FormatError("xyz line " + std::to_string(line_no) + ": not a number '" +
                                  token + "'");
            if (!std::isfinite(v))
                throw FormatError("xyz line " + std::to_string(line_no) + ": non-finite value");
            values.push_back(v);
        }
        if (values.size() != 3 && values.size() != 6)
            throw FormatError("xyz line " + std::to_string(line_no) + ": expected 3 or 6 columns, got " +
                              std::to_string(values.size()));
        if (columns < 0)
            columns = static_cast<int>(values.size());
        else if (columns != static_cast<int>(values.size()))
            throw FormatError("xyz line " + std::to_string(line_no) + ": inconsistent column count");

        cloud.points.emplace_back(values[0], values[1], values[2]);
        if (values.size() == 6) {
            Vector3 n(values[3], values[4], values[5]);
            const double len = n.norm();
            if (len == 0.0)
                throw FormatError("xyz line " + std::to_string(line_no) + ": zero normal");
            cloud.normals.push_back(n / len);
        }
    }
    return cloud;
}

std::string format_xyz(const PointCloud& cloud, int precision)
{
    std::string out;
    out.reserve(cloud.size() * 40);
    char buf[256];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        int n = std::snprintf(buf, sizeof buf, "%.*f %.*f %.*f", precision, p.x(), precision, p.y(),
                              precision, p.z());
        out.append(buf, static_cast<std::size_t>(n));
        if (cloud.has_normals()) {
            const auto& q = cloud.normals[i];
            n = std::snprintf(buf, sizeof buf, " %.9f %.9f %.9f", q.x(), q.y(), q.z());
            out.append(buf, static_cast<std::size_t>(n));
        }
        out.push_back('\n');
    }
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
        throw Error("failed writing " + path.string());
}

PointCloud read_point_cloud(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    const std::string bytes = read_file(path);
    if (ext == ".stl") {
        const TriangleMesh mesh = parse_stl(std::as_bytes(std::span(bytes.data(), bytes.size())));
        return PointCloud(mesh.vertices);
    }
    return parse_xyz(bytes);
}

} // namespace printacc
