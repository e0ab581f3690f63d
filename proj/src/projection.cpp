#include "printacc/projection.hpp"

#include <algorithm>
#include <cmath>

#include "printacc/error.hpp"
#include "printacc/textio.hpp"

namespace printacc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t cell_count(double extent, double spacing)
{
    const double q = extent / spacing;
    return static_cast<std::size_t>(std::ceil(q - 1e-9));
}

double cell_center(std::size_t i, std::size_t n, double spacing, double extent)
{
    const double lo = static_cast<double>(i) * spacing;
    const double hi = i + 1 == n ? extent : std::min(lo + spacing, extent);
    return 0.5 * (lo + hi);
}

} // namespace

std::pair<int, int> face_plane_axes(Face face)
{
    switch (face_axis(face)) {
    case 0:
        return {1, 2};
    case 1:
        return {0, 2};
    default:
        return {0, 1};
    }
}

double FaceGrid::node_u(std::size_t i) const { return cell_center(i, nu, spacing, extent_u); }
double FaceGrid::node_v(std::size_t j) const { return cell_center(j, nv, spacing, extent_v); }

bool FaceGrid::same_layout(const FaceGrid& other) const
{
    return face == other.face && nu == other.nu && nv == other.nv && spacing == other.spacing &&
           std::abs(extent_u - other.extent_u) <= 1e-9 && std::abs(extent_v - other.extent_v) <= 1e-9;
}

FaceGrid make_face_grid(const ReferencePrism& prism, Face face, double spacing)
{
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw DomainError("grid spacing must be positive");
    const auto [ua, va] = face_plane_axes(face);
    FaceGrid g;
    g.face = face;
    g.spacing = spacing;
    g.extent_u = prism.dims[ua];
    g.extent_v = prism.dims[va];
    g.nu = cell_count(g.extent_u, spacing);
    g.nv = cell_count(g.extent_v, spacing);
    if (g.nu < 2 || g.nv < 2)
        throw DomainError("grid spacing " + format_fixed(spacing, 4) + " leaves fewer than two nodes on face " +
                          std::string(face_name(face)));
    g.values.assign(g.nu * g.nv, kNaN);
    g.source.assign(g.nu * g.nv, kNoSource);
    return g;
}

Point3 node_position(const FaceGrid& grid, const ReferencePrism& prism, std::size_t i, std::size_t j)
{
    const auto [ua, va] = face_plane_axes(grid.face);
    const int axis = face_axis(grid.face);
    Point3 p;
    p[axis] = face_is_positive(grid.face) ? prism.max_corner()[axis] : prism.min_corner()[axis];
    p[ua] = prism.min_corner()[ua] + grid.node_u(i);
    p[va] = prism.min_corner()[va] + grid.node_v(j);
    return p;
}

FaceProjector::FaceProjector(const DeviationField& field, const ReferencePrism& prism, ProjectionOptions options)
    : field_(field), prism_(prism), options_(options)
{
    if (field.empty())
        throw GeometryError("cannot project an empty deviation field");
    if (field.signed_distance.size() != field.size() || field.face.size() != field.size())
        throw GeometryError("deviation field arrays differ in length");

    all_.tree = KdTree(field.points.points);
    all_.field_index.resize(field.size());
    for (std::size_t i = 0; i < field.size(); ++i)
        all_.field_index[i] = i;

    if (!options_.normal_filter_deg)
        return;
    const double cos_limit = std::cos(*options_.normal_filter_deg * M_PI / 180.0);
    const bool use_normals = field.points.has_normals();
    for (Face f : kAllFaces) {
        std::vector<Point3> pts;
        auto& idx = per_face_[face_index(f)].field_index;
        const Vector3 n = face_normal(f);
        for (std::size_t i = 0; i < field.size(); ++i) {
            if (field.face[i] != f)
                continue;
            if (use_normals && field.points.normals[i].dot(n) < cos_limit)
                continue;
            pts.push_back(field.points.points[i]);
            idx.push_back(i);
        }
        per_face_[face_index(f)].tree = KdTree(pts);
    }
}

FaceGrid FaceProjector::project(Face face) const
{
    FaceGrid grid = make_face_grid(prism_, face, options_.spacing);
    const Index* index = &all_;
    if (options_.normal_filter_deg && !per_face_[face_index(face)].tree.empty())
        index = &per_face_[face_index(face)];

    const double limit2 = options_.max_distance ? *options_.max_distance * *options_.max_distance
                                                : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid.nv; ++j) {
        for (std::size_t i = 0; i < grid.nu; ++i) {
            const Neighbor nn = index->tree.nearest(node_position(grid, prism_, i, j));
            if (nn.squared_distance > limit2)
                continue;
            const std::size_t src = index->field_index[nn.index];
            grid.at(i, j) = field_.signed_distance[src];
            grid.source[j * grid.nu + i] = src;
        }
    }
    return grid;
}

std::array<FaceGrid, 6> FaceProjector::project_all() const
{
    std::array<FaceGrid, 6> out;
    for (Face f : kAllFaces)
        out[face_index(f)] = project(f);
    return out;
}

FaceGrid project_face(const DeviationField& field, const ReferencePrism& prism, Face face,
                      const ProjectionOptions& options)
{
    return FaceProjector(field, prism, options).project(face);
}

GridStack aggregate_grids(std::span<const FaceGrid> grids)
{
    if (grids.empty())
        throw DomainError("aggregate needs at least one grid");
    for (const auto& g : grids) {
        if (!g.same_layout(grids.front()))
            throw DomainError("face grids differ in face, size or spacing");
    }
    GridStack stack;
    stack.grids.assign(grids.begin(), grids.end());
    stack.mean_map = grids.front();
    stack.std_map = grids.front();
    stack.mean_map.source.assign(stack.mean_map.values.size(), kNoSource);
    stack.std_map.source.assign(stack.std_map.values.size(), kNoSource);

    const double n = static_cast<double>(grids.size());
    for (std::size_t k = 0; k < stack.mean_map.values.size(); ++k) {
        double sum = 0.0;
        bool missing = false;
        for (const auto& g : grids) {
            missing = missing || std::isnan(g.values[k]);
            sum += g.values[k];
        }
        if (missing) {
            stack.mean_map.values[k] = kNaN;
            stack.std_map.values[k] = kNaN;
            continue;
        }
        const double mean = sum / n;
        stack.mean_map.values[k] = mean;
        if (grids.size() < 2) {
            stack.std_map.values[k] = kNaN;
            continue;
        }
        double sq = 0.0;
        for (const auto& g : grids)
            sq += (g.values[k] - mean) * (g.values[k] - mean);
        stack.std_map.values[k] = std::sqrt(sq / (n - 1.0));
    }
    return stack;
}

FaceGrid refine_bilinear(const FaceGrid& grid, std::size_t factor)
{
    if (factor < 1)
        throw DomainError("refinement factor must be at least 1");
    FaceGrid out;
    out.face = grid.face;
    out.spacing = grid.spacing / static_cast<double>(factor);
    out.extent_u = grid.extent_u;
    out.extent_v = grid.extent_v;
    out.nu = cell_count(out.extent_u, out.spacing);
    out.nv = cell_count(out.extent_v, out.spacing);
    out.values.assign(out.nu * out.nv, kNaN);
    out.source.assign(out.nu * out.nv, kNoSource);

    // Bracketing node pair and weight along one direction, clamped at the borders.
    auto bracket = [&](double x, std::size_t n, auto node) {
        std::size_t i = 0;
        while (i + 2 < n && node(i + 1) <= x)
            ++i;
        const double a = node(i), b = node(i + 1);
        const double t = std::clamp((x - a) / (b - a), 0.0, 1.0);
        return std::pair{i, t};
    };
    for (std::size_t j = 0; j < out.nv; ++j) {
        const auto [j0, tv] = bracket(out.node_v(j), grid.nv, [&](std::size_t k) { return grid.node_v(k); });
        for (std::size_t i = 0; i < out.nu; ++i) {
            const auto [i0, tu] = bracket(out.node_u(i), grid.nu, [&](std::size_t k) { return grid.node_u(k); });
            const double v00 = grid.at(i0, j0), v10 = grid.at(i0 + 1, j0);
            const double v01 = grid.at(i0, j0 + 1), v11 = grid.at(i0 + 1, j0 + 1);
            out.at(i, j) = (1 - tu) * (1 - tv) * v00 + tu * (1 - tv) * v10 + (1 - tu) * tv * v01 + tu * tv * v11;
        }
    }
    return out;
}

std::string face_grid_to_csv(const FaceGrid& grid, int precision)
{
    std::string out;
    out += "face," + std::string(face_name(grid.face)) + "\n";
    out += "nu," + std::to_string(grid.nu) + "\n";
    out += "nv," + std::to_string(grid.nv) + "\n";
    out += "spacing_mm," + format_fixed(grid.spacing, precision) + "\n";
    for (std::size_t j = 0; j < grid.nv; ++j) {
        for (std::size_t i = 0; i < grid.nu; ++i) {
            if (i)
                out += ',';
            out += format_fixed(grid.at(i, j), precision);
        }
        out += '\n';
    }
    return out;
}

FaceGrid face_grid_from_csv(std::string_view text, const ReferencePrism* prism)
{
    const auto lines = split_lines(text);
    if (lines.size() < 4)
        throw FormatError("face grid csv needs a four line header");
    auto header_value = [&](std::size_t line, std::string_view key) {
        const auto f = split_fields(lines[line], ',');
        if (f.size() != 2 || f[0] != key)
            throw FormatError("face grid csv: expected '" + std::string(key) + ",<value>' on line " +
                              std::to_string(line + 1));
        return f[1];
    };
    FaceGrid g;
    g.face = parse_face(header_value(0, "face"));
    const double nu = parse_number(header_value(1, "nu"), "nu");
    const double nv = parse_number(header_value(2, "nv"), "nv");
    g.spacing = parse_number(header_value(3, "spacing_mm"), "spacing_mm");
    if (!(nu >= 2) || !(nv >= 2) || nu != std::floor(nu) || nv != std::floor(nv) || !(g.spacing > 0))
        throw FormatError("face grid csv: invalid grid size or spacing");
    g.nu = static_cast<std::size_t>(nu);
    g.nv = static_cast<std::size_t>(nv);
    if (prism) {
        const auto [ua, va] = face_plane_axes(g.face);
        g.extent_u = prism->dims[ua];
        g.extent_v = prism->dims[va];
        if (cell_count(g.extent_u, g.spacing) != g.nu || cell_count(g.extent_v, g.spacing) != g.nv)
            throw FormatError("face grid csv does not match the reference dimensions");
    } else {
        g.extent_u = static_cast<double>(g.nu) * g.spacing;
        g.extent_v = static_cast<double>(g.nv) * g.spacing;
    }
    if (lines.size() != 4 + g.nv)
        throw FormatError("face grid csv: expected " + std::to_string(g.nv) + " value rows, found " +
                          std::to_string(lines.size() - 4));
    g.values.reserve(g.nu * g.nv);
    for (std::size_t j = 0; j < g.nv; ++j) {
        const auto fields = split_fields(lines[4 + j], ',');
        if (fields.size() != g.nu)
            throw FormatError("face grid csv: row " + std::to_string(j + 1) + " has " +
                              std::to_string(fields.size()) + " values, expected " + std::to_string(g.nu));
        for (const auto& f : fields)
            g.values.push_back(parse_number(f, "grid value"));
    }
    g.source.assign(g.values.size(), kNoSource);
    return g;
}

} // namespace printacc
