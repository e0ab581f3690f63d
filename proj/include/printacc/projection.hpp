#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "printacc/deviation.hpp"
#include "printacc/geometry.hpp"
#include "printacc/spatial.hpp"

namespace printacc {

inline constexpr std::size_t kNoSource = std::numeric_limits<std::size_t>::max();

// In-plane axes (u, v) of a face: ±x -> (y, z), ±y -> (x, z), ±z -> (x, y).
std::pair<int, int> face_plane_axes(Face face);

// Regular grid on one prism face. Coordinates are relative to the face's
// minimum corner. Node (i, j) sits at the center of cell i along u and cell j
// along v; the last cell in each direction may be truncated to the face edge.
// Missing nodes hold NaN.
struct FaceGrid {
    Face face = Face::PosX;
    std::size_t nu = 0, nv = 0;
    double spacing = 1.0;
    double extent_u = 0.0, extent_v = 0.0;
    std::vector<double> values;      // nv rows of nu values
    std::vector<std::size_t> source; // field index each node was taken from, kNoSource if none

    double& at(std::size_t i, std::size_t j) { return values[j * nu + i]; }
    double at(std::size_t i, std::size_t j) const { return values[j * nu + i]; }

    double node_u(std::size_t i) const;
    double node_v(std::size_t j) const;

    bool same_layout(const FaceGrid& other) const;
};

// Empty (all missing) grid covering the face rectangle. Throws DomainError if
// the spacing is not positive or leaves fewer than two nodes per direction.
FaceGrid make_face_grid(const ReferencePrism& prism, Face face, double spacing);

Point3 node_position(const FaceGrid& grid, const ReferencePrism& prism, std::size_t i, std::size_t j);

struct ProjectionOptions {
    double spacing = 1.0;
    // When set, a node only draws from points labelled with its own face, and
    // if the field carries normals, whose normal is within this angle of the
    // face normal. Falls back to all points if no candidate survives.
    std::optional<double> normal_filter_deg = 90.0;
    // Nodes farther than this from every candidate stay missing.
    std::optional<double> max_distance;
};

// Nearest-point projection of a deviation field onto face grids. Builds the
// spatial indices once for repeated face queries. The field must outlive the
// projector.
class FaceProjector {
public:
    FaceProjector(const DeviationField& field, const ReferencePrism& prism, ProjectionOptions options = {});

    FaceGrid project(Face face) const;
    std::array<FaceGrid, 6> project_all() const;

private:
    struct Index {
        KdTree tree;
        std::vector<std::size_t> field_index;
    };

    const DeviationField& field_;
    ReferencePrism prism_;
    ProjectionOptions options_;
    Index all_;
    std::array<Index, 6> per_face_;
};

FaceGrid project_face(const DeviationField& field, const ReferencePrism& prism, Face face,
                      const ProjectionOptions& options = {});

struct GridStack {
    std::vector<FaceGrid> grids;
    FaceGrid mean_map;
    FaceGrid std_map; // sample std, all missing for a single grid
};

// Node-wise mean and sample standard deviation. A node missing in any grid is
// missing in both maps. Throws DomainError on an empty list or layout mismatch.
GridStack aggregate_grids(std::span<const FaceGrid> grids);

// Bilinear resampling onto a grid `factor` times finer. Nodes whose four
// neighbours include a missing value stay missing.
FaceGrid refine_bilinear(const FaceGrid& grid, std::size_t factor);

// Four header lines (face, nu, nv, spacing_mm) followed by nv rows of nu values.
std::string face_grid_to_csv(const FaceGrid& grid, int precision = 4);
// Extents are not stored in the file and come back as n * spacing unless
// a prism is supplied.
FaceGrid face_grid_from_csv(std::string_view text, const ReferencePrism* prism = nullptr);

} // namespace printacc
