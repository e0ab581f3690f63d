#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "printacc/geometry.hpp"
#include "printacc/projection.hpp"

namespace printacc {

inline constexpr double kDefaultPitch = 5.7;
inline constexpr double kDefaultNozzleTime = 20.0;

using VoxelIndex = std::array<std::size_t, 3>;

// Cubic voxels on a regular lattice. Voxel (i, j, k) spans
// origin + pitch * [i, i+1] x [j, j+1] x [k, k+1]. Storage is x fastest.
struct VoxelModel {
    VoxelIndex dims{0, 0, 0};
    double pitch = kDefaultPitch;
    Point3 origin = Point3::Zero();
    double default_nozzle_time_ms = kDefaultNozzleTime;
    std::vector<std::uint8_t> occupancy;
    std::vector<double> nozzle_time_ms; // per voxel; only read where occupied

    VoxelModel() = default;
    VoxelModel(const VoxelIndex& dims, double pitch, const Point3& origin = Point3::Zero(),
               double nozzle_time_ms = kDefaultNozzleTime);

    std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (k * dims[1] + j) * dims[0] + i; }
    bool occupied(std::size_t i, std::size_t j, std::size_t k) const { return occupancy[index(i, j, k)] != 0; }
    void set(std::size_t i, std::size_t j, std::size_t k, bool on) { occupancy[index(i, j, k)] = on ? 1 : 0; }
    Point3 center(std::size_t i, std::size_t j, std::size_t k) const;

    std::size_t count() const;
    // Inclusive index range of the occupied voxels; nullopt when empty.
    std::optional<std::pair<VoxelIndex, VoxelIndex>> occupied_bounds() const;

    // Throws DomainError on non-positive dims or pitch, or mismatched arrays.
    void validate() const;
};

// Marks every voxel whose center lies inside the mesh. The lattice is anchored
// at `origin` and the model covers the cells the mesh bounding box touches.
// Throws GeometryError for an open mesh.
VoxelModel voxelize(const TriangleMesh& mesh, double pitch = kDefaultPitch, const Point3& origin = Point3::Zero(),
                    double nozzle_time_ms = kDefaultNozzleTime);

struct CompensationPolicy {
    // Unset thresholds resolve to 2 and 1 times the model pitch.
    std::optional<double> strong_threshold_mm;
    std::optional<double> moderate_threshold_mm;
    int strong_removal = 2;
    int moderate_removal = 1;
    bool global_shrink = false;

    double strong_threshold(double pitch) const { return strong_threshold_mm.value_or(2.0 * pitch); }
    double moderate_threshold(double pitch) const { return moderate_threshold_mm.value_or(pitch); }
    void validate(double pitch) const;
};

// Keys: strong_threshold_mm, moderate_threshold_mm, strong_removal,
// moderate_removal, global_shrink. Missing keys keep their defaults.
CompensationPolicy policy_from_json(std::string_view text);
std::string policy_to_json(const CompensationPolicy& policy, double pitch);

struct CompensationResult {
    VoxelModel model;
    std::size_t removed_by_shrink = 0;
    std::size_t removed_locally = 0;
    bool six_connected = true;
    std::vector<std::string> warnings;
};

// Removes voxels where the mean deviation maps show excess material. The maps
// (indexed by face) are read in the frame of the input's occupied bounding
// box. With global_shrink, one boundary layer per axis is peeled first, from
// the side whose face map has the larger mean (+ on ties), and the model is
// cropped accordingly. Then every boundary column along each face normal
// loses strong_removal or moderate_removal of its outermost voxels when the
// averaged map nodes over its footprint reach the matching threshold.
// Throws DomainError if the model is empty or would become empty, or if a map
// does not fit the model's face.
CompensationResult compensate(const VoxelModel& model, const std::array<FaceGrid, 6>& mean_maps,
                              const CompensationPolicy& policy);

// Face-connectivity of the occupied voxels (true when empty).
bool is_six_connected(const VoxelModel& model);

// Text instructions: header comments, then "layer k; row j; nozzles i ...;
// nozzle_time_ms t" lines ordered by z, y, x. A row with several nozzle
// times yields one line per time. Throws DomainError for an empty model.
std::string export_instructions(const VoxelModel& model, int precision = 4);
VoxelModel parse_instructions(std::string_view text);

// JSON header plus run-length encoded occupancy ("count:value" pairs, x
// fastest). Voxels whose nozzle time differs from the default are listed.
std::string voxel_model_to_json(const VoxelModel& model, int precision = 6);
VoxelModel voxel_model_from_json(std::string_view text);

} // namespace printacc
