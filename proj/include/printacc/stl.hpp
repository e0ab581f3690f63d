#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "printacc/geometry.hpp"

namespace printacc {

// Vertices closer than this (per coordinate) are merged while building topology.
inline constexpr double kVertexMergeTolerance = 1e-6;

// Parses binary or ASCII STL. Binary is recognised when the byte count matches
// the declared triangle count; otherwise a leading "solid" selects ASCII.
// Throws FormatError for truncated input, a count that disagrees with the
// payload or non-finite coordinates.
TriangleMesh parse_stl(std::span<const std::byte> bytes);

TriangleMesh read_stl(const std::filesystem::path& path);

// Little-endian binary STL with per-facet normals recomputed from the winding.
std::string write_stl_binary(const TriangleMesh& mesh, std::string_view header = "printacc");
std::string write_stl_ascii(const TriangleMesh& mesh, std::string_view name = "printacc");

} // namespace printacc
