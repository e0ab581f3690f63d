#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "printacc/geometry.hpp"
#include "printacc/random.hpp"

namespace printacc {

// Deterministic stand-ins for scanned specimens and lab exports, used by the
// demo fixture set and the end-to-end tests.
struct SyntheticScanOptions {
    double inflation_mm = 1.0;   // uniform outward offset of every face
    double bulge_mm = 0.0;       // extra cosine-shaped swelling at the middle of the four long faces
    double noise_mm = 0.0;       // uniform noise along the face normal, +-noise_mm
    double rotation_deg = 0.0;   // rigid misplacement applied last
    Vector3 rotation_axis = Vector3(1, 2, 3);
    Vector3 translation = Vector3::Zero();
    std::size_t n_points = 20000;
    std::uint64_t seed = kDefaultSeed;
};

PointCloud synthetic_scan(const ReferencePrism& prism, const SyntheticScanOptions& options);

// Tab separated strain(%)/stress(MPa) export with four header lines: preload
// at slope 200 MPa, elastic part at `elastic_mpa`, softening after the peak.
std::string synthetic_curve_file(double elastic_mpa, double peak_mpa, double noise, std::uint64_t seed);

// Writes scans/specimen_{a,b,c}.xyz, dosage.csv and curves/*.tsv under `dir`
// and returns the scan paths.
std::vector<std::filesystem::path> write_fixture_set(const std::filesystem::path& dir,
                                                     std::uint64_t seed = kDefaultSeed);

} // namespace printacc
