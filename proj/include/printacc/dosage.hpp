#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace printacc {

// One nozzle opening time of a print series. Masses in mg, times in ms.
struct DosageRecord {
    double nozzle_time_ms = 0.0;
    double droplet_mass_mg = 0.0;
    double droplet_mass_std_mg = 0.0;
    int voxel_count = 1372; // 28 x 7 x 7 prism
    int retained = 0;       // specimens kept for analysis

    // Optional per-series measurements for the mass and volume based ratios.
    std::optional<double> total_mass_g;
    std::optional<double> v_real_mm3;
    std::optional<double> v_ref_mm3;

    double mass_flow_rate() const { return droplet_mass_mg / nozzle_time_ms; }
    double mass_flow_rate_std() const { return droplet_mass_std_mg / nozzle_time_ms; }
};

struct PowderSpec {
    double bulk_density_kg_m3 = 1695.0;
    double cement_fraction = 0.25;

    void validate() const;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

// Grams of water delivered to a part of `voxel_count` voxels.
double water_mass_per_part(double droplet_mass_mg, int voxel_count);
// Linear propagation of the droplet mass standard deviation.
MeanStd water_mass_per_part(const DosageRecord& record);

// Water/cement ratio if each droplet stayed inside its own cubic voxel of the
// given pitch (mm).
double wc_theoretical(double droplet_mass_mg, double voxel_pitch_mm, const PowderSpec& powder = {});
MeanStd wc_theoretical(const DosageRecord& record, double voxel_pitch_mm, const PowderSpec& powder = {});

// Water over cement mass of a weighed specimen. Throws DomainError when the
// solid mass total_mass - total_water is not positive or water is negative.
double wc_mass_based(double total_mass_g, double total_water_g, double cement_fraction);

struct VolumeCorrection {
    double gamma = 1.0;
    double corrected = 0.0;
};

// gamma = v_real / v_ref, corrected = gamma * theo.
VolumeCorrection wc_volume_corrected(double theo, double v_real_mm3, double v_ref_mm3);

struct WcEstimate {
    double nozzle_time_ms = 0.0;
    double water_mass_g = 0.0;
    double water_mass_std_g = 0.0;
    double theo = 0.0;
    double theo_std = 0.0;
    std::optional<double> mass_based;
    std::optional<double> gamma;
    std::optional<double> corrected;
};

// All estimators that the record's optional measurements allow.
WcEstimate estimate_wc(const DosageRecord& record, double voxel_pitch_mm, const PowderSpec& powder = {});

// Droplet masses from the dosage table of the reference print series.
std::vector<DosageRecord> reference_dosage_table();

// Header: nozzle_time_ms,droplet_mass_mg,droplet_mass_std_mg,voxel_count,retained
// plus optional total_mass_g, v_real_mm3, v_ref_mm3 (empty cells allowed).
std::vector<DosageRecord> parse_dosage_csv(std::string_view text);

std::string wc_estimates_to_csv(const std::vector<WcEstimate>& rows, int precision = 4);
std::string wc_estimates_to_json(const std::vector<WcEstimate>& rows, int precision = 4);

} // namespace printacc
