#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace printacc {

struct LoadSample {
    double displacement_mm = 0.0;
    double force_n = 0.0;
};

struct LoadRecord {
    std::vector<LoadSample> samples;
};

struct StressStrainCurve {
    std::vector<double> strain; // dimensionless
    std::vector<double> stress; // MPa

    std::size_t size() const { return strain.size(); }
    bool empty() const { return strain.empty(); }
};

// Three-point bending. Width and height are the measured specimen dimensions.
struct BendingSetup {
    double span_mm = 120.0;
    double width_mm = 40.0;
    double height_mm = 40.0;

    void validate() const;
};

// sigma = 3 F L / (2 b h²), epsilon = 6 h delta / L². Small-deflection,
// linear elastic beam theory; only meaningful before the peak.
StressStrainCurve bending_stress_strain(const LoadRecord& record, const BendingSetup& setup);

// sigma = F / A, epsilon = delta / h. Throws DomainError for an empty record.
StressStrainCurve compression_stress_strain(const LoadRecord& record, double area_mm2, double height_mm);

// Shifts the curve so its first sample is (0, 0).
StressStrainCurve zero_offset(const StressStrainCurve& curve);

struct ModulusFitOptions {
    std::size_t window_len = 100;
    std::size_t stride = 1;
    // Windows whose slope is below this fraction of the steepest window slope
    // are not eligible, which keeps flat preload segments from winning.
    double slope_floor = 0.5;
};

struct ElasticFit {
    double young_modulus_mpa = 0.0;
    double intercept_mpa = 0.0;
    double r_squared = 0.0;
    std::size_t window_start = 0;
    std::size_t window_len = 0;
    double peak_stress_mpa = 0.0;
    std::size_t peak_index = 0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool defined = false; // false when x or y is constant
};

// Ordinary least squares y = slope * x + intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Slides a window over the curve up to the peak-stress index, fits each
// window by least squares and returns the eligible window with the highest
// R². Throws DomainError if the curve is shorter than the window, no window
// fits before the peak, or every window has constant stress.
ElasticFit fit_young_modulus(const StressStrainCurve& curve, const ModulusFitOptions& options = {});

// Centered moving average. Near the ends only the samples inside the series
// are averaged, so [0, 1, 2] with window 3 gives [0.5, 1, 1.5].
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

enum class CurveColumns { StrainStress, DisplacementForce };

struct CurveFileFormat {
    std::size_t skip_lines = 4;
    char separator = '\t';
    CurveColumns columns = CurveColumns::StrainStress;
    bool strain_in_percent = true; // StrainStress only
};

// Reads a tab separated test export. For StrainStress files the curve is
// returned directly; DisplacementForce files come back as a load record.
StressStrainCurve parse_curve_file(std::string_view text, const CurveFileFormat& format = {});
LoadRecord parse_load_file(std::string_view text, const CurveFileFormat& format);

std::string elastic_fit_to_json(const ElasticFit& fit, int precision = 4);

struct GroupSummary {
    double nozzle_time_ms = 0.0;
    std::size_t count = 0;
    double e_mean = 0.0, e_std = 0.0;
    double sigma_mean = 0.0, sigma_std = 0.0;
};

struct SpecimenFit {
    std::string specimen;
    double nozzle_time_ms = 0.0;
    ElasticFit fit;
};

// Mean and sample standard deviation (NaN for one specimen) per nozzle time,
// ascending.
std::vector<GroupSummary> summarize_by_nozzle_time(const std::vector<SpecimenFit>& fits);
std::string group_summary_to_csv(const std::vector<GroupSummary>& groups, int precision = 4);

} // namespace printacc
