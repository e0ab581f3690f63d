#include "printacc/dosage.hpp"

#include <cmath>

#include "printacc/error.hpp"
#include "printacc/json_util.hpp"
#include "printacc/textio.hpp"

namespace printacc {

void PowderSpec::validate() const
{
    if (!(bulk_density_kg_m3 > 0.0))
        throw DomainError("powder bulk density must be positive");
    if (!(cement_fraction > 0.0 && cement_fraction < 1.0))
        throw DomainError("cement fraction must lie in (0, 1)");
}

double water_mass_per_part(double droplet_mass_mg, int voxel_count)
{
    if (!(droplet_mass_mg > 0.0) || voxel_count <= 0)
        throw DomainError("droplet mass and voxel count must be positive");
    return droplet_mass_mg * voxel_count / 1000.0;
}

MeanStd water_mass_per_part(const DosageRecord& record)
{
    return {water_mass_per_part(record.droplet_mass_mg, record.voxel_count),
            record.droplet_mass_std_mg * record.voxel_count / 1000.0};
}

namespace {

// Dry powder mass of one cubic voxel in mg: kg/m³ * mm³ * 1e-3 = mg.
double voxel_powder_mass_mg(double pitch_mm, const PowderSpec& powder)
{
    if (!(pitch_mm > 0.0))
        throw DomainError("voxel pitch must be positive");
    powder.validate();
    return powder.bulk_density_kg_m3 * pitch_mm * pitch_mm * pitch_mm * 1e-3;
}

} // namespace

double wc_theoretical(double droplet_mass_mg, double voxel_pitch_mm, const PowderSpec& powder)
{
    if (droplet_mass_mg < 0.0)
        throw DomainError("droplet mass must not be negative");
    return droplet_mass_mg / (powder.cement_fraction * voxel_powder_mass_mg(voxel_pitch_mm, powder));
}

MeanStd wc_theoretical(const DosageRecord& record, double voxel_pitch_mm, const PowderSpec& powder)
{
    return {wc_theoretical(record.droplet_mass_mg, voxel_pitch_mm, powder),
            wc_theoretical(record.droplet_mass_std_mg, voxel_pitch_mm, powder)};
}

double wc_mass_based(double total_mass_g, double total_water_g, double cement_fraction)
{
    if (!(cement_fraction > 0.0 && cement_fraction < 1.0))
        throw DomainError("cement fraction must lie in (0, 1)");
    if (total_water_g < 0.0)
        throw DomainError("water mass must not be negative");
    const double solid = total_mass_g - total_water_g;
    if (!(solid > 0.0))
        throw DomainError("solid mass (total - water) must be positive");
    return total_water_g / (cement_fraction * solid);
}

VolumeCorrection wc_volume_corrected(double theo, double v_real_mm3, double v_ref_mm3)
{
    if (!(v_real_mm3 > 0.0) || !(v_ref_mm3 > 0.0))
        throw DomainError("volumes must be positive");
    VolumeCorrection out;
    out.gamma = v_real_mm3 / v_ref_mm3;
    out.corrected = out.gamma * theo;
    return out;
}

WcEstimate estimate_wc(const DosageRecord& record, double voxel_pitch_mm, const PowderSpec& powder)
{
    WcEstimate e;
    e.nozzle_time_ms = record.nozzle_time_ms;
    const MeanStd water = water_mass_per_part(record);
    e.water_mass_g = water.mean;
    e.water_mass_std_g = water.std;
    const MeanStd theo = wc_theoretical(record, voxel_pitch_mm, powder);
    e.theo = theo.mean;
    e.theo_std = theo.std;
    if (record.total_mass_g)
        e.mass_based = wc_mass_based(*record.total_mass_g, water.mean, powder.cement_fraction);
    if (record.v_real_mm3) {
        const double v_ref = record.v_ref_mm3 ? *record.v_ref_mm3
                                              : record.voxel_count * voxel_pitch_mm * voxel_pitch_mm * voxel_pitch_mm;
        const VolumeCorrection c = wc_volume_corrected(e.theo, *record.v_real_mm3, v_ref);
        e.gamma = c.gamma;
        e.corrected = c.corrected;
    }
    return e;
}

std::vector<DosageRecord> reference_dosage_table()
{
    auto row = [](double t, double m, double s, int retained) {
        DosageRecord r;
        r.nozzle_time_ms = t;
        r.droplet_mass_mg = m;
        r.droplet_mass_std_mg = s;
        r.retained = retained;
        return r;
    };
    return {row(11, 29.52, 0.06, 2), row(15, 29.50, 0.12, 2), row(17, 33.58, 0.17, 4), row(20, 40.86, 0.03, 3),
            row(22, 43.30, 0.34, 3), row(25, 51.33, 0.11, 1), row(30, 63.94, 0.55, 3)};
}

std::vector<DosageRecord> parse_dosage_csv(std::string_view text)
{
    const CsvTable table = parse_csv(text);
    const auto c_time = table.require("nozzle_time_ms");
    const auto c_mass = table.require("droplet_mass_mg");
    const int c_std = table.column("droplet_mass_std_mg");
    const int c_count = table.column("voxel_count");
    const int c_ret = table.column("retained");
    const int c_total = table.column("total_mass_g");
    const int c_vreal = table.column("v_real_mm3");
    const int c_vref = table.column("v_ref_mm3");

    auto optional_number = [](const std::vector<std::string>& row, int col, const char* what) -> std::optional<double> {
        if (col < 0 || row[col].empty())
            return std::nullopt;
        return parse_number(row[col], what);
    };

    std::vector<DosageRecord> out;
    for (const auto& row : table.rows) {
        DosageRecord r;
        r.nozzle_time_ms = parse_number(row[c_time], "nozzle_time_ms");
        r.droplet_mass_mg = parse_number(row[c_mass], "droplet_mass_mg");
        r.droplet_mass_std_mg = optional_number(row, c_std, "droplet_mass_std_mg").value_or(0.0);
        if (auto n = optional_number(row, c_count, "voxel_count")) {
            if (*n != std::floor(*n) || *n <= 0)
                throw FormatError("dosage csv: voxel_count must be a positive integer");
            r.voxel_count = static_cast<int>(*n);
        }
        r.retained = static_cast<int>(optional_number(row, c_ret, "retained").value_or(0.0));
        r.total_mass_g = optional_number(row, c_total, "total_mass_g");
        r.v_real_mm3 = optional_number(row, c_vreal, "v_real_mm3");
        r.v_ref_mm3 = optional_number(row, c_vref, "v_ref_mm3");
        if (!(r.nozzle_time_ms > 0.0) || !(r.droplet_mass_mg > 0.0) || r.droplet_mass_std_mg < 0.0)
            throw FormatError("dosage csv: nozzle time and droplet mass must be positive");
        out.push_back(r);
    }
    return out;
}

std::string wc_estimates_to_csv(const std::vector<WcEstimate>& rows, int precision)
{
    auto opt = [&](const std::optional<double>& v) { return v ? format_fixed(*v, precision) : std::string(); };
    std::string out = "nozzle_time_ms,water_mass_g,water_mass_std_g,wc_theo,wc_theo_std,wc_mass,gamma,wc_corr\n";
    for (const auto& e : rows) {
        out += format_fixed(e.nozzle_time_ms, precision) + "," + format_fixed(e.water_mass_g, precision) + "," +
               format_fixed(e.water_mass_std_g, precision) + "," + format_fixed(e.theo, precision) + "," +
               format_fixed(e.theo_std, precision) + "," + opt(e.mass_based) + "," + opt(e.gamma) + "," +
               opt(e.corrected) + "\n";
    }
    return out;
}

std::string wc_estimates_to_json(const std::vector<WcEstimate>& rows, int precision)
{
    auto opt = [&](const std::optional<double>& v) -> nlohmann::ordered_json {
        return v ? json_number(*v, precision) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : rows) {
        nlohmann::ordered_json j;
        j["nozzle_time_ms"] = json_number(e.nozzle_time_ms, precision);
        j["water_mass_g"] = json_number(e.water_mass_g, precision);
        j["water_mass_std_g"] = json_number(e.water_mass_std_g, precision);
        j["theo"] = json_number(e.theo, precision);
        j["theo_std"] = json_number(e.theo_std, precision);
        j["mass_based"] = opt(e.mass_based);
        j["gamma"] = opt(e.gamma);
        j["corrected"] = opt(e.corrected);
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

} // namespace printacc
