#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "printacc/dosage.hpp"
#include "printacc/error.hpp"
#include "printacc/geometry.hpp"

using namespace printacc;

namespace {

struct TableRow {
    double flow, flow_std, water_g, water_std_g;
};

// Published mass flow rate and water-per-prism columns, same row order as
// reference_dosage_table().
const TableRow kPublished[] = {{2.684, 0.005, 40.50, 0.08}, {1.967, 0.008, 40.47, 0.16}, {1.975, 0.010, 46.07, 0.24},
                               {2.043, 0.001, 56.06, 0.04}, {1.968, 0.016, 59.41, 0.47}, {2.053, 0.004, 70.42, 0.15},
                               {2.131, 0.018, 87.73, 0.75}};

} // namespace

TEST_CASE("dosage table arithmetic")
{
    const auto table = reference_dosage_table();
    REQUIRE(table.size() == 7);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& r = table[i];
        CHECK(std::abs(water_mass_per_part(r.droplet_mass_mg, r.voxel_count) - kPublished[i].water_g) <= 0.01);
        const MeanStd w = water_mass_per_part(r);
        CHECK(std::abs(w.std - kPublished[i].water_std_g) <= 0.01);
        CHECK(std::abs(r.mass_flow_rate() - kPublished[i].flow) <= 0.02);
        CHECK(std::abs(r.mass_flow_rate_std() - kPublished[i].flow_std) <= 0.02);
    }
    CHECK(water_mass_per_part(1.0, 1000) == 1.0);
    CHECK_THROWS_AS(water_mass_per_part(-1.0, 10), DomainError);
}

TEST_CASE("theoretical ratio")
{
    // V = 185.193 mm^3, m_voxel = 313.9 mg
    CHECK(wc_theoretical(29.52, 5.7) == doctest::Approx(0.3762).epsilon(1e-3));
    const double m_voxel = 1.695 * std::pow(5.7, 3); // mg
    CHECK(wc_theoretical(0.25 * m_voxel, 5.7) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(wc_theoretical(63.94, 5.7) > wc_theoretical(29.52, 5.7));
    CHECK(std::abs(wc_theoretical(63.94, 5.7) - 0.815) <= 0.005);

    // Linear in droplet mass.
    const double a = wc_theoretical(10.0, 5.7), b = wc_theoretical(30.0, 5.7), c = wc_theoretical(40.0, 5.7);
    CHECK(c == doctest::Approx(a + b).epsilon(1e-14));
    CHECK(wc_theoretical(0.0, 5.7) == 0.0);
    CHECK_THROWS_AS(wc_theoretical(10.0, 0.0), DomainError);
    PowderSpec bad;
    bad.cement_fraction = 1.0;
    CHECK_THROWS_AS(wc_theoretical(10.0, 5.7, bad), DomainError);
}

TEST_CASE("mass based ratio")
{
    CHECK(wc_mass_based(850.0, 40.5, 0.25) == doctest::Approx(40.5 / (0.25 * 809.5)).epsilon(1e-14));
    CHECK(wc_mass_based(850.0, 40.5, 0.25) == doctest::Approx(0.2001).epsilon(1e-3));
    CHECK(wc_mass_based(850.0, 0.0, 0.25) == 0.0);
    CHECK_THROWS_AS(wc_mass_based(40.0, 40.5, 0.25), DomainError);
    CHECK_THROWS_AS(wc_mass_based(40.5, 40.5, 0.25), DomainError);
}

TEST_CASE("volume correction")
{
    const VolumeCorrection same = wc_volume_corrected(0.376, 1000.0, 1000.0);
    CHECK(same.gamma == 1.0);
    CHECK(same.corrected == 0.376);
    const VolumeCorrection big = wc_volume_corrected(0.376, 1300.0, 1000.0);
    CHECK(big.corrected == doctest::Approx(0.4888).epsilon(1e-12));
    CHECK(big.corrected == big.gamma * 0.376);

    const ReferencePrism nominal, inflated(Vector3(161.6, 41.9, 41.9));
    const VolumeCorrection g =
        wc_volume_corrected(0.376, mesh_volume(inflated.to_mesh()), mesh_volume(nominal.to_mesh()));
    CHECK(g.gamma == doctest::Approx(1.116).epsilon(1e-3));
    CHECK_THROWS_AS(wc_volume_corrected(0.3, 0.0, 1.0), DomainError);
}

TEST_CASE("estimates per nozzle time")
{
    auto rows = reference_dosage_table();
    rows[0].total_mass_g = 850.0;
    rows[0].v_real_mm3 = 1.3 * 1372 * std::pow(5.7, 3);
    std::vector<WcEstimate> est;
    for (const auto& r : rows)
        est.push_back(estimate_wc(r, 5.7));
    CHECK(est[0].mass_based.has_value());
    REQUIRE(est[0].gamma.has_value());
    CHECK(*est[0].gamma == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(*est[0].corrected == *est[0].gamma * est[0].theo);
    CHECK_FALSE(est[1].gamma.has_value());
    for (std::size_t i = 1; i < est.size(); ++i)
        CHECK(est[i].theo / rows[i].droplet_mass_mg == doctest::Approx(est[0].theo / rows[0].droplet_mass_mg));

    const std::string csv = wc_estimates_to_csv(est);
    CHECK(csv.rfind("nozzle_time_ms,", 0) == 0);
    const auto j = nlohmann::json::parse(wc_estimates_to_json(est));
    CHECK(j.size() == 7);
    CHECK(j[1]["gamma"].is_null());
}

TEST_CASE("dosage csv parsing")
{
    const auto rows = parse_dosage_csv("nozzle_time_ms,droplet_mass_mg,droplet_mass_std_mg,voxel_count,retained\n"
                                       "11,29.52,0.06,1372,2\n"
                                       "30,63.94,0.55,1372,3\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].droplet_mass_mg == 63.94);
    CHECK(rows[1].retained == 3);
    CHECK_FALSE(rows[0].total_mass_g.has_value());

    const auto extra = parse_dosage_csv("nozzle_time_ms,droplet_mass_mg,total_mass_g,v_real_mm3\n20,40.86,900,\n");
    CHECK(extra[0].total_mass_g == 900.0);
    CHECK_FALSE(extra[0].v_real_mm3.has_value());
    CHECK(extra[0].voxel_count == 1372);

    CHECK_THROWS_AS(parse_dosage_csv("droplet_mass_mg\n1\n"), FormatError);
    CHECK_THROWS_AS(parse_dosage_csv("nozzle_time_ms,droplet_mass_mg\n0,1\n"), FormatError);
    CHECK_THROWS_AS(parse_dosage_csv("nozzle_time_ms,droplet_mass_mg\n11,abc\n"), FormatError);
}
