#include "printacc/synthetic.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "printacc/textio.hpp"

namespace printacc {

PointCloud synthetic_scan(const ReferencePrism& prism, const SyntheticScanOptions& o)
{
    const double d = o.inflation_mm;
    const ReferencePrism inflated(prism.dims + Vector3::Constant(2 * d), prism.origin - Vector3::Constant(d));
    PointCloud cloud = sample_reference_surface(inflated, o.n_points, o.seed);
    Rng rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
    const Point3 lo = inflated.min_corner(), hi = inflated.max_corner(), c = inflated.center();
    for (auto& p : cloud.points) {
        // Push along the normal of the face the point sits on.
        for (int a = 0; a < 3; ++a) {
            const bool on_hi = std::abs(p[a] - hi[a]) < 1e-9, on_lo = std::abs(p[a] - lo[a]) < 1e-9;
            if (!on_hi && !on_lo)
                continue;
            double shift = o.noise_mm * (2 * rng.uniform() - 1);
            if (a != 0 && o.bulge_mm != 0.0) {
                const int b = a == 1 ? 2 : 1;
                const double u = (p[0] - c[0]) / (0.5 * inflated.dims[0]);
                const double v = (p[b] - c[b]) / (0.5 * inflated.dims[b]);
                shift += o.bulge_mm * std::cos(0.5 * M_PI * u) * std::cos(0.5 * M_PI * v);
            }
            p[a] += on_hi ? shift : -shift;
            break;
        }
    }
    const Eigen::Matrix3d r = Eigen::AngleAxisd(o.rotation_deg * M_PI / 180.0, o.rotation_axis.normalized()).toRotationMatrix();
    for (auto& p : cloud.points)
        p = r * (p - prism.center()) + prism.center() + o.translation;
    return cloud;
}

std::string synthetic_curve_file(double elastic_mpa, double peak_mpa, double noise, std::uint64_t seed)
{
    Rng rng(seed);
    const double knee = 5e-4, s_knee = 200.0 * knee;
    const double peak = knee + (peak_mpa - s_knee) / elastic_mpa;
    const double end = peak * 1.2;
    std::string out = "synthetic specimen\nthree point bending\nStrain\tStress\n%\tMPa\n";
    for (int i = 0;; ++i) {
        const double e = i * 1e-5;
        if (e > end)
            break;
        double s = e <= knee ? 200.0 * e : e <= peak ? s_knee + elastic_mpa * (e - knee) : peak_mpa - 2.0 * elastic_mpa * (e - peak);
        s *= 1.0 + noise * (2 * rng.uniform() - 1);
        out += format_fixed(100.0 * e, 6) + "\t" + format_fixed(s, 6) + "\n";
    }
    return out;
}

std::vector<std::filesystem::path> write_fixture_set(const std::filesystem::path& dir, std::uint64_t seed)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir / "scans");
    fs::create_directories(dir / "curves");
    const ReferencePrism prism;
    struct Setup {
        const char* name;
        double inflation, bulge, rotation;
        Vector3 translation;
    };
    const Setup setups[] = {{"specimen_a", 1.0, 0.0, 4.0, Vector3(6, -4, 2)},
                          {"specimen_b", 2.0, 3.0, 7.0, Vector3(-8, 5, 3)},
                          {"specimen_c", 3.0, 6.0, 10.0, Vector3(10, 6, -5)}};
    std::vector<fs::path> scans;
    std::uint64_t k = 0;
    for (const auto& s : setups) {
        SyntheticScanOptions o;
        o.inflation_mm = s.inflation;
        o.bulge_mm = s.bulge;
        o.noise_mm = 0.05;
        o.rotation_deg = s.rotation;
        o.translation = s.translation;
        o.seed = seed + 101 * ++k;
        const fs::path path = dir / "scans" / (std::string(s.name) + ".xyz");
        write_file(path, format_xyz(synthetic_scan(prism, o), 6));
        scans.push_back(path);
    }
    write_file(dir / "dosage.csv", "nozzle_time_ms,droplet_mass_mg,droplet_mass_std_mg,voxel_count,retained\n"
                                   "11,29.52,0.06,1372,2\n15,29.50,0.12,1372,2\n17,33.58,0.17,1372,4\n"
                                   "20,40.86,0.03,1372,3\n22,43.30,0.34,1372,3\n25,51.33,0.11,1372,1\n"
                                   "30,63.94,0.55,1372,3\n");
    write_file(dir / "curves" / "t11_1.tsv", synthetic_curve_file(620.0, 2.0, 0.005, seed + 1));
    write_file(dir / "curves" / "t11_2.tsv", synthetic_curve_file(650.0, 2.1, 0.005, seed + 2));
    write_file(dir / "curves" / "t30_1.tsv", synthetic_curve_file(796.8, 2.6, 0.005, seed + 3));
    write_file(dir / "curves" / "t30_2.tsv", synthetic_curve_file(780.0, 2.5, 0.005, seed + 4));
    return scans;
}

} // namespace printacc
