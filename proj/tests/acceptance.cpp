// Acceptance run: one PASS/FAIL line per criterion with its wall time.
// Exit status is nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "printacc/cli.hpp"
#include "printacc/deviation.hpp"
#include "printacc/dosage.hpp"
#include "printacc/mechanics.hpp"
#include "printacc/metrics.hpp"
#include "printacc/projection.hpp"
#include "printacc/registration.hpp"
#include "printacc/stl.hpp"
#include "printacc/synthetic.hpp"
#include "printacc/voxel.hpp"

using namespace printacc;
namespace fs = std::filesystem;

namespace {

// Collects failed checks of one criterion.
struct Outcome {
    std::vector<std::string> failures;
    std::string detail;

    void check(bool ok, const std::string& what)
    {
        if (!ok && failures.size() < 5)
            failures.push_back(what);
        else if (!ok)
            failures.back() = "... more";
    }
};

std::string num(double v, int prec = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

struct Criterion {
    int id;
    std::string title;
    double limit_s; // 0: no limit
    std::function<void(Outcome&)> body;
};

// ---- 1 ----------------------------------------------------------------

void water_mass_table(Outcome& o)
{
    const double published[] = {40.50, 40.47, 46.07, 56.06, 59.41, 70.42, 87.73};
    const auto table = reference_dosage_table();
    o.check(table.size() == 7, "table has 7 rows");
    double worst = 0.0;
    for (std::size_t i = 0; i < table.size() && i < 7; ++i) {
        const double w = water_mass_per_part(table[i].droplet_mass_mg, 1372);
        worst = std::max(worst, std::abs(w - published[i]));
        o.check(std::abs(w - published[i]) <= 0.01,
                num(table[i].droplet_mass_mg, 4) + " mg -> " + num(w, 6) + " g, expected " + num(published[i], 4));
    }
    o.detail = "max |error| " + num(worst) + " g";
}

// ---- 2 ----------------------------------------------------------------

void icp_oracle(Outcome& o)
{
    Rng rng(2024);
    const ReferencePrism prism;
    const PointCloud target = sample_reference_surface(prism, 3000, 7);
    const Point3 c = prism.center();
    double worst_rms = 0.0;
    std::size_t worst_iter = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const double angle = rng.uniform(0.0, 20.0) * M_PI / 180.0;
        const Eigen::Matrix3d r = fixtures::rotation_about(fixtures::random_unit(rng), angle);
        const Vector3 shift = rng.uniform(0.0, 20.0) * fixtures::random_unit(rng);
        RigidTransform perturb;
        perturb.rotation = r;
        perturb.translation = c - r * c + shift;
        const PointCloud source = apply_transform(target, perturb);

        const IcpResult res = icp_align(source, target);
        const PointCloud back = apply_transform(source, res.transform);
        const double rms = std::sqrt(mean_squared_error(back.points, target.points));
        worst_rms = std::max(worst_rms, rms);
        worst_iter = std::max(worst_iter, res.iterations);
        const std::string tag = "trial " + std::to_string(trial);
        o.check(rms < 1e-6, tag + ": point RMS " + num(rms));
        o.check(res.iterations <= 100, tag + ": " + std::to_string(res.iterations) + " iterations");
        bool monotone = true;
        for (std::size_t k = 1; k < res.cost_history.size(); ++k)
            monotone = monotone && res.cost_history[k] <= res.cost_history[k - 1];
        o.check(monotone, tag + ": cost increased");
        o.check(res.transform.is_proper_rotation(), tag + ": improper rotation");
    }
    o.detail = "worst RMS " + num(worst_rms) + " mm, max iterations " + std::to_string(worst_iter);
}

// ---- 3 ----------------------------------------------------------------

double brute_directed(const std::vector<Point3>& a, const std::vector<Point3>& b, bool sup)
{
    double acc = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b)
            best = std::min(best, (p - q).norm());
        acc = sup ? std::max(acc, best) : acc + best;
    }
    return sup ? acc : acc / static_cast<double>(a.size());
}

void metric_oracles(Outcome& o)
{
    Rng rng(33);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = fixtures::random_points(rng, 1 + rng.below(500), 40);
        auto b = fixtures::random_points(rng, 1 + rng.below(500), 40);
        for (auto& p : b)
            p += Vector3(rng.uniform(-5, 5), 0, 0);
        const PointCloud pa(a), pb(b);
        const double h = std::max(brute_directed(a, b, true), brute_directed(b, a, true));
        const double ch = brute_directed(a, b, false) + brute_directed(b, a, false);
        const double eh = std::abs(hausdorff(pa, pb) - h), ec = std::abs(chamfer(pa, pb) - ch);
        worst = std::max({worst, eh, ec});
        o.check(eh <= 1e-12, "pair " + std::to_string(trial) + ": hausdorff off by " + num(eh));
        o.check(ec <= 1e-12, "pair " + std::to_string(trial) + ": chamfer off by " + num(ec));
    }

    const ReferencePrism prism;
    const MeshQuery mesh(prism.to_mesh());
    const Point3 c = mesh_centroid(prism.to_mesh());
    const PointCloud ref = sample_reference_surface(prism, 4000, 5);
    PointCloud scaled;
    for (const auto& p : ref.points)
        scaled.points.push_back(c + 1.1 * (p - c));
    const PaiResult big = pai(scaled, mesh);
    o.check(std::abs(big.pai - 1.1) <= 1e-9, "scaled PAI " + num(big.pai, 15));
    o.check(big.s_pai < 1e-9, "scaled s_PAI " + num(big.s_pai));

    const MetricsReport same = metrics_report(ref, ref, mesh);
    o.check(same.hausdorff_mm == 0.0 && same.chamfer_mm == 0.0, "identical clouds: nonzero distance");
    o.check(std::abs(same.pai - 1.0) <= 1e-9 && same.s_pai < 1e-9,
            "identical clouds: PAI " + num(same.pai, 15) + ", s " + num(same.s_pai));
    o.detail = "max brute-force gap " + num(worst) + ", PAI(1.1x) " + num(big.pai, 12);
}

// ---- 4 ----------------------------------------------------------------

void signed_distance_offsets(Outcome& o)
{
    const ReferencePrism prism;
    const MeshQuery q(prism.to_mesh());
    double worst = 0.0;
    std::size_t total = 0;
    for (double delta : {1.0, -1.0}) {
        const auto samples = fixtures::offset_face_samples(prism, delta, 100'000, delta > 0 ? 41 : 42);
        PointCloud cloud;
        for (const auto& s : samples)
            cloud.points.push_back(s.point);
        const DeviationField field = deviation_field(cloud, q, prism);
        total += field.size();
        for (double d : field.signed_distance)
            worst = std::max(worst, std::abs(d - delta));
    }
    o.check(worst <= 1e-6, "offset field deviates by " + num(worst));

    Rng rng(43);
    const TriangleMesh box = prism.to_mesh();
    const TriangleMesh ball =
        fixtures::transformed(fixtures::icosphere(20, 3), fixtures::rotation_about(Vector3(1, 2, 3), 0.4), Vector3(3, -2, 1));
    const MeshQuery qball(ball);
    std::size_t checked = 0, agree = 0, inside = 0;
    while (checked < 10'000) {
        const bool use_box = checked % 2 == 0;
        const Point3 p = use_box ? Point3(rng.uniform(-10, 170), rng.uniform(-10, 50), rng.uniform(-10, 50))
                                 : Point3(rng.uniform(-25, 25), rng.uniform(-25, 25), rng.uniform(-25, 25));
        const auto in = fixtures::oracle_parity_inside(use_box ? box : ball, p);
        if (!in)
            continue;
        const double d = signed_distance(p, use_box ? q : qball);
        if (d == 0.0)
            continue;
        ++checked;
        inside += *in;
        agree += (d < 0) == *in;
    }
    o.check(agree == checked, std::to_string(checked - agree) + " sign disagreements");
    o.detail = std::to_string(total) + " offset points, max |d - delta| " + num(worst) + "; parity " +
               std::to_string(agree) + "/" + std::to_string(checked) + " (" + std::to_string(inside) + " inside)";
}

// ---- 5 ----------------------------------------------------------------

void projection(Outcome& o)
{
    const ReferencePrism prism;
    const DeviationField field =
        deviation_field(fixtures::minkowski_offset_samples(prism, 1.0, 60'000, 51), prism.to_mesh(), prism);
    const auto grids = FaceProjector(field, prism).project_all();
    double worst = 0.0;
    std::size_t nodes = 0, foreign = 0;
    for (const auto& g : grids) {
        for (std::size_t k = 0; k < g.values.size(); ++k) {
            ++nodes;
            worst = std::max(worst, std::isnan(g.values[k]) ? INFINITY : std::abs(g.values[k] - 1.0));
            foreign += g.source[k] == kNoSource || field.face[g.source[k]] != g.face;
        }
    }
    o.check(worst <= 1e-6, "grid deviates from +1 by " + num(worst));
    o.check(foreign == 0, std::to_string(foreign) + " nodes sourced from a foreign face");

    // Adversarial: a +y point lies nearer to a +x node than the only +x point.
    DeviationField trap;
    const ReferencePrism small(Vector3(10, 10, 10));
    trap.points = PointCloud({Point3(10.2, 9.9, 0.5), Point3(10, 5, 5)});
    trap.signed_distance = {7.0, 1.0};
    trap.face = {Face::PosY, Face::PosX};
    const FaceGrid g = project_face(trap, small, Face::PosX);
    bool clean = true;
    for (std::size_t k = 0; k < g.values.size(); ++k)
        clean = clean && g.source[k] == 1 && trap.face[g.source[k]] == Face::PosX;
    o.check(clean, "trap field: node sourced from +y");
    o.detail = std::to_string(nodes) + " nodes, max |v - 1| " + num(worst) + ", foreign sources " +
               std::to_string(foreign);
}

// ---- 6 ----------------------------------------------------------------

void voxelization(Outcome& o)
{
    const std::string stl = write_stl_binary(ReferencePrism().to_mesh());
    const TriangleMesh mesh = parse_stl(std::as_bytes(std::span(stl.data(), stl.size())));
    const VoxelModel m = voxelize(mesh, 5.7);
    o.check(m.dims == VoxelIndex{28, 7, 7}, "lattice " + std::to_string(m.dims[0]) + "x" + std::to_string(m.dims[1]) +
                                                "x" + std::to_string(m.dims[2]));
    o.check(m.count() == 1372, std::to_string(m.count()) + " occupied voxels");

    std::array<FaceGrid, 6> maps;
    for (Face f : kAllFaces) {
        maps[face_index(f)] = make_face_grid(ReferencePrism(), f, 1.0);
        std::fill(maps[face_index(f)].values.begin(), maps[face_index(f)].values.end(), 0.0);
    }
    CompensationPolicy p;
    p.global_shrink = true;
    const CompensationResult r = compensate(m, maps, p);
    o.check(r.model.dims == VoxelIndex{27, 6, 6} && r.model.count() == 972,
            "after shrink " + std::to_string(r.model.count()) + " voxels");
    o.detail = std::to_string(m.count()) + " voxels (" + std::to_string(m.dims[0]) + "x" + std::to_string(m.dims[1]) +
               "x" + std::to_string(m.dims[2]) + "), shrunk to " + std::to_string(r.model.dims[0]) + "x" +
               std::to_string(r.model.dims[1]) + "x" + std::to_string(r.model.dims[2]);
}

// ---- 7 ----------------------------------------------------------------

StressStrainCurve bilinear_curve(double elastic, double noise, std::uint64_t seed)
{
    Rng rng(seed);
    StressStrainCurve c;
    const double knee = 5e-4, peak = 3e-3, end = 3.6e-3;
    const double s_knee = 200.0 * knee, s_peak = s_knee + elastic * (peak - knee);
    for (int i = 0; i * 1e-5 <= end + 1e-12; ++i) {
        const double e = i * 1e-5;
        double s = e <= knee ? 200.0 * e : e <= peak ? s_knee + elastic * (e - knee) : s_peak - 1500.0 * (e - peak);
        s *= 1.0 + noise * (2.0 * rng.uniform() - 1.0);
        c.strain.push_back(e);
        c.stress.push_back(s);
    }
    return c;
}

void modulus_fit(Outcome& o)
{
    StressStrainCurve line;
    for (int i = 0; i < 300; ++i) {
        line.strain.push_back(i * 1e-5);
        line.stress.push_back(800.0 * line.strain.back() + 0.1);
    }
    const ElasticFit exact = fit_young_modulus(line);
    o.check(std::abs(exact.young_modulus_mpa - 800.0) < 1e-9, "line slope " + num(exact.young_modulus_mpa, 15));
    o.check(std::abs(exact.r_squared - 1.0) < 1e-12, "line R2 " + num(exact.r_squared, 15));

    int within = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const ElasticFit f = fit_young_modulus(zero_offset(bilinear_curve(796.8, 0.005, seed)));
        const double rel = std::abs(f.young_modulus_mpa - 796.8) / 796.8;
        worst = std::max(worst, rel);
        within += rel <= 0.02;
        o.check(f.window_start + f.window_len - 1 <= f.peak_index, "seed " + std::to_string(seed) + ": window crosses peak");
    }
    o.check(within == 100, std::to_string(within) + "/100 seeds within 2%");
    o.detail = "line E " + num(exact.young_modulus_mpa, 10) + "; noisy " + std::to_string(within) +
               "/100 within 2%, worst " + num(100 * worst) + "%";
}

// ---- 8 ----------------------------------------------------------------

void wc_consistency(Outcome& o)
{
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        const double theo = rng.uniform(0.1, 2.0);
        const VolumeCorrection v = wc_volume_corrected(theo, rng.uniform(1e4, 3e5), rng.uniform(1e4, 3e5));
        o.check(v.corrected == v.gamma * theo, "corrected != gamma * theo");
    }
    const double a = wc_theoretical(10.0, 5.7), b = wc_theoretical(30.0, 5.7), c = wc_theoretical(40.0, 5.7);
    o.check(std::abs(c - (a + b)) <= 1e-14 * c, "not additive in droplet mass");
    o.check(std::abs(wc_theoretical(20.0, 5.7) - 2.0 * a) <= 1e-14 * a, "not homogeneous in droplet mass");
    o.check(wc_theoretical(0.0, 5.7) == 0.0, "nonzero at zero mass");
    const double high = wc_theoretical(63.94, 5.7);
    o.check(std::abs(high - 0.815) <= 0.005, "63.94 mg gives " + num(high, 6));
    o.detail = "63.94 mg -> w/c " + num(high, 6);
}

// ---- 9 ----------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& root)
{
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file())
            files.emplace_back(fs::relative(e.path(), root).string(), read_file(e.path()));
    }
    std::sort(files.begin(), files.end());
    return files;
}

void determinism(Outcome& o)
{
    const fs::path dir = fs::temp_directory_path() / "printacc_acceptance";
    fs::remove_all(dir);
    write_fixture_set(dir / "fx", 42);
    const fs::path fx = dir / "fx";
    std::vector<std::pair<std::string, std::string>> bundles[2];
    for (int run = 0; run < 2; ++run) {
        const fs::path out = dir / ("out" + std::to_string(run));
        std::vector<std::string> args = {"report", "--scan-dir", (fx / "scans").string(), "--dosage",
                                         (fx / "dosage.csv").string(), "--curve"};
        for (const char* c : {"t11_1", "t11_2", "t30_1", "t30_2"})
            args.push_back((fx / "curves" / (std::string(c) + ".tsv")).string());
        for (const char* t : {"--nozzle-time", "11", "11", "30", "30", "--seed", "42", "--out"})
            args.emplace_back(t);
        args.push_back(out.string());
        std::ostringstream sink_out, sink_err;
        const int code = run_cli(args, sink_out, sink_err);
        o.check(code == exit_code::ok, "run " + std::to_string(run) + " exit " + std::to_string(code) + ": " +
                                           sink_err.str());
        if (code == exit_code::ok)
            bundles[run] = snapshot(out);
    }
    o.check(!bundles[0].empty() && bundles[0] == bundles[1], "bundles differ");
    std::size_t bytes = 0;
    for (const auto& [name, data] : bundles[0])
        bytes += data.size();
    o.detail = std::to_string(bundles[0].size()) + " files, " + std::to_string(bytes) + " bytes, identical";
    fs::remove_all(dir);
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "water mass per prism for all seven dosage rows within 0.01 g", 1.0, water_mass_table},
        {2, "ICP recovers 100 random rigid perturbations (<=20 deg, <=20 mm)", 30.0, icp_oracle},
        {3, "hausdorff/chamfer match brute force; PAI of scaled and identical clouds", 10.0, metric_oracles},
        {4, "signed distance of +-1 mm offset prisms and parity-oracle sign", 20.0, signed_distance_offsets},
        {5, "inflated-prism face grids are +1 and never sourced from a foreign face", 10.0, projection},
        {6, "prism STL voxelizes to 28x7x7 and shrinks to 27x6x6", 5.0, voxelization},
        {7, "modulus fit: exact line and noisy bilinear curves", 10.0, modulus_fit},
        {8, "w/c estimator consistency", 0.0, wc_consistency},
        {9, "report bundle is byte-identical across two runs", 0.0, determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0.0)
            o.check(secs < c.limit_s, "runtime " + num(secs) + " s exceeds " + num(c.limit_s) + " s");
        const bool pass = o.failures.empty();
        failed += !pass;
        std::printf("%s criterion %d: %s [%.3f s%s] %s\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(), secs,
                    c.limit_s > 0.0 ? (" / limit " + num(c.limit_s) + " s").c_str() : "", o.detail.c_str());
        for (const auto& f : o.failures)
            std::printf("    %s\n", f.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
