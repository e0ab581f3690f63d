#include "printacc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "printacc/deviation.hpp"
#include "printacc/dosage.hpp"
#include "printacc/error.hpp"
#include "printacc/geometry.hpp"
#include "printacc/json_util.hpp"
#include "printacc/mechanics.hpp"
#include "printacc/mesh_query.hpp"
#include "printacc/metrics.hpp"
#include "printacc/projection.hpp"
#include "printacc/random.hpp"
#include "printacc/registration.hpp"
#include "printacc/stl.hpp"
#include "printacc/textio.hpp"
#include "printacc/voxel.hpp"

namespace printacc {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string reference_dims;
    std::string reference_stl;
    std::size_t reference_samples = 50000;
    std::uint64_t seed = kDefaultSeed;
    std::size_t downsample = 50000;
    std::size_t icp_max_iter = 100;
    double icp_tol = 1e-5;
    double grid_spacing = 1.0;
    std::string normal_filter = "on";
    std::optional<double> max_distance;
    int precision = 4;
    std::string out;

    std::vector<std::string> scans;
    std::string scan_dir;
    std::string transform;
    std::vector<std::string> deviations;

    std::string dosage;
    double pitch = kDefaultPitch;
    double bulk_density = 1695.0;
    double cement_fraction = 0.25;

    std::vector<std::string> curves;
    std::vector<double> nozzle_times;
    std::string mode = "stress-strain";
    double span = 120.0, width = 40.0, height = 40.0;
    std::optional<double> area;
    std::size_t window = 100, stride = 1, skip_lines = 4, smooth = 1;
    double slope_floor = 0.5;
    std::string strain_percent = "on";

    std::string stl;
    std::string origin;
    double nozzle_time = kDefaultNozzleTime;
    std::string voxels;
    std::string grids_dir;
    std::string policy;
    std::string global_shrink;
};

// Grid file names avoid '+' and '-'.
std::string face_tag(Face f)
{
    static const char* tags[] = {"px", "nx", "py", "ny", "pz", "nz"};
    return tags[face_index(f)];
}

void require_file(const std::string& path, const std::string& what)
{
    if (path.empty())
        throw UsageError("missing " + what);
    if (!fs::is_regular_file(path))
        throw UsageError("missing " + what + ": " + path);
}

PointCloud load_scan(const std::string& path)
{
    require_file(path, "scan");
    if (fs::file_size(path) == 0)
        throw UsageError("scan file is empty: " + path);
    PointCloud cloud = read_point_cloud(path);
    if (cloud.empty())
        throw UsageError("scan contains no points: " + path);
    return cloud;
}

Vector3 parse_triple(const std::string& text, const std::string& what)
{
    std::string s = text;
    std::replace(s.begin(), s.end(), 'x', ',');
    std::replace(s.begin(), s.end(), 'X', ',');
    const auto fields = split_fields(s, ',');
    if (fields.size() != 3)
        throw UsageError(what + " needs three values, got '" + text + "'");
    Vector3 v;
    for (int i = 0; i < 3; ++i) {
        try {
            v[i] = parse_number(fields[i], what);
        } catch (const FormatError& e) {
            throw UsageError(e.what());
        }
    }
    return v;
}

struct Reference {
    ReferencePrism prism;
    TriangleMesh mesh;
    bool from_stl = false;
    std::string label;
};

Reference load_reference(const Options& o)
{
    Reference r;
    if (!o.reference_stl.empty()) {
        require_file(o.reference_stl, "reference");
        r.mesh = read_stl(o.reference_stl);
        const auto box = r.mesh.bounds();
        r.prism = ReferencePrism(box.sizes(), box.min());
        r.from_stl = true;
        r.label = fs::path(o.reference_stl).filename().string();
        return r;
    }
    const Vector3 dims = o.reference_dims.empty() ? ReferencePrism().dims : parse_triple(o.reference_dims, "--reference-dims");
    if (!(dims.minCoeff() > 0.0))
        throw UsageError("--reference-dims must be positive");
    r.prism = ReferencePrism(dims);
    r.mesh = r.prism.to_mesh();
    r.label = "box";
    return r;
}

PointCloud reference_cloud(const Reference& r, const Options& o)
{
    return r.from_stl ? sample_mesh_surface(r.mesh, o.reference_samples, o.seed)
                      : sample_reference_surface(r.prism, o.reference_samples, o.seed);
}

fs::path output_dir(const Options& o)
{
    if (o.out.empty())
        throw UsageError("--out is required");
    fs::create_directories(o.out);
    return o.out;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    write_file(path, text);
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ojson vec_json(const Vector3& v, int precision)
{
    return ojson::array({json_number(v.x(), precision), json_number(v.y(), precision), json_number(v.z(), precision)});
}

ojson transform_json(const RigidTransform& t)
{
    ojson r = ojson::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r.push_back(json_number(t.rotation(i, j), 12));
    ojson j;
    j["R"] = r;
    j["t"] = vec_json(t.translation, 12);
    return j;
}

RigidTransform load_transform(const std::string& path)
{
    require_file(path, "transform");
    const auto j = ojson::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FormatError("transform json is not an object: " + path);
    const ojson& t = j.contains("transform") ? j["transform"] : j;
    return transform_from_json(t.dump());
}

ProjectionOptions projection_options(const Options& o)
{
    ProjectionOptions p;
    p.spacing = o.grid_spacing;
    if (o.normal_filter == "off")
        p.normal_filter_deg.reset();
    p.max_distance = o.max_distance;
    return p;
}

// Re-throws library errors with a stage prefix, keeping the exit-code class.
template <class F>
auto stage(const std::string& tag, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const UsageError& e) {
        throw UsageError(tag + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(tag + ": " + e.what());
    } catch (const GeometryError& e) {
        throw GeometryError(tag + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(tag + ": " + e.what());
    } catch (const Error& e) {
        throw Error(tag + ": " + e.what());
    }
}

// ---- align / deviate / metrics ------------------------------------------

struct Alignment {
    IcpResult icp;
    RigidTransform total;
    PointCloud aligned;
    std::size_t n_source = 0;
};

Alignment align_scan(const PointCloud& scan, const PointCloud& target, const Options& o)
{
    const PointCloud src = downsample_random(scan, o.downsample, o.seed);
    // Coarse start: scan centroid onto reference centroid.
    RigidTransform pre;
    pre.translation = centroid(target.points) - centroid(src.points);
    const PointCloud start = apply_transform(src, pre);
    IcpConfig cfg;
    cfg.max_iterations = o.icp_max_iter;
    cfg.cost_change_tolerance = o.icp_tol;
    Alignment a;
    a.icp = icp_align(start, target, cfg);
    a.total = a.icp.transform.compose(pre);
    a.aligned = apply_transform(start, a.icp.transform);
    a.n_source = src.size();
    return a;
}

ojson alignment_json(const Alignment& a, std::size_t n_target, const Options& o)
{
    ojson j;
    j["transform"] = transform_json(a.total);
    j["converged"] = a.icp.converged;
    j["iterations"] = a.icp.iterations;
    j["final_cost_mm2"] = json_number(a.icp.final_cost, std::max(o.precision, 8));
    ojson hist = ojson::array();
    for (double c : a.icp.cost_history)
        hist.push_back(json_number(c, std::max(o.precision, 8)));
    j["cost_history_mm2"] = hist;
    j["n_source"] = a.n_source;
    j["n_target"] = n_target;
    j["seed"] = o.seed;
    return j;
}

ojson stats_json(const FaceStats& s, bool with_face, int p)
{
    ojson j;
    if (with_face)
        j["face"] = std::string(face_name(s.face));
    j["count"] = s.count;
    j["mean_mm"] = json_number(s.mean, p);
    j["std_mm"] = json_number(s.std, p);
    j["min_mm"] = json_number(s.min, p);
    j["max_mm"] = json_number(s.max, p);
    return j;
}

std::string face_stats_header() { return "specimen,face,count,mean_mm,std_mm,min_mm,max_mm\n"; }

std::string face_stats_rows(const std::string& specimen, const std::array<FaceStats, 6>& stats, int p)
{
    std::string out;
    for (const auto& s : stats) {
        out += specimen + "," + std::string(face_name(s.face)) + "," + std::to_string(s.count) + "," +
               format_fixed(s.mean, p) + "," + format_fixed(s.std, p) + "," + format_fixed(s.min, p) + "," +
               format_fixed(s.max, p) + "\n";
    }
    return out;
}

void print_face_table(std::ostream& out, const std::array<FaceStats, 6>& stats, int p)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-5s %8s %10s %10s %10s %10s\n", "face", "count", "mean_mm", "std_mm", "min_mm",
                  "max_mm");
    out << buf;
    for (const auto& s : stats) {
        std::snprintf(buf, sizeof buf, "%-5s %8zu %10s %10s %10s %10s\n", std::string(face_name(s.face)).c_str(),
                      s.count, format_fixed(s.mean, p).c_str(), format_fixed(s.std, p).c_str(),
                      format_fixed(s.min, p).c_str(), format_fixed(s.max, p).c_str());
        out << buf;
    }
}

std::string specimen_name(const std::string& path) { return fs::path(path).stem().string(); }

PointCloud prepared_scan(const Options& o)
{
    if (o.scans.size() != 1)
        throw UsageError("exactly one --scan is required");
    PointCloud cloud = downsample_random(load_scan(o.scans.front()), o.downsample, o.seed);
    if (!o.transform.empty())
        cloud = apply_transform(cloud, load_transform(o.transform));
    return cloud;
}

int cmd_align(const Options& o, std::ostream& out)
{
    if (o.scans.size() != 1)
        throw UsageError("exactly one --scan is required");
    const PointCloud scan = load_scan(o.scans.front());
    const Reference ref = load_reference(o);
    const fs::path dir = output_dir(o);
    const PointCloud target = reference_cloud(ref, o);
    const Alignment a = align_scan(scan, target, o);
    write_text(dir / "transform.json", dump(alignment_json(a, target.size(), o)));
    write_text(dir / "aligned.xyz", format_xyz(a.aligned, 6));
    out << "align " << specimen_name(o.scans.front()) << ": " << (a.icp.converged ? "converged" : "NOT converged")
        << " after " << a.icp.iterations << " iterations, rms " << format_fixed(std::sqrt(a.icp.final_cost), o.precision)
        << " mm\n";
    return a.icp.converged ? exit_code::ok : exit_code::not_converged;
}

int cmd_deviate(const Options& o, std::ostream& out)
{
    const PointCloud cloud = prepared_scan(o);
    const Reference ref = load_reference(o);
    const fs::path dir = output_dir(o);
    const DeviationField field = deviation_field(cloud, MeshQuery(ref.mesh), ref.prism);
    const auto stats = face_statistics(field);
    write_text(dir / "deviation.csv", deviation_to_csv(field, o.precision));
    write_text(dir / "face_stats.csv",
               face_stats_header() + face_stats_rows(specimen_name(o.scans.front()), stats, o.precision));
    print_face_table(out, stats, o.precision);
    return exit_code::ok;
}

int cmd_metrics(const Options& o, std::ostream& out)
{
    const PointCloud cloud = prepared_scan(o);
    const Reference ref = load_reference(o);
    const fs::path dir = output_dir(o);
    const MetricsReport r = metrics_report(cloud, reference_cloud(ref, o), MeshQuery(ref.mesh));
    const std::string name = specimen_name(o.scans.front());
    write_text(dir / "metrics.json", r.to_json(o.precision) + "\n");
    write_text(dir / "metrics.csv", MetricsReport::csv_header() + r.to_csv_row(name, o.precision));
    out << MetricsReport::csv_header() << r.to_csv_row(name, o.precision);
    return exit_code::ok;
}

// ---- project --------------------------------------------------------------

std::vector<std::string> write_stack(const fs::path& dir, const std::vector<std::array<FaceGrid, 6>>& per_specimen,
                                     int precision)
{
    std::vector<std::string> files;
    for (Face f : kAllFaces) {
        std::vector<FaceGrid> grids;
        for (const auto& g : per_specimen)
            grids.push_back(g[face_index(f)]);
        const GridStack s = aggregate_grids(grids);
        const std::string mean = "grids/mean_" + face_tag(f) + ".csv", std = "grids/std_" + face_tag(f) + ".csv";
        write_text(dir / mean, face_grid_to_csv(s.mean_map, precision));
        write_text(dir / std, face_grid_to_csv(s.std_map, precision));
        files.push_back(mean);
        files.push_back(std);
    }
    return files;
}

int cmd_project(const Options& o, std::ostream& out)
{
    if (o.deviations.empty())
        throw UsageError("at least one --deviation file is required");
    for (const auto& p : o.deviations)
        require_file(p, "deviation csv");
    const Reference ref = load_reference(o);
    const fs::path dir = output_dir(o);
    std::vector<std::array<FaceGrid, 6>> all;
    for (const auto& path : o.deviations) {
        const DeviationField field = stage("project " + path, [&] { return deviation_from_csv(read_file(path)); });
        all.push_back(FaceProjector(field, ref.prism, projection_options(o)).project_all());
        for (const auto& g : all.back())
            write_text(dir / "grids" / (specimen_name(path) + "_" + face_tag(g.face) + ".csv"),
                       face_grid_to_csv(g, o.precision));
    }
    const auto files = write_stack(dir, all, o.precision);
    out << "projected " << all.size() << " field(s) onto 6 faces at " << format_fixed(o.grid_spacing, o.precision)
        << " mm; wrote " << files.size() << " aggregate grids\n";
    return exit_code::ok;
}

// ---- wc -------------------------------------------------------------------

std::vector<WcEstimate> run_wc(const Options& o)
{
    std::vector<DosageRecord> rows;
    if (o.dosage.empty()) {
        rows = reference_dosage_table();
    } else {
        require_file(o.dosage, "dosage csv");
        rows = parse_dosage_csv(read_file(o.dosage));
    }
    PowderSpec powder;
    powder.bulk_density_kg_m3 = o.bulk_density;
    powder.cement_fraction = o.cement_fraction;
    std::vector<WcEstimate> est;
    for (const auto& r : rows)
        est.push_back(estimate_wc(r, o.pitch, powder));
    return est;
}

void write_wc(const fs::path& dir, const std::vector<WcEstimate>& est, const Options& o)
{
    write_text(dir / "wc.csv", wc_estimates_to_csv(est, o.precision));
    write_text(dir / "wc.json", wc_estimates_to_json(est, o.precision) + "\n");
}

int cmd_wc(const Options& o, std::ostream& out)
{
    const auto est = run_wc(o);
    write_wc(output_dir(o), est, o);
    out << wc_estimates_to_csv(est, o.precision);
    return exit_code::ok;
}

// ---- mech -----------------------------------------------------------------

std::vector<SpecimenFit> run_mech(const Options& o)
{
    if (o.curves.empty())
        throw UsageError("at least one --curve file is required");
    if (!o.nozzle_times.empty() && o.nozzle_times.size() != 1 && o.nozzle_times.size() != o.curves.size())
        throw UsageError("give one --nozzle-time for all curves or one per curve");
    std::vector<SpecimenFit> fits;
    for (std::size_t i = 0; i < o.curves.size(); ++i) {
        const std::string& path = o.curves[i];
        require_file(path, "curve file");
        fits.push_back(stage("mech " + path, [&] {
            CurveFileFormat fmt;
            fmt.skip_lines = o.skip_lines;
            fmt.strain_in_percent = o.strain_percent == "on";
            const std::string text = read_file(path);
            StressStrainCurve curve;
            if (o.mode == "stress-strain") {
                curve = parse_curve_file(text, fmt);
            } else {
                fmt.columns = CurveColumns::DisplacementForce;
                const LoadRecord rec = parse_load_file(text, fmt);
                if (o.mode == "bending") {
                    curve = bending_stress_strain(rec, BendingSetup{o.span, o.width, o.height});
                } else {
                    if (!o.area)
                        throw UsageError("--area is required for compression curves");
                    curve = compression_stress_strain(rec, *o.area, o.height);
                }
            }
            curve = zero_offset(curve);
            if (o.smooth > 1)
                curve.stress = moving_average(curve.stress, o.smooth);
            ModulusFitOptions fo;
            fo.window_len = o.window;
            fo.stride = o.stride;
            fo.slope_floor = o.slope_floor;
            SpecimenFit s;
            s.specimen = specimen_name(path);
            s.nozzle_time_ms = o.nozzle_times.empty()       ? std::nan("")
                               : o.nozzle_times.size() == 1 ? o.nozzle_times[0]
                                                            : o.nozzle_times[i];
            s.fit = fit_young_modulus(curve, fo);
            return s;
        }));
    }
    return fits;
}

ojson mech_json(const std::vector<SpecimenFit>& fits, int p)
{
    ojson arr = ojson::array();
    for (const auto& s : fits) {
        ojson j;
        j["specimen"] = s.specimen;
        j["nozzle_time_ms"] = json_number(s.nozzle_time_ms, p);
        const ojson fit = ojson::parse(elastic_fit_to_json(s.fit, p));
        for (const auto& [k, v] : fit.items())
            j[k] = v;
        arr.push_back(j);
    }
    return arr;
}

void write_mech(const fs::path& dir, const std::vector<SpecimenFit>& fits, const Options& o)
{
    write_text(dir / "mech_fits.json", dump(mech_json(fits, o.precision)));
    if (!o.nozzle_times.empty())
        write_text(dir / "mech_groups.csv", group_summary_to_csv(summarize_by_nozzle_time(fits), o.precision));
}

int cmd_mech(const Options& o, std::ostream& out)
{
    const auto fits = run_mech(o);
    write_mech(output_dir(o), fits, o);
    out << "specimen,E_MPa,R2,sigma_max_MPa,window_start\n";
    for (const auto& s : fits)
        out << s.specimen << "," << format_fixed(s.fit.young_modulus_mpa, o.precision) << ","
            << format_fixed(s.fit.r_squared, 6) << "," << format_fixed(s.fit.peak_stress_mpa, o.precision) << ","
            << s.fit.window_start << "\n";
    return exit_code::ok;
}

// ---- slice / compensate ---------------------------------------------------

int cmd_slice(const Options& o, std::ostream& out)
{
    require_file(o.stl, "design stl");
    const TriangleMesh mesh = read_stl(o.stl);
    const Point3 origin = o.origin.empty() ? Point3(mesh.bounds().min()) : Point3(parse_triple(o.origin, "--origin"));
    const VoxelModel model = voxelize(mesh, o.pitch, origin, o.nozzle_time);
    const fs::path dir = output_dir(o);
    write_text(dir / "voxels.json", voxel_model_to_json(model) + "\n");
    write_text(dir / "instructions.txt", export_instructions(model, o.precision));
    out << "voxelized " << specimen_name(o.stl) << ": " << model.dims[0] << " x " << model.dims[1] << " x "
        << model.dims[2] << " lattice, " << model.count() << " occupied voxels\n";
    return exit_code::ok;
}

int cmd_compensate(const Options& o, std::ostream& out, std::ostream& err)
{
    require_file(o.voxels, "voxel model");
    const VoxelModel model = voxel_model_from_json(read_file(o.voxels));
    std::array<FaceGrid, 6> maps;
    for (Face f : kAllFaces) {
        const std::string path = (fs::path(o.grids_dir) / ("mean_" + face_tag(f) + ".csv")).string();
        require_file(path, "mean grid");
        maps[face_index(f)] = face_grid_from_csv(read_file(path));
    }
    CompensationPolicy policy;
    if (!o.policy.empty()) {
        require_file(o.policy, "policy");
        policy = policy_from_json(read_file(o.policy));
    }
    if (!o.global_shrink.empty())
        policy.global_shrink = o.global_shrink == "on";
    const CompensationResult r = compensate(model, maps, policy);
    for (const auto& w : r.warnings)
        err << "warning: " << w << "\n";

    const fs::path dir = output_dir(o);
    write_text(dir / "voxels_compensated.json", voxel_model_to_json(r.model) + "\n");
    write_text(dir / "instructions_compensated.txt", export_instructions(r.model, o.precision));
    ojson j;
    j["dims"] = {r.model.dims[0], r.model.dims[1], r.model.dims[2]};
    j["occupied"] = r.model.count();
    j["removed_by_shrink"] = r.removed_by_shrink;
    j["removed_locally"] = r.removed_locally;
    j["six_connected"] = r.six_connected;
    j["warnings"] = r.warnings;
    j["policy"] = ojson::parse(policy_to_json(policy, model.pitch));
    write_text(dir / "compensation.json", dump(j));
    out << "compensated: " << model.count() << " -> " << r.model.count() << " voxels (" << r.removed_by_shrink
        << " by global shrink, " << r.removed_locally << " locally), lattice " << r.model.dims[0] << " x "
        << r.model.dims[1] << " x " << r.model.dims[2] << "\n";
    return exit_code::ok;
}

// ---- report ---------------------------------------------------------------

struct SpecimenResult {
    std::string name;
    Alignment alignment;
    DeviationField field;
    std::array<FaceStats, 6> stats;
    FaceStats overall;
    MetricsReport metrics;
    std::vector<double> ratios;
    std::array<FaceGrid, 6> grids;
};

SpecimenResult process_specimen(const std::string& path, const Reference& ref, const MeshQuery& query,
                                const PointCloud& target, const Options& o)
{
    SpecimenResult r;
    r.name = specimen_name(path);
    const std::string tag = "report " + r.name;
    const PointCloud scan = stage(tag + " load", [&] { return load_scan(path); });
    r.alignment = stage(tag + " align", [&] { return align_scan(scan, target, o); });
    const PointCloud& aligned = r.alignment.aligned;
    r.field = stage(tag + " deviate", [&] { return deviation_field(aligned, query, ref.prism); });
    r.stats = face_statistics(r.field);
    r.overall = overall_statistics(r.field);
    stage(tag + " metrics", [&] {
        r.metrics.hausdorff_mm = hausdorff(aligned, target);
        r.metrics.chamfer_mm = chamfer(aligned, target);
        r.ratios = pai_ratios(aligned, query);
        const PaiResult p = pai_from_ratios(r.ratios);
        r.metrics.pai = p.pai;
        r.metrics.s_pai = p.s_pai;
        r.metrics.n_points = aligned.size();
        return 0;
    });
    r.grids = stage(tag + " project",
                    [&] { return FaceProjector(r.field, ref.prism, projection_options(o)).project_all(); });
    return r;
}

std::vector<std::string> collect_scans(const Options& o)
{
    std::vector<std::string> paths = o.scans;
    if (!o.scan_dir.empty()) {
        if (!fs::is_directory(o.scan_dir))
            throw UsageError("missing scan directory: " + o.scan_dir);
        std::vector<std::string> found;
        for (const auto& e : fs::directory_iterator(o.scan_dir)) {
            std::string ext = e.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (e.is_regular_file() && (ext == ".stl" || ext == ".xyz"))
                found.push_back(e.path().string());
        }
        std::sort(found.begin(), found.end());
        paths.insert(paths.end(), found.begin(), found.end());
    }
    std::set<std::string> names;
    for (const auto& p : paths) {
        require_file(p, "scan");
        if (!names.insert(specimen_name(p)).second)
            throw UsageError("two scans share the specimen name '" + specimen_name(p) + "'");
    }
    return paths;
}

int cmd_report(const Options& o, std::ostream& out)
{
    const auto scans = collect_scans(o);
    if (scans.empty() && o.dosage.empty() && o.curves.empty())
        throw UsageError("report needs --scan, --scan-dir, --dosage or --curve");
    const fs::path dir = output_dir(o);
    const int p = o.precision;
    int code = exit_code::ok;

    ojson summary;
    summary["tool"] = "printacc";
    summary["seed"] = o.seed;

    if (!scans.empty()) {
        const Reference ref = stage("report reference", [&] { return load_reference(o); });
        const MeshQuery query(ref.mesh);
        const PointCloud target = reference_cloud(ref, o);

        // Specimens are independent; run them in batches of the core count.
        std::vector<SpecimenResult> results;
        const std::size_t batch = std::max(1u, std::thread::hardware_concurrency());
        for (std::size_t begin = 0; begin < scans.size(); begin += batch) {
            std::vector<std::future<SpecimenResult>> jobs;
            for (std::size_t i = begin; i < std::min(scans.size(), begin + batch); ++i)
                jobs.push_back(std::async(std::launch::async, process_specimen, std::cref(scans[i]), std::cref(ref),
                                          std::cref(query), std::cref(target), std::cref(o)));
            for (auto& j : jobs)
                results.push_back(j.get());
        }

        ojson reference;
        reference["source"] = ref.label;
        reference["dims_mm"] = vec_json(ref.prism.dims, p);
        reference["origin_mm"] = vec_json(ref.prism.origin, p);
        reference["samples"] = target.size();
        summary["reference"] = reference;
        summary["config"] = {{"downsample", o.downsample},
                             {"icp_max_iter", o.icp_max_iter},
                             {"icp_tol_mm2", o.icp_tol},
                             {"grid_spacing_mm", json_number(o.grid_spacing, p)},
                             {"normal_filter", o.normal_filter == "on"}};

        std::string metrics_csv = MetricsReport::csv_header();
        std::string stats_csv = face_stats_header();
        ojson specimens = ojson::array();
        DeviationField pooled;
        std::vector<double> pooled_ratios;
        std::vector<std::array<FaceGrid, 6>> grids;
        for (const auto& r : results) {
            const fs::path sdir = dir / "specimens" / r.name;
            write_text(sdir / "transform.json", dump(alignment_json(r.alignment, target.size(), o)));
            write_text(sdir / "deviation.csv", deviation_to_csv(r.field, p));
            metrics_csv += r.metrics.to_csv_row(r.name, p);
            stats_csv += face_stats_rows(r.name, r.stats, p);

            ojson s;
            s["name"] = r.name;
            s["icp"] = {{"converged", r.alignment.icp.converged},
                        {"iterations", r.alignment.icp.iterations},
                        {"final_cost_mm2", json_number(r.alignment.icp.final_cost, std::max(p, 8))}};
            ojson fs_json = ojson::array();
            for (const auto& st : r.stats)
                fs_json.push_back(stats_json(st, true, p));
            s["face_stats"] = fs_json;
            s["overall"] = stats_json(r.overall, false, p);
            s["metrics"] = ojson::parse(r.metrics.to_json(p));
            specimens.push_back(s);
            if (!r.alignment.icp.converged)
                code = exit_code::not_converged;

            pooled.points.points.insert(pooled.points.points.end(), r.field.points.points.begin(),
                                        r.field.points.points.end());
            pooled.signed_distance.insert(pooled.signed_distance.end(), r.field.signed_distance.begin(),
                                          r.field.signed_distance.end());
            pooled.face.insert(pooled.face.end(), r.field.face.begin(), r.field.face.end());
            pooled_ratios.insert(pooled_ratios.end(), r.ratios.begin(), r.ratios.end());
            grids.push_back(r.grids);
        }
        summary["specimens"] = specimens;

        const auto pooled_stats = face_statistics(pooled);
        ojson groups = ojson::array();
        for (const auto& st : pooled_stats)
            groups.push_back(stats_json(st, true, p));
        summary["face_groups"] = groups;
        const PaiResult pooled_pai = pai_from_ratios(pooled_ratios);
        summary["pooled_pai"] = {{"pai", json_number(pooled_pai.pai, p)}, {"s_pai", json_number(pooled_pai.s_pai, p)}};

        write_text(dir / "metrics.csv", metrics_csv);
        write_text(dir / "face_stats.csv", stats_csv);
        summary["grids"] = write_stack(dir, grids, p);

        out << "specimen             converged  iter  hausdorff_mm  chamfer_mm       pai     s_pai\n";
        for (const auto& r : results) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "%-20s %9s %5zu %13s %11s %9s %9s\n", r.name.c_str(),
                          r.alignment.icp.converged ? "yes" : "no", r.alignment.icp.iterations,
                          format_fixed(r.metrics.hausdorff_mm, p).c_str(), format_fixed(r.metrics.chamfer_mm, p).c_str(),
                          format_fixed(r.metrics.pai, p).c_str(), format_fixed(r.metrics.s_pai, p).c_str());
            out << buf;
        }
        out << "\npooled signed distance per face group\n";
        print_face_table(out, pooled_stats, p);
    }

    if (!o.dosage.empty()) {
        const auto est = stage("report wc", [&] { return run_wc(o); });
        write_wc(dir, est, o);
        summary["wc"] = ojson::parse(wc_estimates_to_json(est, p));
    }
    if (!o.curves.empty()) {
        const auto fits = stage("report mech", [&] { return run_mech(o); });
        write_mech(dir, fits, o);
        summary["mechanics"] = mech_json(fits, p);
    }
    write_text(dir / "summary.json", dump(summary));
    return code;
}

// ---- option wiring --------------------------------------------------------

void add_reference(CLI::App* c, Options& o)
{
    auto* dims = c->add_option("--reference-dims", o.reference_dims, "reference box LxWxH in mm (default 159.6x39.9x39.9)");
    auto* stl = c->add_option("--reference-stl", o.reference_stl, "reference mesh (closed STL)");
    dims->excludes(stl);
    c->add_option("--reference-samples", o.reference_samples, "reference surface samples")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

void add_common(CLI::App* c, Options& o)
{
    c->add_option("--seed", o.seed, "random seed")->capture_default_str();
    c->add_option("--precision", o.precision, "decimals in numeric output")->capture_default_str()->check(CLI::Range(0, 12));
    c->add_option("--out", o.out, "output directory");
}

void add_icp(CLI::App* c, Options& o)
{
    c->add_option("--downsample", o.downsample, "scan points kept for registration")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--icp-max-iter", o.icp_max_iter, "ICP iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--icp-tol", o.icp_tol, "ICP cost change tolerance (mm^2)")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_projection(CLI::App* c, Options& o)
{
    c->add_option("--grid-spacing", o.grid_spacing, "face grid spacing in mm")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--normal-filter", o.normal_filter, "restrict nodes to same-face points")
        ->capture_default_str()
        ->check(CLI::IsMember({"on", "off"}));
    c->add_option("--max-distance", o.max_distance, "leave nodes farther than this (mm) missing");
}

void add_wc(CLI::App* c, Options& o, bool in_report)
{
    c->add_option("--dosage", o.dosage,
                  in_report ? "dosage table csv; adds the w/c section"
                            : "dosage table csv (default: built-in reference table)");
    c->add_option("--pitch", o.pitch, "voxel pitch in mm")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--bulk-density", o.bulk_density, "powder bulk density kg/m^3")->capture_default_str();
    c->add_option("--cement-fraction", o.cement_fraction, "cement mass fraction")->capture_default_str();
}

void add_mech(CLI::App* c, Options& o, bool required)
{
    auto* opt = c->add_option("--curve", o.curves, "test export files");
    if (required)
        opt->required();
    c->add_option("--nozzle-time", o.nozzle_times, "nozzle time per curve (one value applies to all)");
    c->add_option("--mode", o.mode, "file content")
        ->capture_default_str()
        ->check(CLI::IsMember({"stress-strain", "bending", "compression"}));
    c->add_option("--span", o.span, "bending span mm")->capture_default_str();
    c->add_option("--width", o.width, "specimen width mm")->capture_default_str();
    c->add_option("--height", o.height, "specimen height mm")->capture_default_str();
    c->add_option("--area", o.area, "compression cross-section mm^2");
    c->add_option("--window", o.window, "regression window length")->capture_default_str();
    c->add_option("--stride", o.stride, "window stride")->capture_default_str();
    c->add_option("--slope-floor", o.slope_floor, "minimum fraction of the steepest window slope")->capture_default_str();
    c->add_option("--skip-lines", o.skip_lines, "header lines to skip")->capture_default_str();
    c->add_option("--strain-percent", o.strain_percent, "strain column is in percent")
        ->capture_default_str()
        ->check(CLI::IsMember({"on", "off"}));
    c->add_option("--smooth", o.smooth, "moving average window applied to stress")->capture_default_str();
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"printacc: scan-to-reference accuracy analysis and voxel preparation", "printacc"};
    app.require_subcommand(1);

    auto* align = app.add_subcommand("align", "register a scan to the reference");
    align->add_option("--scan", o.scans, "scan (STL or XYZ)")->required()->expected(1);
    add_reference(align, o);
    add_icp(align, o);
    add_common(align, o);

    auto* deviate = app.add_subcommand("deviate", "signed distances of an aligned scan");
    deviate->add_option("--scan", o.scans, "aligned scan")->required()->expected(1);
    deviate->add_option("--transform", o.transform, "transform json to apply first");
    add_reference(deviate, o);
    deviate->add_option("--downsample", o.downsample, "points kept")->capture_default_str()->check(CLI::PositiveNumber);
    add_common(deviate, o);

    auto* metrics = app.add_subcommand("metrics", "Hausdorff, Chamfer and PAI of an aligned scan");
    metrics->add_option("--scan", o.scans, "aligned scan")->required()->expected(1);
    metrics->add_option("--transform", o.transform, "transform json to apply first");
    add_reference(metrics, o);
    metrics->add_option("--downsample", o.downsample, "points kept")->capture_default_str()->check(CLI::PositiveNumber);
    add_common(metrics, o);

    auto* project = app.add_subcommand("project", "face grids from deviation csv files");
    project->add_option("--deviation", o.deviations, "deviation csv (repeatable)")->required();
    add_reference(project, o);
    add_projection(project, o);
    add_common(project, o);

    auto* wc = app.add_subcommand("wc", "water dosage and water/cement ratios");
    add_wc(wc, o, false);
    add_common(wc, o);

    auto* mech = app.add_subcommand("mech", "Young's modulus and peak stress from test curves");
    add_mech(mech, o, true);
    add_common(mech, o);

    auto* slice = app.add_subcommand("slice", "voxelize a design STL and write print instructions");
    slice->add_option("--stl", o.stl, "design mesh")->required();
    slice->add_option("--pitch", o.pitch, "voxel pitch mm")->capture_default_str()->check(CLI::PositiveNumber);
    slice->add_option("--origin", o.origin, "lattice anchor x,y,z (default: mesh minimum corner)");
    slice->add_option("--nozzle-time", o.nozzle_time, "nozzle time ms for every voxel")->capture_default_str();
    add_common(slice, o);

    auto* comp = app.add_subcommand("compensate", "remove voxels where mean deviation maps show excess");
    comp->add_option("--voxels", o.voxels, "voxel model json")->required();
    comp->add_option("--grids", o.grids_dir, "directory with mean_<face>.csv maps")->required();
    comp->add_option("--policy", o.policy, "compensation policy json");
    comp->add_option("--global-shrink", o.global_shrink, "override the policy's global shrink")
        ->check(CLI::IsMember({"on", "off"}));
    add_common(comp, o);

    auto* report = app.add_subcommand("report", "full pipeline over one or more scans");
    report->add_option("--scan", o.scans, "scan (repeatable)");
    report->add_option("--scan-dir", o.scan_dir, "directory of .stl/.xyz scans");
    add_reference(report, o);
    add_icp(report, o);
    add_projection(report, o);
    add_wc(report, o, true);
    report->add_option("--curve", o.curves, "test export files");
    report->add_option("--nozzle-time", o.nozzle_times, "nozzle time per curve");
    report->add_option("--mode", o.mode, "curve file content")->check(CLI::IsMember({"stress-strain", "bending", "compression"}));
    report->add_option("--window", o.window, "regression window length")->capture_default_str();
    report->add_option("--area", o.area, "compression cross-section mm^2");
    add_common(report, o);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\nrun 'printacc --help' for usage\n";
        return exit_code::usage;
    }

    try {
        if (align->parsed())
            return cmd_align(o, out);
        if (deviate->parsed())
            return cmd_deviate(o, out);
        if (metrics->parsed())
            return cmd_metrics(o, out);
        if (project->parsed())
            return cmd_project(o, out);
        if (wc->parsed())
            return cmd_wc(o, out);
        if (mech->parsed())
            return cmd_mech(o, out);
        if (slice->parsed())
            return cmd_slice(o, out);
        if (comp->parsed())
            return cmd_compensate(o, out, err);
        if (report->parsed())
            return cmd_report(o, out);
        err << "usage error: no subcommand\n";
        return exit_code::usage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::data;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_code::internal;
    }
}

} // namespace printacc
