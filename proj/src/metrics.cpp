#include "printacc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "printacc/error.hpp"
#include "printacc/json_util.hpp"
#include "printacc/spatial.hpp"
#include "printacc/textio.hpp"

namespace printacc {

namespace {

void require_points(const PointCloud& a, const PointCloud& b, const char* what)
{
    if (a.empty() || b.empty())
        throw GeometryError(std::string(what) + " needs two non-empty point sets");
}

} // namespace

double directed_hausdorff(const PointCloud& a, const PointCloud& b)
{
    require_points(a, b, "hausdorff");
    const KdTree tree(b.points);
    double worst = 0.0;
    for (const auto& p : a.points)
        worst = std::max(worst, tree.nearest(p).squared_distance);
    return std::sqrt(worst);
}

double hausdorff(const PointCloud& p, const PointCloud& q)
{
    return std::max(directed_hausdorff(p, q), directed_hausdorff(q, p));
}

double directed_chamfer(const PointCloud& a, const PointCloud& b)
{
    require_points(a, b, "chamfer");
    const KdTree tree(b.points);
    double sum = 0.0;
    for (const auto& p : a.points)
        sum += std::sqrt(tree.nearest(p).squared_distance);
    return sum / static_cast<double>(a.size());
}

double chamfer(const PointCloud& p, const PointCloud& q)
{
    return directed_chamfer(p, q) + directed_chamfer(q, p);
}

std::vector<double> pai_ratios(const PointCloud& scan, const MeshQuery& reference)
{
    if (scan.empty())
        throw GeometryError("PAI needs a non-empty scan");
    const Point3 center = mesh_centroid(reference.mesh());
    const Vector3 shift = center - centroid(scan.points);

    std::vector<double> ratios;
    ratios.reserve(scan.size());
    for (const auto& raw : scan.points) {
        const Vector3 v = raw + shift - center;
        const double d_cs = v.norm();
        if (d_cs == 0.0)
            throw GeometryError("PAI: scan point coincides with the centroid");
        const auto hit = reference.first_hit(center, v / d_cs);
        if (!hit)
            throw GeometryError("PAI: ray from the centroid does not meet the reference surface");
        ratios.push_back(d_cs / *hit);
    }
    return ratios;
}

PaiResult pai_from_ratios(std::span<const double> ratios)
{
    if (ratios.empty())
        throw GeometryError("PAI of an empty ratio set");
    const double n = static_cast<double>(ratios.size());
    double sum = 0.0;
    for (double r : ratios)
        sum += r;
    PaiResult out;
    out.pai = sum / n;
    if (ratios.size() > 1) {
        double sq = 0.0;
        for (double r : ratios)
            sq += (r - out.pai) * (r - out.pai);
        out.s_pai = std::sqrt(sq / (n - 1.0));
    }
    return out;
}

PaiResult pai(const PointCloud& scan, const MeshQuery& reference)
{
    const auto ratios = pai_ratios(scan, reference);
    return pai_from_ratios(ratios);
}

PaiResult pai(const PointCloud& scan, const TriangleMesh& reference) { return pai(scan, MeshQuery(reference)); }

MetricsReport metrics_report(const PointCloud& scan, const PointCloud& reference_cloud, const MeshQuery& reference_mesh)
{
    MetricsReport r;
    r.hausdorff_mm = hausdorff(scan, reference_cloud);
    r.chamfer_mm = chamfer(scan, reference_cloud);
    const PaiResult p = pai(scan, reference_mesh);
    r.pai = p.pai;
    r.s_pai = p.s_pai;
    r.n_points = scan.size();
    return r;
}

MetricsReport metrics_report(const PointCloud& scan, const PointCloud& reference_cloud,
                             const TriangleMesh& reference_mesh)
{
    return metrics_report(scan, reference_cloud, MeshQuery(reference_mesh));
}

std::string MetricsReport::to_json(int precision) const
{
    nlohmann::ordered_json j;
    j["hausdorff_mm"] = json_number(hausdorff_mm, precision);
    j["chamfer_mm"] = json_number(chamfer_mm, precision);
    j["pai"] = json_number(pai, precision);
    j["s_pai"] = json_number(s_pai, precision);
    j["n_points"] = n_points;
    return j.dump(2);
}

std::string MetricsReport::csv_header() { return "specimen,hausdorff_mm,chamfer_mm,pai,s_pai,n_points\n"; }

std::string MetricsReport::to_csv_row(const std::string& specimen, int precision) const
{
    return specimen + "," + format_fixed(hausdorff_mm, precision) + "," + format_fixed(chamfer_mm, precision) + "," +
           format_fixed(pai, precision) + "," + format_fixed(s_pai, precision) + "," + std::to_string(n_points) + "\n";
}

} // namespace printacc
