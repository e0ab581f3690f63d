#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "printacc/geometry.hpp"
#include "printacc/mesh_query.hpp"

namespace printacc {

// Symmetric Hausdorff distance between two point sets.
double hausdorff(const PointCloud& p, const PointCloud& q);
// sup over a of the distance to the nearest b.
double directed_hausdorff(const PointCloud& a, const PointCloud& b);

// Sum of the two mean nearest-neighbour distances (not squared).
double chamfer(const PointCloud& p, const PointCloud& q);
// Mean distance from each a to its nearest b.
double directed_chamfer(const PointCloud& a, const PointCloud& b);

struct PaiResult {
    double pai = 0.0;
    double s_pai = 0.0; // sample standard deviation of the ratios, 0 for one point
};

// Per-point ratios d_cs / D_cr. The scan is first translated so its point
// mean coincides with the reference's volume centroid c. d_cs is |p - c| and
// D_cr is the distance from c to the first surface crossing of the ray c->p.
// Throws GeometryError for a point at c or a ray that never meets the mesh.
std::vector<double> pai_ratios(const PointCloud& scan, const MeshQuery& reference);

PaiResult pai_from_ratios(std::span<const double> ratios);
PaiResult pai(const PointCloud& scan, const MeshQuery& reference);
PaiResult pai(const PointCloud& scan, const TriangleMesh& reference);

struct MetricsReport {
    double hausdorff_mm = 0.0;
    double chamfer_mm = 0.0;
    double pai = 0.0;
    double s_pai = 0.0;
    std::size_t n_points = 0;

    std::string to_json(int precision = 4) const;
    static std::string csv_header(); // leads with a "specimen" column
    std::string to_csv_row(const std::string& specimen, int precision = 4) const;
};

// Hausdorff and Chamfer against the reference cloud, PAI against the mesh.
MetricsReport metrics_report(const PointCloud& scan, const PointCloud& reference_cloud, const MeshQuery& reference_mesh);
MetricsReport metrics_report(const PointCloud& scan, const PointCloud& reference_cloud,
                             const TriangleMesh& reference_mesh);

} // namespace printacc
