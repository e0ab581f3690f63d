#include "printacc/registration.hpp"

#include <cmath>

#include <Eigen/SVD>
#include <json.hpp>

#include "printacc/error.hpp"
#include "printacc/spatial.hpp"

namespace printacc {

RigidTransform RigidTransform::inverse() const
{
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& first) const
{
    RigidTransform out;
    out.rotation = rotation * first.rotation;
    out.translation = rotation * first.translation + translation;
    return out;
}

bool RigidTransform::is_proper_rotation(double tol) const
{
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
}

void IcpConfig::validate() const
{
    if (max_iterations < 1)
        throw DomainError("ICP needs at least one iteration");
    if (!(cost_change_tolerance > 0.0))
        throw DomainError("ICP cost tolerance must be positive");
}

RigidTransform kabsch_step(std::span<const Point3> source, std::span<const Point3> target)
{
    if (source.size() != target.size())
        throw GeometryError("kabsch: " + std::to_string(source.size()) + " source points but " +
                            std::to_string(target.size()) + " targets");
    if (source.empty())
        throw GeometryError("kabsch: no correspondences");

    const Point3 p_mean = centroid(source);
    const Point3 q_mean = centroid(target);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < source.size(); ++i)
        cov += (source[i] - p_mean) * (target[i] - q_mean).transpose();
    if (cov.cwiseAbs().maxCoeff() == 0.0)
        throw GeometryError("kabsch: cross-covariance vanishes (coincident points)");

    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();

    // Flip the least significant axis when V·Uᵀ would be a reflection.
    Eigen::Vector3d d(1.0, 1.0, (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0);

    RigidTransform out;
    out.rotation = v * d.asDiagonal() * u.transpose();
    out.translation = q_mean - out.rotation * p_mean;
    return out;
}

RigidTransform kabsch_step(const PointCloud& source, const PointCloud& target)
{
    return kabsch_step(std::span<const Point3>(source.points), std::span<const Point3>(target.points));
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform)
{
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& p : cloud.points)
        out.points.push_back(transform.apply(p));
    out.normals.reserve(cloud.normals.size());
    for (const auto& n : cloud.normals)
        out.normals.push_back(transform.rotation * n);
    return out;
}

double mean_squared_error(std::span<const Point3> a, std::span<const Point3> b)
{
    if (a.size() != b.size() || a.empty())
        throw GeometryError("mean squared error needs equal, non-empty point sets");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += (a[i] - b[i]).squaredNorm();
    return sum / static_cast<double>(a.size());
}

namespace {

// Matches every moved point to its nearest target and returns the mean
// squared distance.
double correspond(const KdTree& tree, const std::vector<Point3>& moved, std::vector<Point3>& matched)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i) {
        const Neighbor nn = tree.nearest(moved[i]);
        matched[i] = tree.point(nn.index);
        sum += nn.squared_distance;
    }
    return sum / static_cast<double>(moved.size());
}

} // namespace

IcpResult icp_align(const PointCloud& source, const PointCloud& target, const IcpConfig& config)
{
    config.validate();
    if (source.empty() || target.empty())
        throw GeometryError("ICP needs non-empty source and target clouds");

    const KdTree tree(target.points);
    std::vector<Point3> moved = source.points;
    std::vector<Point3> matched(source.size());

    IcpResult result;
    double cost = correspond(tree, moved, matched);
    result.cost_history.push_back(cost);

    for (std::size_t it = 1; it <= config.max_iterations; ++it) {
        // Solving from the original source each time yields the cumulative
        // transform directly, so rotations never accumulate rounding drift.
        result.transform = kabsch_step(source.points, matched);
        for (std::size_t i = 0; i < moved.size(); ++i)
            moved[i] = result.transform.apply(source.points[i]);

        const double next = correspond(tree, moved, matched);
        result.cost_history.push_back(next);
        result.iterations = it;
        const double change = std::abs(cost - next);
        cost = next;
        if (change < config.cost_change_tolerance) {
            result.converged = true;
            break;
        }
    }
    result.final_cost = cost;
    return result;
}

std::string transform_to_json(const RigidTransform& transform, int indent)
{
    nlohmann::json j;
    auto& r = j["R"] = nlohmann::json::array();
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col)
            r.push_back(transform.rotation(row, col));
    }
    j["t"] = {transform.translation.x(), transform.translation.y(), transform.translation.z()};
    return j.dump(indent);
}

RigidTransform transform_from_json(const std::string& text)
{
    RigidTransform t;
    try {
        const auto j = nlohmann::json::parse(text);
        const auto& r = j.at("R");
        const auto& tr = j.at("t");
        if (r.size() != 9 || tr.size() != 3)
            throw FormatError("transform json needs 9 rotation and 3 translation entries");
        for (int i = 0; i < 9; ++i)
            t.rotation(i / 3, i % 3) = r.at(i).get<double>();
        for (int i = 0; i < 3; ++i)
            t.translation[i] = tr.at(i).get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("transform json: ") + e.what());
    }
    return t;
}

} // namespace printacc
