#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "printacc/geometry.hpp"

namespace printacc {

// Proper rigid motion p -> rotation * p + translation.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vector3 translation = Vector3::Zero();

    static RigidTransform identity() { return {}; }

    Point3 apply(const Point3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const;
    // (*this) after `first`: x -> this(first(x)).
    RigidTransform compose(const RigidTransform& first) const;

    // RᵀR = I and det R = +1, each within tol.
    bool is_proper_rotation(double tol = 1e-9) const;
};

struct IcpConfig {
    std::size_t max_iterations = 100;
    // Absolute change of the mean squared correspondence distance, mm².
    double cost_change_tolerance = 1e-5;

    void validate() const;
};

struct IcpResult {
    RigidTransform transform;
    double final_cost = 0.0; // mean squared distance, mm²
    std::size_t iterations = 0;
    bool converged = false;
    // Cost at the initial pose followed by the cost after each iteration.
    std::vector<double> cost_history;
};

// Closed-form least-squares rigid transform taking source[i] onto target[i]
// (SVD of the cross-covariance with reflection guard). Throws GeometryError
// for mismatched or empty inputs and for a vanishing cross-covariance.
RigidTransform kabsch_step(std::span<const Point3> source, std::span<const Point3> target);
RigidTransform kabsch_step(const PointCloud& source, const PointCloud& target);

// Point-to-point ICP from the identity. Each iteration matches every
// transformed source point to its nearest target point, then re-solves the
// cumulative transform. Stops at max_iterations or when the cost changes by
// less than the tolerance (the only case that sets `converged`).
IcpResult icp_align(const PointCloud& source, const PointCloud& target, const IcpConfig& config = {});

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform);

// Mean squared distance between paired points.
double mean_squared_error(std::span<const Point3> a, std::span<const Point3> b);

// {"R": [9 numbers, row-major], "t": [3 numbers]}
std::string transform_to_json(const RigidTransform& transform, int indent = 2);
RigidTransform transform_from_json(const std::string& text);

} // namespace printacc
