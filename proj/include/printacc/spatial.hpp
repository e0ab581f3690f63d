#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "printacc/geometry.hpp"

namespace printacc {

struct Neighbor {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    double squared_distance = std::numeric_limits<double>::infinity();
};

// Static 3-d tree over a point set. The tree keeps a copy of the points so
// queries stay valid for its lifetime. Ties between equally distant points are
// resolved towards the smaller input index, which makes results identical to a
// linear scan in index order.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::span<const Point3> points);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const Point3& point(std::size_t i) const { return points_[i]; }

    Neighbor nearest(const Point3& query) const;

private:
    struct Node {
        std::uint32_t begin = 0, end = 0; // range in order_
        std::int32_t left = -1, right = -1;
        int axis = -1;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Point3& q, Neighbor& best) const;

    std::vector<Point3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

// Nearest neighbour by exhaustive scan, same tie rule as KdTree.
Neighbor brute_force_nearest(std::span<const Point3> points, const Point3& query);

} // namespace printacc
