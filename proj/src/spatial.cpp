#include "printacc/spatial.hpp"

#include <algorithm>
#include <numeric>

namespace printacc {

namespace {

constexpr std::uint32_t kLeafSize = 8;

bool better(double d2, std::size_t idx, const Neighbor& best)
{
    return d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index);
}

} // namespace

KdTree::KdTree(std::span<const Point3> points) : points_(points.begin(), points.end())
{
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 1);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end)
{
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize)
        return id;

    Eigen::AlignedBox3d box;
    for (auto i = begin; i < end; ++i)
        box.extend(points_[order_[i]]);
    int axis;
    box.sizes().maxCoeff(&axis);
    if (box.sizes()[axis] == 0.0)
        return id; // all coincident, keep as a leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];

    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(std::int32_t id, const Point3& q, Neighbor& best) const
{
    const Node& node = nodes_[id];
    if (node.axis < 0) {
        for (auto i = node.begin; i < node.end; ++i) {
            const auto idx = order_[i];
            const double d2 = (points_[idx] - q).squaredNorm();
            if (better(d2, idx, best))
                best = {idx, d2};
        }
        return;
    }
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double diff = q[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    search(near, q, best);
    // <= keeps equal-distance candidates reachable for the index tie-break.
    if (diff * diff <= best.squared_distance)
        search(far, q, best);
}

Neighbor KdTree::nearest(const Point3& query) const
{
    Neighbor best;
    if (!nodes_.empty())
        search(0, query, best);
    return best;
}

Neighbor brute_force_nearest(std::span<const Point3> points, const Point3& query)
{
    Neighbor best;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d2 = (points[i] - query).squaredNorm();
        if (better(d2, i, best))
            best = {i, d2};
    }
    return best;
}

} // namespace printacc
