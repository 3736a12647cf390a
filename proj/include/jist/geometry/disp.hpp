#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "jist/core/error.hpp"
#include "jist/geometry/pose.hpp"

namespace jist {

/// Points on the end effector's convex hull, in the end-effector frame.
/// Metric-only: collision uses separate primitive shapes.
struct HullPoints {
    std::vector<Vec3> points;

    bool empty() const { return points.empty(); }

    Vec3 centroid() const {
        Vec3 c = Vec3::Zero();
        for (const auto& p : points) c += p;
        return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
    }
};

/// Hull points mapped into the world by `pose`. Every DISP evaluation goes
/// through this so cached and direct evaluations agree bit for bit.
inline void transform_hull(const HullPoints& hull, const Pose& pose, std::vector<Vec3>& out) {
    const Mat3 r = pose.rotation_matrix();
    out.resize(hull.points.size());
    for (std::size_t i = 0; i < hull.points.size(); ++i) out[i] = r * hull.points[i] + pose.t;
}

inline std::vector<Vec3> transform_hull(const HullPoints& hull, const Pose& pose) {
    std::vector<Vec3> out;
    transform_hull(hull, pose, out);
    return out;
}

/// DISP between two already-transformed hull point sets of equal size.
inline double disp_points(std::span<const Vec3> a, std::span<const Vec3> b) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, (a[i] - b[i]).norm());
    return best;
}

/// Maximum displacement of any hull point between poses `a` and `b`.
inline double disp_distance(const HullPoints& hull, const Pose& a, const Pose& b) {
    if (hull.empty()) throw ContractError("disp_distance: empty hull");
    const auto pa = transform_hull(hull, a);
    const auto pb = transform_hull(hull, b);
    return disp_points(pa, pb);
}

/// Sum of DISP over consecutive poses.
inline double path_cost(const HullPoints& hull, std::span<const Pose> poses) {
    if (poses.empty()) throw ContractError("path_cost: empty pose list");
    if (hull.empty()) throw ContractError("path_cost: empty hull");
    double cost = 0.0;
    std::vector<Vec3> prev, cur;
    transform_hull(hull, poses[0], prev);
    for (std::size_t i = 1; i < poses.size(); ++i) {
        transform_hull(hull, poses[i], cur);
        cost += disp_points(prev, cur);
        std::swap(prev, cur);
    }
    return cost;
}

}  // namespace jist
