#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "jist/geometry/collision.hpp"
#include "jist/geometry/disp.hpp"

namespace jist {

/// Discretized SE(3) interpolation between two poses.
struct SE3Segment {
    Pose start;
    Pose end;
    std::vector<Pose> waypoints;  // includes both endpoints
    double resolution = 0.0;      // declared max DISP gap between waypoints
};

/// Waypoints of `start`→`end` split into `pieces` equal parameter steps.
inline std::vector<Pose> interpolate_waypoints(const Pose& start, const Pose& end, std::size_t pieces) {
    std::vector<Pose> out;
    out.reserve(pieces + 1);
    out.push_back(start);
    for (std::size_t i = 1; i < pieces; ++i) {
        out.push_back(pose_interpolate(start, end, static_cast<double>(i) / static_cast<double>(pieces)));
    }
    out.push_back(end);
    return out;
}

inline double max_waypoint_gap(const HullPoints& hull, std::span<const Pose> wps) {
    double gap = 0.0;
    for (std::size_t i = 1; i < wps.size(); ++i) gap = std::max(gap, disp_distance(hull, wps[i - 1], wps[i]));
    return gap;
}

/// Absolute slack on waypoint-gap checks, absorbing interpolation rounding.
inline constexpr double kGapSlack = 1e-12;

/// Smallest piece count whose waypoints are at most `resolution` apart under
/// DISP, starting from ceil(length / resolution).
inline std::size_t pieces_for_resolution(const HullPoints& hull, const Pose& a, const Pose& b, double length,
                                         double resolution) {
    require(resolution > 0.0, "segment resolution must be positive");
    if (length <= 0.0) return 1;
    auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(length / resolution - 1e-9)));
    while (true) {
        const auto wps = interpolate_waypoints(a, b, n);
        if (max_waypoint_gap(hull, wps) <= resolution + kGapSlack) return n;
        n += std::max<std::size_t>(1, n / 4);
    }
}

inline SE3Segment make_segment(const HullPoints& hull, const Pose& a, const Pose& b, double resolution) {
    const double len = disp_distance(hull, a, b);
    const std::size_t n = pieces_for_resolution(hull, a, b, len, resolution);
    return {a, b, interpolate_waypoints(a, b, n), resolution};
}

/// Number of colliding waypoints, excluding the first so that consecutive
/// segments never count a shared pose twice.
inline int segment_collision_count(std::span<const Shape> ee_body, const SE3Segment& seg,
                                   std::span<const Obstacle> scene) {
    require(seg.waypoints.size() >= 2, "segment_collision_count: segment needs at least 2 waypoints");
    int count = 0;
    for (std::size_t i = 1; i < seg.waypoints.size(); ++i) {
        if (collide_pose(ee_body, seg.waypoints[i], scene)) ++count;
    }
    return count;
}

}  // namespace jist
