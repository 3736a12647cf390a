#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "jist/geometry/shapes.hpp"

namespace jist {

// Narrowphase predicates for sphere/capsule/box pairs. Sets are closed:
// contact at exactly zero separation counts as intersection.

namespace detail {

inline double point_segment_dist2(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 d = b - a;
    const double dd = d.squaredNorm();
    double t = 0.0;
    if (dd > 0.0) t = std::clamp((p - a).dot(d) / dd, 0.0, 1.0);
    return (a + t * d - p).squaredNorm();
}

// Ericson, closest points between segments p1q1 and p2q2.
inline double segment_segment_dist2(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
    const Vec3 d1 = q1 - p1;
    const Vec3 d2 = q2 - p2;
    const Vec3 r = p1 - p2;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    const double f = d2.dot(r);
    double s = 0.0;
    double t = 0.0;
    if (a <= 0.0 && e <= 0.0) return r.squaredNorm();
    if (a <= 0.0) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= 0.0) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return ((p1 + s * d1) - (p2 + t * d2)).squaredNorm();
}

// Squared distance from a box-local point to [lo, hi].
inline double local_point_box_dist2(const Vec3& x, const Vec3& lo, const Vec3& hi) {
    double d2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (x[i] < lo[i]) {
            const double g = lo[i] - x[i];
            d2 += g * g;
        } else if (x[i] > hi[i]) {
            const double g = x[i] - hi[i];
            d2 += g * g;
        }
    }
    return d2;
}

inline double point_box_dist2(const Vec3& p, const Box& b) {
    return local_point_box_dist2(b.frame.inverse().act(p), b.lo, b.hi);
}

// Exact segment-box distance. The squared distance along the segment is a
// convex piecewise quadratic in the segment parameter; minimize each piece.
inline double segment_box_dist2(const Vec3& pw, const Vec3& qw, const Box& b) {
    const Pose inv = b.frame.inverse();
    const Vec3 a = inv.act(pw);
    const Vec3 d = inv.act(qw) - a;

    std::array<double, 8> breaks{};
    std::size_t nb = 0;
    breaks[nb++] = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (d[i] == 0.0) continue;
        for (double bound : {b.lo[i], b.hi[i]}) {
            const double t = (bound - a[i]) / d[i];
            if (t > 0.0 && t < 1.0) breaks[nb++] = t;
        }
    }
    breaks[nb++] = 1.0;
    std::sort(breaks.begin(), breaks.begin() + nb);

    auto at = [&](double t) { return local_point_box_dist2(a + t * d, b.lo, b.hi); };
    double best = std::min(at(0.0), at(1.0));
    for (std::size_t k = 0; k + 1 < nb; ++k) {
        const double t0 = breaks[k];
        const double t1 = breaks[k + 1];
        if (t1 <= t0) continue;
        const Vec3 mid = a + (0.5 * (t0 + t1)) * d;
        double num = 0.0;
        double den = 0.0;
        for (int i = 0; i < 3; ++i) {
            double bound;
            if (mid[i] < b.lo[i]) bound = b.lo[i];
            else if (mid[i] > b.hi[i]) bound = b.hi[i];
            else continue;
            num += (a[i] - bound) * d[i];
            den += d[i] * d[i];
        }
        if (den <= 0.0) {
            best = std::min(best, at(t0));
            continue;
        }
        const double t = std::clamp(-num / den, t0, t1);
        best = std::min(best, at(t));
    }
    return best;
}

// Separating-axis test for two oriented boxes (Ericson 4.4.1), closed sets.
inline bool box_box_overlap(const Box& a, const Box& b) {
    const Vec3 ca = a.frame.act(0.5 * (a.lo + a.hi));
    const Vec3 cb = b.frame.act(0.5 * (b.lo + b.hi));
    const Vec3 ea = 0.5 * (a.hi - a.lo);
    const Vec3 eb = 0.5 * (b.hi - b.lo);
    const Mat3 ra = a.frame.rotation_matrix();
    const Mat3 rb = b.frame.rotation_matrix();

    const Mat3 r = ra.transpose() * rb;
    const Vec3 t = ra.transpose() * (cb - ca);
    Mat3 absr;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) absr(i, j) = std::abs(r(i, j)) + 1e-12;

    for (int i = 0; i < 3; ++i) {
        const double rad_a = ea[i];
        const double rad_b = eb[0] * absr(i, 0) + eb[1] * absr(i, 1) + eb[2] * absr(i, 2);
        if (std::abs(t[i]) > rad_a + rad_b) return false;
    }
    for (int j = 0; j < 3; ++j) {
        const double rad_a = ea[0] * absr(0, j) + ea[1] * absr(1, j) + ea[2] * absr(2, j);
        const double rad_b = eb[j];
        if (std::abs(t[0] * r(0, j) + t[1] * r(1, j) + t[2] * r(2, j)) > rad_a + rad_b) return false;
    }
    for (int i = 0; i < 3; ++i) {
        const int i1 = (i + 1) % 3;
        const int i2 = (i + 2) % 3;
        for (int j = 0; j < 3; ++j) {
            const int j1 = (j + 1) % 3;
            const int j2 = (j + 2) % 3;
            const double rad_a = ea[i1] * absr(i2, j) + ea[i2] * absr(i1, j);
            const double rad_b = eb[j1] * absr(i, j2) + eb[j2] * absr(i, j1);
            const double dist = std::abs(t[i2] * r(i1, j) - t[i1] * r(i2, j));
            if (dist > rad_a + rad_b) return false;
        }
    }
    return true;
}

inline bool within(double dist2, double radius) { return std::sqrt(dist2) <= radius; }

inline bool intersect(const Sphere& a, const Sphere& b) {
    return within((a.center - b.center).squaredNorm(), a.radius + b.radius);
}
inline bool intersect(const Sphere& a, const Capsule& b) {
    return within(point_segment_dist2(a.center, b.p0, b.p1), a.radius + b.radius);
}
inline bool intersect(const Sphere& a, const Box& b) { return within(point_box_dist2(a.center, b), a.radius); }
inline bool intersect(const Capsule& a, const Capsule& b) {
    return within(segment_segment_dist2(a.p0, a.p1, b.p0, b.p1), a.radius + b.radius);
}
inline bool intersect(const Capsule& a, const Box& b) { return within(segment_box_dist2(a.p0, a.p1, b), a.radius); }
inline bool intersect(const Box& a, const Box& b) { return box_box_overlap(a, b); }

template <class A, class B>
bool intersect(const A& a, const B& b) {
    return intersect(b, a);
}

}  // namespace detail

/// Narrowphase intersection of two world-frame shapes.
inline bool shapes_intersect(const Shape& a, const Shape& b) {
    return std::visit([](const auto& x, const auto& y) { return detail::intersect(x, y); }, a, b);
}

inline double shape_distance_impl(const Sphere& a, const Sphere& b) {
    return std::max(0.0, (a.center - b.center).norm() - a.radius - b.radius);
}
inline double shape_distance_impl(const Sphere& a, const Capsule& b) {
    return std::max(0.0, std::sqrt(detail::point_segment_dist2(a.center, b.p0, b.p1)) - a.radius - b.radius);
}
inline double shape_distance_impl(const Capsule& a, const Sphere& b) { return shape_distance_impl(b, a); }
inline double shape_distance_impl(const Capsule& a, const Capsule& b) {
    return std::max(0.0, std::sqrt(detail::segment_segment_dist2(a.p0, a.p1, b.p0, b.p1)) - a.radius - b.radius);
}
inline double shape_distance_impl(const Sphere& a, const Box& b) {
    return std::max(0.0, std::sqrt(detail::point_box_dist2(a.center, b)) - a.radius);
}
inline double shape_distance_impl(const Capsule& a, const Box& b) {
    return std::max(0.0, std::sqrt(detail::segment_box_dist2(a.p0, a.p1, b)) - a.radius);
}

/// Separation distance for pairs that have an exact distance routine
/// (every pair except box-box). Negative values are clamped to 0.
inline double shape_distance(const Shape& a, const Shape& b) {
    return std::visit(
        [](const auto& x, const auto& y) -> double {
            using X = std::decay_t<decltype(x)>;
            using Y = std::decay_t<decltype(y)>;
            if constexpr (std::is_same_v<X, Box> && std::is_same_v<Y, Box>) {
                throw ContractError("shape_distance: box-box distance is not supported");
            } else if constexpr (std::is_same_v<X, Box>) {
                return shape_distance_impl(y, x);
            } else {
                return shape_distance_impl(x, y);
            }
        },
        a, b);
}

/// A shape placed in the world with its cached bounds for broadphase rejection.
struct PlacedShape {
    Shape shape;
    Aabb box;

    explicit PlacedShape(Shape s) : shape(std::move(s)), box(bounds(shape)) {}
};

inline bool placed_intersect(const PlacedShape& a, const PlacedShape& b) {
    return a.box.overlaps(b.box) && shapes_intersect(a.shape, b.shape);
}

/// True iff any end-effector shape placed at `ee_pose` intersects any scene obstacle.
inline bool collide_pose(std::span<const Shape> ee_body, const Pose& ee_pose, std::span<const Obstacle> scene) {
    for (const auto& local : ee_body) {
        const PlacedShape s(transform_shape(local, ee_pose));
        for (const auto& o : scene) {
            if (s.box.overlaps(bounds(o.shape)) && shapes_intersect(s.shape, o.shape)) return true;
        }
    }
    return false;
}

}  // namespace jist
