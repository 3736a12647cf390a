#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <variant>
#include <vector>

#include "jist/core/error.hpp"
#include "jist/geometry/pose.hpp"

namespace jist {

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
};

/// Segment p0-p1 swept by a ball of `radius`.
struct Capsule {
    Vec3 p0 = Vec3::Zero();
    Vec3 p1 = Vec3::Zero();
    double radius = 0.0;
};

/// Box {frame * x : lo <= x <= hi}. Scene boxes use an identity frame and are
/// axis-aligned; boxes on moving links pick up the link's frame.
struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
    Pose frame;
};

using Shape = std::variant<Sphere, Capsule, Box>;

struct Obstacle {
    std::string id;
    Shape shape;
};

struct Aabb {
    Vec3 lo;
    Vec3 hi;

    bool overlaps(const Aabb& o) const {
        return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
    }
    void merge(const Aabb& o) {
        lo = lo.cwiseMin(o.lo);
        hi = hi.cwiseMax(o.hi);
    }
};

inline void validate_shape(const Shape& s) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Box>) {
                require((v.lo.array() < v.hi.array()).all(), "box: min must be < max componentwise");
            } else {
                require(v.radius > 0.0, "shape radius must be positive");
            }
        },
        s);
}

inline Shape transform_shape(const Shape& s, const Pose& pose) {
    return std::visit(
        [&](const auto& v) -> Shape {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return Sphere{pose.act(v.center), v.radius};
            } else if constexpr (std::is_same_v<T, Capsule>) {
                return Capsule{pose.act(v.p0), pose.act(v.p1), v.radius};
            } else {
                return Box{v.lo, v.hi, pose * v.frame};
            }
        },
        s);
}

inline std::array<Vec3, 8> box_corners(const Box& b) {
    std::array<Vec3, 8> c;
    for (int i = 0; i < 8; ++i) {
        const Vec3 local((i & 1) ? b.hi.x() : b.lo.x(), (i & 2) ? b.hi.y() : b.lo.y(),
                         (i & 4) ? b.hi.z() : b.lo.z());
        c[i] = b.frame.act(local);
    }
    return c;
}

inline Aabb bounds(const Shape& s) {
    return std::visit(
        [](const auto& v) -> Aabb {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                const Vec3 r = Vec3::Constant(v.radius);
                return {v.center - r, v.center + r};
            } else if constexpr (std::is_same_v<T, Capsule>) {
                const Vec3 r = Vec3::Constant(v.radius);
                return {v.p0.cwiseMin(v.p1) - r, v.p0.cwiseMax(v.p1) + r};
            } else {
                const auto c = box_corners(v);
                Aabb out{c[0], c[0]};
                for (const auto& p : c) out.merge({p, p});
                return out;
            }
        },
        s);
}

inline double shape_volume(const Shape& s) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            constexpr double kPi = 3.14159265358979323846;
            if constexpr (std::is_same_v<T, Sphere>) {
                return 4.0 / 3.0 * kPi * v.radius * v.radius * v.radius;
            } else if constexpr (std::is_same_v<T, Capsule>) {
                const double len = (v.p1 - v.p0).norm();
                return kPi * v.radius * v.radius * len + 4.0 / 3.0 * kPi * v.radius * v.radius * v.radius;
            } else {
                const Vec3 e = v.hi - v.lo;
                return e.x() * e.y() * e.z();
            }
        },
        s);
}

inline const char* shape_type_name(const Shape& s) {
    switch (s.index()) {
        case 0: return "sphere";
        case 1: return "capsule";
        default: return "box";
    }
}

}  // namespace jist
