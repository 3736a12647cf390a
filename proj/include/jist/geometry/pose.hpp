#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "jist/core/error.hpp"

namespace jist {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Rigid transform in SE(3): rotation followed by translation.
struct Pose {
    Vec3 t = Vec3::Zero();
    Quat q = Quat::Identity();

    Pose() = default;
    /// Renormalizes the rotation only when its norm has drifted, so composing
    /// with an identity transform is exact.
    Pose(const Vec3& translation, const Quat& rotation) : t(translation), q(rotation) {
        if (std::abs(q.squaredNorm() - 1.0) > 1e-14) q.normalize();
    }

    static Pose identity() { return {}; }
    static Pose translation(double x, double y, double z) { return {Vec3(x, y, z), Quat::Identity()}; }
    static Pose translation(const Vec3& v) { return {v, Quat::Identity()}; }
    static Pose rotation(const Vec3& axis, double angle) {
        return {Vec3::Zero(), Quat(Eigen::AngleAxisd(angle, axis.normalized()))};
    }
    static Pose rot_x(double a) { return rotation(Vec3::UnitX(), a); }
    static Pose rot_y(double a) { return rotation(Vec3::UnitY(), a); }
    static Pose rot_z(double a) { return rotation(Vec3::UnitZ(), a); }

    Pose operator*(const Pose& o) const { return {t + q * o.t, q * o.q}; }

    Pose inverse() const {
        const Quat qi = q.conjugate();
        return {-(qi * t), qi};
    }

    /// Maps a point expressed in this frame into the parent frame.
    Vec3 act(const Vec3& p) const { return q * p + t; }

    Mat3 rotation_matrix() const { return q.toRotationMatrix(); }

    bool operator==(const Pose& o) const { return t == o.t && q.coeffs() == o.q.coeffs(); }
};

/// Rotation vector (axis * angle, angle in [0, pi]) of a unit quaternion.
inline Vec3 rotation_vector(const Quat& qin) {
    Quat q = qin;
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    const Vec3 v = q.vec();
    const double s = v.norm();
    if (s < 1e-12) return 2.0 * v / q.w();
    const double angle = 2.0 * std::atan2(s, q.w());
    return v * (angle / s);
}

/// Quaternion of a rotation vector.
inline Quat quat_from_rotation_vector(const Vec3& w) {
    const double angle = w.norm();
    if (angle < 1e-12) {
        Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
        return q.normalized();
    }
    return Quat(Eigen::AngleAxisd(angle, w / angle));
}

/// Six-vector error from `from` to `to`: translation difference stacked on
/// the world-frame rotation vector of the relative rotation.
inline Vec6 pose_error(const Pose& from, const Pose& to) {
    Vec6 e;
    e.head<3>() = to.t - from.t;
    e.tail<3>() = rotation_vector(to.q * from.q.conjugate());
    return e;
}

/// Shortest-arc spherical interpolation; t = 0 and t = 1 return the inputs exactly.
inline Quat quat_slerp(const Quat& a, const Quat& b, double t) {
    if (t <= 0.0) return a;
    if (t >= 1.0) return b;
    Eigen::Vector4d va = a.coeffs();
    Eigen::Vector4d vb = b.coeffs();
    double d = va.dot(vb);
    if (d < 0.0) {
        vb = -vb;
        d = -d;
    }
    Eigen::Vector4d out;
    if (d > 1.0 - 1e-12) {
        out = va + t * (vb - va);
    } else {
        const double theta = std::acos(std::min(d, 1.0));
        const double s = std::sin(theta);
        out = (std::sin((1.0 - t) * theta) / s) * va + (std::sin(t * theta) / s) * vb;
    }
    Quat q;
    q.coeffs() = out.normalized();
    return q;
}

inline Pose pose_interpolate(const Pose& a, const Pose& b, double t) {
    require(t >= 0.0 && t <= 1.0, "pose_interpolate: t must lie in [0, 1]");
    if (t == 0.0) return a;
    if (t == 1.0) return b;
    Pose out;
    out.t = a.t + t * (b.t - a.t);
    out.q = quat_slerp(a.q, b.q, t);
    return out;
}

}  // namespace jist
