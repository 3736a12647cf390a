#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

#include "jist/core/error.hpp"
#include "jist/core/rng.hpp"
#include "jist/geometry/collision.hpp"
#include "jist/geometry/disp.hpp"

namespace jist {

using JointConfig = Eigen::VectorXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Revolute joint: the child frame is `origin` (relative to the parent
/// frame) followed by a rotation of q about `axis`.
struct Joint {
    std::string name;
    Vec3 axis = Vec3::UnitZ();
    Pose origin;
    double lo = -3.14159265358979323846;
    double hi = 3.14159265358979323846;
    double max_velocity = 1.0;  // rad/s; 0 locks the joint for random controls

    /// Continuous joints have infinite limits and are sampled over one turn.
    bool continuous() const { return std::isinf(lo) && std::isinf(hi); }
    double sample_lo() const { return continuous() ? -kPi : lo; }
    double sample_hi() const { return continuous() ? kPi : hi; }

    static constexpr double kPi = 3.14159265358979323846;
    static Joint make_continuous(Joint j) {
        j.lo = -std::numeric_limits<double>::infinity();
        j.hi = std::numeric_limits<double>::infinity();
        return j;
    }
};

/// Serial revolute arm with primitive link geometry.
struct KinematicChain {
    std::string name;
    std::vector<Joint> joints;
    std::vector<Shape> base_body;
    std::vector<std::vector<Shape>> link_bodies;  // one list per joint, in that joint's frame
    Pose ee_offset;
    HullPoints ee_hull;
    std::vector<Shape> ee_body;

    std::size_t dof() const { return joints.size(); }

    void validate() const {
        require(!joints.empty(), "chain: needs at least one joint");
        require(link_bodies.size() == joints.size(), "chain: link_bodies must have one entry per joint");
        for (const auto& j : joints) {
            require(j.lo < j.hi, "chain: joint '" + j.name + "' needs lo < hi");
            require(j.continuous() || (std::isfinite(j.lo) && std::isfinite(j.hi)),
                    "chain: joint '" + j.name + "' limits must both be finite or both infinite");
            require(j.max_velocity >= 0.0, "chain: joint '" + j.name + "' max_velocity must be >= 0");
            require(std::abs(j.axis.norm() - 1.0) <= 1e-9, "chain: joint '" + j.name + "' axis must be unit length");
        }
        require(!ee_hull.empty(), "chain: ee_hull must be non-empty");
        for (const auto& s : base_body) validate_shape(s);
        for (const auto& l : link_bodies)
            for (const auto& s : l) validate_shape(s);
        for (const auto& s : ee_body) validate_shape(s);
    }

    JointConfig lower() const {
        JointConfig v(dof());
        for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].lo;
        return v;
    }
    JointConfig upper() const {
        JointConfig v(dof());
        for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].hi;
        return v;
    }

    bool within_limits(const JointConfig& q) const {
        if (static_cast<std::size_t>(q.size()) != dof()) return false;
        for (std::size_t i = 0; i < dof(); ++i)
            if (q[i] < joints[i].lo || q[i] > joints[i].hi) return false;
        return true;
    }

    JointConfig clamp(const JointConfig& q) const { return q.cwiseMax(lower()).cwiseMin(upper()); }

    /// Sum of joint origin offsets plus the end-effector offset; an upper
    /// bound on the distance from the base to the end effector.
    double reach() const {
        double r = ee_offset.t.norm();
        for (const auto& j : joints) r += j.origin.t.norm();
        return r;
    }
};

inline void check_dims(const KinematicChain& chain, const JointConfig& q, const char* op) {
    if (static_cast<std::size_t>(q.size()) != chain.dof())
        throw ContractError(std::string(op) + ": configuration has " + std::to_string(q.size()) +
                            " values, chain has " + std::to_string(chain.dof()) + " joints");
}

struct FkResult {
    std::vector<Pose> frames;  // joint frames after each joint rotation
    Pose ee;
};

inline FkResult fk_frames(const KinematicChain& chain, const JointConfig& q) {
    check_dims(chain, q, "fk");
    FkResult out;
    out.frames.reserve(chain.dof());
    Pose t;
    for (std::size_t i = 0; i < chain.dof(); ++i) {
        t = t * chain.joints[i].origin * Pose::rotation(chain.joints[i].axis, q[i]);
        out.frames.push_back(t);
    }
    out.ee = t * chain.ee_offset;
    return out;
}

inline Pose fk(const KinematicChain& chain, const JointConfig& q) { return fk_frames(chain, q).ee; }

/// Geometric Jacobian; rows 0-2 linear, rows 3-5 angular velocity, world frame.
inline Jacobian jacobian(const KinematicChain& chain, const JointConfig& q) {
    const FkResult f = fk_frames(chain, q);
    Jacobian j(6, chain.dof());
    for (std::size_t i = 0; i < chain.dof(); ++i) {
        const Vec3 axis = f.frames[i].q * chain.joints[i].axis;
        j.block<3, 1>(0, i) = axis.cross(f.ee.t - f.frames[i].t);
        j.block<3, 1>(3, i) = axis;
    }
    return j;
}

/// Damped pseudo-inverse J^T (J J^T + lambda^2 I)^-1.
inline Eigen::MatrixXd dls_pinv(const Jacobian& j, double lambda) {
    require(lambda >= 0.0, "dls_pinv: lambda must be >= 0");
    Eigen::Matrix<double, 6, 6> m = j * j.transpose();
    m.diagonal().array() += lambda * lambda;
    if (lambda == 0.0) {
        Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(m);
        if (!lu.isInvertible()) throw NumericalError("dls_pinv: J J^T is singular and lambda = 0");
        return j.transpose() * lu.inverse();
    }
    Eigen::LLT<Eigen::Matrix<double, 6, 6>> llt(m);
    return j.transpose() * llt.solve(Eigen::Matrix<double, 6, 6>::Identity());
}

/// Scene obstacles with cached bounds, minus any ignored ids.
class CollisionWorld {
public:
    CollisionWorld() = default;
    explicit CollisionWorld(std::span<const Obstacle> scene, const std::set<std::string>& ignore = {}) {
        for (const auto& o : scene) {
            if (ignore.count(o.id)) continue;
            shapes_.emplace_back(o.shape);
        }
    }

    bool hits(const PlacedShape& s) const {
        for (const auto& o : shapes_)
            if (placed_intersect(s, o)) return true;
        return false;
    }

    /// True iff any shape of `body`, placed at `pose`, hits an obstacle.
    bool hits_body(std::span<const Shape> body, const Pose& pose) const {
        for (const auto& local : body)
            if (hits(PlacedShape(transform_shape(local, pose)))) return true;
        return false;
    }

    std::size_t size() const { return shapes_.size(); }

private:
    std::vector<PlacedShape> shapes_;
};

/// World-frame bodies of the arm at q, grouped by link index:
/// 0 = base, 1..d = joint links, d+1 = end effector.
inline std::vector<std::vector<PlacedShape>> place_bodies(const KinematicChain& chain, const FkResult& f) {
    std::vector<std::vector<PlacedShape>> links(chain.dof() + 2);
    for (const auto& s : chain.base_body) links[0].emplace_back(s);
    for (std::size_t i = 0; i < chain.dof(); ++i)
        for (const auto& s : chain.link_bodies[i]) links[i + 1].emplace_back(transform_shape(s, f.frames[i]));
    for (const auto& s : chain.ee_body) links[chain.dof() + 1].emplace_back(transform_shape(s, f.ee));
    return links;
}

/// Self-collision between links two or more joints apart.
inline bool self_collides(const std::vector<std::vector<PlacedShape>>& links) {
    for (std::size_t a = 0; a < links.size(); ++a)
        for (std::size_t b = a + 2; b < links.size(); ++b)
            for (const auto& sa : links[a])
                for (const auto& sb : links[b])
                    if (placed_intersect(sa, sb)) return true;
    return false;
}

inline bool collide_config(const KinematicChain& chain, const JointConfig& q, const CollisionWorld& world) {
    check_dims(chain, q, "collide_config");
    const auto links = place_bodies(chain, fk_frames(chain, q));
    for (const auto& l : links)
        for (const auto& s : l)
            if (world.hits(s)) return true;
    return self_collides(links);
}

inline bool collide_config(const KinematicChain& chain, const JointConfig& q, std::span<const Obstacle> scene,
                           const std::set<std::string>& ignore_ids = {}) {
    return collide_config(chain, q, CollisionWorld(scene, ignore_ids));
}

inline bool self_collides(const KinematicChain& chain, const JointConfig& q) {
    check_dims(chain, q, "self_collides");
    return self_collides(place_bodies(chain, fk_frames(chain, q)));
}

/// Chain carrying a grasped object: `object` (in the end-effector frame) is
/// appended to the end-effector body. Callers ignore the object's scene id.
inline KinematicChain attach_object(const KinematicChain& chain, const Shape& object_in_ee) {
    KinematicChain out = chain;
    out.ee_body.push_back(object_in_ee);
    return out;
}

inline JointConfig sample_config(const KinematicChain& chain, Rng& rng) {
    JointConfig q(chain.dof());
    for (std::size_t i = 0; i < chain.dof(); ++i) q[i] = rng.uniform(chain.joints[i].sample_lo(), chain.joints[i].sample_hi());
    return q;
}

}  // namespace jist
