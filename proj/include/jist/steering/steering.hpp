#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "jist/core/rng.hpp"
#include "jist/kinematics/chain.hpp"

namespace jist {

struct SteeringParams {
    double lambda = 0.05;        // DLS damping
    double step_clamp = 0.05;    // max ||dq|| per iteration, rad
    int max_iters = 500;
    double goal_tol = 0.005;     // DISP, m
    double waypoint_res = 0.005; // max DISP between recorded configs, m
    double dt = 0.05;            // control period, s
    double random_duration_min = 0.2;  // s
    double random_duration_max = 1.0;  // s
    int max_backtracks = 10;     // step halvings before a J+ iteration is declared stalled

    void validate() const {
        require(lambda > 0.0 && step_clamp > 0.0 && max_iters > 0 && goal_tol > 0.0 && waypoint_res > 0.0 && dt > 0.0,
                "steering params must be positive");
        require(random_duration_min > 0.0 && random_duration_min <= random_duration_max,
                "steering params: random duration range invalid");
        require(max_backtracks >= 0, "steering params: max_backtracks must be >= 0");
    }
};

inline nlohmann::json to_json(const SteeringParams& p) {
    return {{"lambda", p.lambda},
            {"step_clamp", p.step_clamp},
            {"max_iters", p.max_iters},
            {"goal_tol", p.goal_tol},
            {"waypoint_res", p.waypoint_res},
            {"dt", p.dt},
            {"random_duration_min", p.random_duration_min},
            {"random_duration_max", p.random_duration_max},
            {"max_backtracks", p.max_backtracks}};
}

/// Missing keys keep their defaults.
inline SteeringParams steering_params_from_json(const nlohmann::json& j) {
    SteeringParams p;
    p.lambda = j.value("lambda", p.lambda);
    p.step_clamp = j.value("step_clamp", p.step_clamp);
    p.max_iters = j.value("max_iters", p.max_iters);
    p.goal_tol = j.value("goal_tol", p.goal_tol);
    p.waypoint_res = j.value("waypoint_res", p.waypoint_res);
    p.dt = j.value("dt", p.dt);
    p.random_duration_min = j.value("random_duration_min", p.random_duration_min);
    p.random_duration_max = j.value("random_duration_max", p.random_duration_max);
    p.max_backtracks = j.value("max_backtracks", p.max_backtracks);
    p.validate();
    return p;
}

struct Trajectory {
    std::vector<JointConfig> configs;
    std::vector<Pose> ee_poses;  // fk of each config
    bool reached = false;
    double ee_path_cost = 0.0;
    std::uint64_t work = 0;               // forward-kinematics evaluations spent
    std::vector<double> target_distance;  // J+ only: DISP to target after each accepted iterate

    const JointConfig& back() const { return configs.back(); }
    std::size_t size() const { return configs.size(); }
};

/// Accumulates a trajectory, inserting joint-space midpoints until consecutive
/// end-effector poses are within `res` under DISP.
class TrajectoryBuilder {
public:
    TrajectoryBuilder(const KinematicChain& chain, double res) : chain_(chain), res_(res) {}

    void start(const JointConfig& q) {
        traj_.configs = {q};
        traj_.ee_poses = {fk(chain_, q)};
        traj_.ee_path_cost = 0.0;
        ++traj_.work;
    }

    void start(const JointConfig& q, const Pose& ee) {
        traj_.configs = {q};
        traj_.ee_poses = {ee};
        traj_.ee_path_cost = 0.0;
    }

    void append(const JointConfig& q) {
        const Pose e = fk(chain_, q);
        ++traj_.work;
        append(q, e);
    }

    void append(const JointConfig& q, const Pose& e) {
        const JointConfig a = traj_.configs.back();
        const Pose ea = traj_.ee_poses.back();
        push(a, ea, q, e, 0);
    }

    Trajectory& traj() { return traj_; }
    Trajectory finish(bool reached) {
        traj_.reached = reached;
        return std::move(traj_);
    }

private:
    void push(const JointConfig& a, const Pose& ea, const JointConfig& b, const Pose& eb, int depth) {
        const double d = disp_distance(chain_.ee_hull, ea, eb);
        if (d <= res_ || depth >= 40) {
            traj_.configs.push_back(b);
            traj_.ee_poses.push_back(eb);
            traj_.ee_path_cost += d;
            return;
        }
        const JointConfig mid = 0.5 * (a + b);
        const Pose em = fk(chain_, mid);
        ++traj_.work;
        push(a, ea, mid, em, depth + 1);
        push(mid, em, b, eb, depth + 1);
    }

    const KinematicChain& chain_;
    double res_;
    Trajectory traj_;
};

/// Damped least-squares joint update toward `target`, clamped to `step_clamp`.
inline JointConfig jplus_update(const KinematicChain& chain, const JointConfig& q, const Pose& ee, const Pose& target,
                                const SteeringParams& p) {
    const Jacobian j = jacobian(chain, q);
    Eigen::Matrix<double, 6, 6> m = j * j.transpose();
    m.diagonal().array() += p.lambda * p.lambda;
    const Vec6 err = pose_error(ee, target);
    JointConfig dq = j.transpose() * m.llt().solve(err);
    const double n = dq.norm();
    if (n > p.step_clamp) dq *= p.step_clamp / n;
    return dq;
}

/// Damped least-squares step that moves every hull point toward its target
/// position. Used when the pose-error step cannot reduce DISP, since DISP
/// is measured on hull points rather than on the 6D pose error.
inline JointConfig hull_point_update(const KinematicChain& chain, const JointConfig& q, const Pose& ee,
                                     const Pose& target, const SteeringParams& p) {
    const Jacobian j = jacobian(chain, q);
    const auto& pts = chain.ee_hull.points;
    Eigen::MatrixXd a(3 * pts.size(), chain.dof());
    Eigen::VectorXd b(3 * pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Vec3 r = ee.q * pts[k];
        for (std::size_t c = 0; c < chain.dof(); ++c) {
            const Vec3 w = j.col(c).tail<3>();
            a.block<3, 1>(3 * k, c) = j.col(c).head<3>() + w.cross(r);
        }
        b.segment<3>(3 * k) = target.act(pts[k]) - ee.act(pts[k]);
    }
    Eigen::MatrixXd m = a.transpose() * a;
    m.diagonal().array() += p.lambda * p.lambda;
    JointConfig dq = m.ldlt().solve(a.transpose() * b);
    const double n = dq.norm();
    if (n > p.step_clamp) dq *= p.step_clamp / n;
    return dq;
}

/// Iterative J+ steering toward an end-effector pose. Each accepted iterate
/// is clamped to the joint limits and never increases DISP to the target:
/// the step is halved when it would, and if no halving helps the hull-point
/// step is tried the same way. Stops when neither direction makes progress.
/// Collisions are not checked here.
inline Trajectory jplus_steer(const KinematicChain& chain, const JointConfig& q_start, const Pose& target,
                              const SteeringParams& p) {
    check_dims(chain, q_start, "jplus_steer");
    require(chain.within_limits(q_start), "jplus_steer: start configuration outside joint limits");
    TrajectoryBuilder b(chain, p.waypoint_res);
    b.start(q_start);
    JointConfig q = q_start;
    Pose e = b.traj().ee_poses.back();
    double d = disp_distance(chain.ee_hull, e, target);
    b.traj().target_distance.push_back(d);
    if (d <= p.goal_tol) return b.finish(true);

    for (int it = 0; it < p.max_iters; ++it) {
        bool accepted = false;
        JointConfig qn;
        Pose en;
        double dn = d;
        for (int pass = 0; pass < 2 && !accepted; ++pass) {
            JointConfig dq = pass == 0 ? jplus_update(chain, q, e, target, p) : hull_point_update(chain, q, e, target, p);
            ++b.traj().work;
            for (int k = 0; k <= p.max_backtracks; ++k) {
                qn = chain.clamp(q + dq);
                en = fk(chain, qn);
                ++b.traj().work;
                dn = disp_distance(chain.ee_hull, en, target);
                if (dn < d) {
                    accepted = true;
                    break;
                }
                dq *= 0.5;
            }
        }
        if (!accepted) break;  // stalled
        b.append(qn, en);
        b.traj().target_distance.push_back(dn);
        q = qn;
        e = en;
        d = dn;
        if (d <= p.goal_tol) return b.finish(true);
    }
    return b.finish(false);
}

/// Coarse joint-space steps from `a` to `b`, each joint moving at most
/// max_velocity * dt per step. Locked (zero-velocity) joints do not limit
/// the step count.
inline std::vector<JointConfig> cspace_steps(const KinematicChain& chain, const JointConfig& a, const JointConfig& b,
                                             double dt) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < chain.dof(); ++i) {
        const double v = chain.joints[i].max_velocity;
        if (v <= 0.0) continue;
        n = std::max(n, static_cast<std::size_t>(std::ceil(std::abs(b[i] - a[i]) / (v * dt))));
    }
    std::vector<JointConfig> out;
    for (std::size_t s = 1; s < n; ++s) out.push_back(a + (static_cast<double>(s) / static_cast<double>(n)) * (b - a));
    out.push_back(b);
    return out;
}

inline Trajectory cspace_steer(const KinematicChain& chain, const JointConfig& q_start, const JointConfig& q_goal,
                               const SteeringParams& p) {
    check_dims(chain, q_start, "cspace_steer");
    check_dims(chain, q_goal, "cspace_steer");
    TrajectoryBuilder b(chain, p.waypoint_res);
    b.start(q_start);
    if (q_start == q_goal) return b.finish(true);
    for (const auto& q : cspace_steps(chain, q_start, q_goal, p.dt)) b.append(q);
    return b.finish(true);
}

/// J+ iterations from `seed`, then from uniform random configurations.
inline std::optional<JointConfig> solve_ik(const KinematicChain& chain, const Pose& target, const JointConfig& seed,
                                           int restarts, std::uint64_t rng_seed, const SteeringParams& p,
                                           std::uint64_t* work = nullptr) {
    require(restarts >= 1, "solve_ik: restarts must be >= 1");
    check_dims(chain, seed, "solve_ik");
    Rng rng(rng_seed);
    for (int attempt = 0; attempt < restarts; ++attempt) {
        const JointConfig start = attempt == 0 ? chain.clamp(seed) : sample_config(chain, rng);
        const Trajectory t = jplus_steer(chain, start, target, p);
        if (work) *work += t.work;
        if (t.reached) return t.back();
    }
    return std::nullopt;
}

/// Straight-line SE(3) interpolation of the end effector, tracked by IK at
/// waypoints spaced `ee_velocity_bound * dt` apart (each seeded by the
/// previous solution) and joined by C-space steps.
inline Trajectory ik_steer(const KinematicChain& chain, const JointConfig& q_start, const Pose& target,
                           double ee_velocity_bound, const SteeringParams& p) {
    check_dims(chain, q_start, "ik_steer");
    require(ee_velocity_bound > 0.0, "ik_steer: ee_velocity_bound must be positive");
    TrajectoryBuilder b(chain, p.waypoint_res);
    b.start(q_start);
    const Pose e0 = b.traj().ee_poses.back();
    const double len = disp_distance(chain.ee_hull, e0, target);
    if (len <= p.goal_tol) return b.finish(true);
    const double spacing = ee_velocity_bound * p.dt;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / spacing)));
    JointConfig q = q_start;
    for (std::size_t i = 1; i <= n; ++i) {
        const Pose wp = i == n ? target : pose_interpolate(e0, target, static_cast<double>(i) / static_cast<double>(n));
        std::uint64_t w = 0;
        const auto sol = solve_ik(chain, wp, q, 1, 0, p, &w);
        b.traj().work += w;
        if (!sol) return b.finish(false);
        for (const auto& s : cspace_steps(chain, q, *sol, p.dt)) b.append(s);
        q = *sol;
    }
    return b.finish(true);
}

/// Random joint velocities in [-max_velocity, max_velocity] held for a random
/// duration, integrated at dt with clamping to the joint limits.
inline Trajectory random_control(const KinematicChain& chain, const JointConfig& q, Rng& rng, const SteeringParams& p) {
    check_dims(chain, q, "random_control");
    Eigen::VectorXd v(chain.dof());
    for (std::size_t i = 0; i < chain.dof(); ++i) {
        const double vmax = chain.joints[i].max_velocity;
        v[i] = vmax > 0.0 ? rng.uniform(-vmax, vmax) : 0.0;
    }
    const double duration = rng.uniform(p.random_duration_min, p.random_duration_max);
    const auto steps = static_cast<int>(std::ceil(duration / p.dt));
    TrajectoryBuilder b(chain, p.waypoint_res);
    b.start(q);
    JointConfig cur = q;
    for (int s = 0; s < steps; ++s) {
        const JointConfig next = chain.clamp(cur + v * p.dt);
        if (next == cur) break;
        b.append(next);
        cur = next;
    }
    return b.finish(true);
}

/// Largest end-effector DISP rate (m/s) seen over C-space steering between
/// random configuration pairs.
inline double estimate_ee_velocity_bound(const KinematicChain& chain, int pairs, std::uint64_t seed,
                                         const SteeringParams& p) {
    Rng rng(seed);
    double best = 0.0;
    for (int k = 0; k < pairs; ++k) {
        const JointConfig a = sample_config(chain, rng);
        const JointConfig b = sample_config(chain, rng);
        Pose prev = fk(chain, a);
        for (const auto& q : cspace_steps(chain, a, b, p.dt)) {
            const Pose cur = fk(chain, q);
            best = std::max(best, disp_distance(chain.ee_hull, prev, cur) / p.dt);
            prev = cur;
        }
    }
    return best;
}

}  // namespace jist
