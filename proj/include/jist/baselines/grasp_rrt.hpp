#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "jist/planner/common.hpp"

namespace jist {

struct RRTParams {
    double goal_bias = 0.1;        // probability of a J+ goal extension
    double step = 0.2;             // rad, C-space extension length
    std::uint64_t max_iters = 1'000'000;
    std::uint64_t rng_seed = 0;
    double goal_tol = 0.005;       // DISP, m
    double time_budget = 30.0;     // s
    double cc_resolution = kValidationResolution;
    PlanClock::Mode clock = PlanClock::Mode::Wall;
    std::vector<double> joint_weights;  // nearest-neighbor metric weights; empty = all 1
    SteeringParams steer;

    void validate(std::size_t dof) const {
        require(goal_bias >= 0.0 && goal_bias <= 1.0, "grasp_rrt: goal_bias must lie in [0, 1]");
        require(step > 0.0, "grasp_rrt: step must be positive");
        require(max_iters >= 1, "grasp_rrt: max_iters must be >= 1");
        require(time_budget > 0.0, "grasp_rrt: time_budget must be positive");
        require(joint_weights.empty() || joint_weights.size() == dof, "grasp_rrt: joint_weights size mismatch");
    }
};

inline json_io::Json to_json(const RRTParams& p) {
    return {{"goal_bias", p.goal_bias},   {"step", p.step},
            {"max_iters", p.max_iters},   {"rng_seed", p.rng_seed},
            {"goal_tol", p.goal_tol},     {"time_budget", p.time_budget},
            {"cc_resolution", p.cc_resolution}, {"clock", to_string(p.clock)},
            {"joint_weights", p.joint_weights}, {"steering", to_json(p.steer)}};
}

/// Keys as written by to_json; absent keys keep `base` values.
inline RRTParams rrt_params_from_json(const json_io::Json& j, RRTParams base = {}, const std::string& where = "rrt") {
    using json_io::get_or;
    json_io::check_keys(j, {"goal_bias", "step", "max_iters", "rng_seed", "goal_tol", "time_budget", "cc_resolution",
                            "clock", "joint_weights", "steering"},
                        where);
    RRTParams p = base;
    p.goal_bias = get_or(j, "goal_bias", p.goal_bias, where);
    p.step = get_or(j, "step", p.step, where);
    p.max_iters = get_or(j, "max_iters", p.max_iters, where);
    p.rng_seed = get_or(j, "rng_seed", p.rng_seed, where);
    p.goal_tol = get_or(j, "goal_tol", p.goal_tol, where);
    p.time_budget = get_or(j, "time_budget", p.time_budget, where);
    p.cc_resolution = get_or(j, "cc_resolution", p.cc_resolution, where);
    if (j.contains("clock")) p.clock = parse_clock_mode(get_or<std::string>(j, "clock", "", where));
    p.joint_weights = get_or(j, "joint_weights", p.joint_weights, where);
    if (j.contains("steering")) p.steer = steering_params_from_json(j["steering"]);
    return p;
}

/// RRT with J+ goal biasing: uniform C-space samples extend the
/// weighted-Euclidean nearest node by `step`; with probability `goal_bias`
/// the DISP-nearest node is steered by J+ toward a random goal pose. Stops
/// at the first solution.
class GraspRrt {
public:
    GraspRrt(const KinematicChain& chain, std::span<const Obstacle> scene, const RRTParams& params)
        : chain_(chain), world_(scene), p_(params) {
        p_.validate(chain.dof());
        w_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(chain.dof()));
        for (std::size_t i = 0; i < p_.joint_weights.size(); ++i) w_[static_cast<Eigen::Index>(i)] = p_.joint_weights[i];
    }

    PlanResult plan(const PlanQuery& query) {
        require(!query.goals.empty(), "grasp_rrt: goal set is empty");
        check_dims(chain_, query.q_start, "grasp_rrt");
        require(chain_.within_limits(query.q_start), "grasp_rrt: start configuration outside joint limits");
        require(!collide_config(chain_, query.q_start, world_), "grasp_rrt: start configuration in collision");

        PlanClock clock(p_.clock);
        Rng rng(p_.rng_seed);
        PlanResult res;
        nodes_.clear();
        nodes_.push_back({query.q_start, fk(chain_, query.q_start), std::nullopt, {}, std::nullopt});
        std::optional<std::size_t> goal_node;
        std::optional<GoalMatch> match = goal_check_pose(chain_.ee_hull, nodes_[0].ee, query.goals, p_.goal_tol);
        if (match) goal_node = 0;

        for (std::uint64_t it = 0; !goal_node && it < p_.max_iters; ++it) {
            if (clock.elapsed() >= p_.time_budget) break;
            ++res.stats.iterations;
            Trajectory traj;
            std::size_t from;
            std::optional<Pose> via_pose;
            JointConfig via_q;
            if (rng.bernoulli(p_.goal_bias)) {
                const Pose& target = query.goals[rng.index(query.goals.size())];
                from = nearest_pose(target);
                via_pose = target;
                traj = jplus_steer(chain_, nodes_[from].config, target, p_.steer);
            } else {
                const JointConfig sample = sample_config(chain_, rng);
                from = nearest_config(sample);
                const JointConfig& qn = nodes_[from].config;
                const double d = weighted_distance(qn, sample);
                via_q = d <= p_.step ? sample : JointConfig(qn + (p_.step / d) * (sample - qn));
                traj = straight(qn, via_q);
            }
            ++res.stats.steer_calls;
            clock.charge(traj.work + nodes_.size());
            if (traj.size() < 2) {
                ++res.stats.no_progress;
                continue;
            }
            std::uint64_t checks = 0;
            const bool free = trajectory_free(chain_, traj, world_, p_.cc_resolution, &checks);
            res.stats.collision_checks += checks;
            clock.charge(checks);
            if (!free) {
                ++res.stats.pruned_cc;
                continue;
            }
            nodes_.push_back({traj.back(), traj.ee_poses.back(), from, via_q, via_pose});
            if ((match = goal_check_pose(chain_.ee_hull, nodes_.back().ee, query.goals, p_.goal_tol)))
                goal_node = nodes_.size() - 1;
        }

        res.stats.nodes = nodes_.size();
        if (goal_node) {
            res.best_path = rebuild_path(*goal_node);
            res.goal_index = match->index;
            res.goal_configs.push_back(nodes_[*goal_node].config);
            res.cost_history.push_back({clock.elapsed(), res.best_path->ee_path_cost});
            res.solutions.push_back(*res.best_path);
            if (!query.approach_targets.empty()) {
                const Trajectory ap = jplus_steer(chain_, res.best_path->back(), query.approach_targets[match->index], p_.steer);
                if (ap.reached && trajectory_free(chain_, ap, world_, p_.cc_resolution)) res.approach_path = ap;
            }
        }
        res.stats.elapsed = clock.elapsed();
        return res;
    }

    std::size_t tree_size() const { return nodes_.size(); }

private:
    struct Node {
        JointConfig config;
        Pose ee;
        std::optional<std::size_t> parent;
        JointConfig via_q;           // straight extension target
        std::optional<Pose> via_pose;  // J+ extension target
    };

    double weighted_distance(const JointConfig& a, const JointConfig& b) const {
        return (w_.array() * (a - b).array()).matrix().norm();
    }

    std::size_t nearest_config(const JointConfig& q) const {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const double d = weighted_distance(nodes_[i].config, q);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        return best;
    }

    std::size_t nearest_pose(const Pose& e) const {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const double d = disp_distance(chain_.ee_hull, nodes_[i].ee, e);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        return best;
    }

    Trajectory straight(const JointConfig& a, const JointConfig& b) const {
        TrajectoryBuilder tb(chain_, p_.steer.waypoint_res);
        tb.start(a);
        if (a != b) tb.append(b);
        return tb.finish(true);
    }

    Trajectory rebuild_path(std::size_t leaf) const {
        std::vector<std::size_t> ids;
        for (std::optional<std::size_t> v = leaf; v; v = nodes_[*v].parent) ids.push_back(*v);
        std::reverse(ids.begin(), ids.end());
        TrajectoryBuilder tb(chain_, p_.steer.waypoint_res);
        tb.start(nodes_[ids.front()].config, nodes_[ids.front()].ee);
        Trajectory path = tb.finish(true);
        for (std::size_t i = 1; i < ids.size(); ++i) {
            const Node& n = nodes_[ids[i]];
            const JointConfig& from = nodes_[*n.parent].config;
            const Trajectory edge = n.via_pose ? jplus_steer(chain_, from, *n.via_pose, p_.steer) : straight(from, n.via_q);
            require(edge.back() == n.config, "grasp_rrt: edge regeneration diverged");
            append_trajectory(path, edge);
        }
        return path;
    }

    const KinematicChain& chain_;
    CollisionWorld world_;
    RRTParams p_;
    Eigen::VectorXd w_;
    std::vector<Node> nodes_;
};

inline PlanResult grasp_rrt(const KinematicChain& chain, std::span<const Obstacle> scene, const PlanQuery& query,
                            const RRTParams& params) {
    GraspRrt rrt(chain, scene, params);
    return rrt.plan(query);
}

}  // namespace jist
