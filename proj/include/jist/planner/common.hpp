#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jist/core/clock.hpp"
#include "jist/geometry/json_io.hpp"
#include "jist/kinematics/chain.hpp"
#include "jist/steering/steering.hpp"

// Pieces shared by every planner: queries, results, goal tests and path
// validation.

namespace jist {

/// Validation resolution for reported solutions: 1 mm of end-effector DISP.
inline constexpr double kValidationResolution = 0.001;

struct PlanQuery {
    JointConfig q_start;
    std::vector<Pose> goals;             // E_goal
    std::vector<Pose> approach_targets;  // empty, or one true grasp pose per goal
};

struct CostSample {
    double t = 0.0;     // seconds on the planner clock
    double cost = 0.0;  // DISP path cost, m
};

struct PlanStats {
    std::uint64_t iterations = 0;
    std::uint64_t nodes = 0;
    std::uint64_t collision_checks = 0;
    std::uint64_t steer_calls = 0;
    std::uint64_t greedy_generations = 0;
    std::uint64_t fallback_generations = 0;
    std::uint64_t pruned_bab = 0;
    std::uint64_t pruned_cc = 0;
    std::uint64_t no_progress = 0;
    std::uint64_t search_expansions = 0;
    std::uint64_t closed_size = 0;
    double elapsed = 0.0;
};

struct PlanResult {
    std::optional<Trajectory> best_path;      // root to goal
    std::optional<Trajectory> approach_path;  // goal to true grasp, when appended
    std::optional<std::size_t> goal_index;    // index into the query goals
    std::vector<CostSample> cost_history;
    std::vector<JointConfig> goal_configs;    // Q_goal
    std::vector<Trajectory> solutions;        // one per cost_history entry, when recorded
    PlanStats stats;

    bool solved() const { return best_path.has_value(); }
    double best_cost() const {
        return cost_history.empty() ? std::numeric_limits<double>::infinity() : cost_history.back().cost;
    }
    std::optional<double> time_to_first() const {
        if (cost_history.empty()) return std::nullopt;
        return cost_history.front().t;
    }
};

struct GoalMatch {
    std::size_t index;
    double distance;
};

/// Goal pose DISP-nearest to `e` if within `tol`; ties go to the lower index.
inline std::optional<GoalMatch> goal_check_pose(const HullPoints& hull, const Pose& e, std::span<const Pose> goals,
                                                double tol) {
    std::optional<GoalMatch> best;
    for (std::size_t i = 0; i < goals.size(); ++i) {
        const double d = disp_distance(hull, e, goals[i]);
        if (!best || d < best->distance) best = GoalMatch{i, d};
    }
    if (best && best->distance <= tol) return best;
    return std::nullopt;
}

inline std::optional<GoalMatch> goal_check(const KinematicChain& chain, const JointConfig& q, std::span<const Pose> goals,
                                           double tol) {
    return goal_check_pose(chain.ee_hull, fk(chain, q), goals, tol);
}

namespace detail {

// Bisects a..b in joint space until consecutive end-effector poses are
// within `res`, checking every inserted configuration.
inline bool segment_free(const KinematicChain& chain, const CollisionWorld& world, const JointConfig& a, const Pose& ea,
                         const JointConfig& b, const Pose& eb, double res, std::uint64_t& checks, int depth) {
    if (depth >= 40 || disp_distance(chain.ee_hull, ea, eb) <= res) return true;
    const JointConfig mid = 0.5 * (a + b);
    ++checks;
    if (collide_config(chain, mid, world)) return false;
    const Pose em = fk(chain, mid);
    return segment_free(chain, world, a, ea, mid, em, res, checks, depth + 1) &&
           segment_free(chain, world, mid, em, b, eb, res, checks, depth + 1);
}

}  // namespace detail

/// True iff every configuration of `traj`, and every joint-space
/// interpolation between consecutive ones at end-effector DISP spacing
/// `resolution`, is collision free. Stored configurations are checked first
/// so most collisions are found before any refinement.
inline bool trajectory_free(const KinematicChain& chain, const Trajectory& traj, const CollisionWorld& world,
                            double resolution, std::uint64_t* checks = nullptr) {
    require(!traj.configs.empty(), "trajectory_free: empty trajectory");
    require(resolution > 0.0, "trajectory_free: resolution must be positive");
    std::uint64_t n = 0;
    bool ok = true;
    for (const auto& q : traj.configs) {
        ++n;
        if (collide_config(chain, q, world)) {
            ok = false;
            break;
        }
    }
    for (std::size_t i = 0; ok && i + 1 < traj.configs.size(); ++i)
        ok = detail::segment_free(chain, world, traj.configs[i], traj.ee_poses[i], traj.configs[i + 1],
                                  traj.ee_poses[i + 1], resolution, n, 0);
    if (checks) *checks += n;
    return ok;
}

inline bool validate_solution(const KinematicChain& chain, const Trajectory& traj, std::span<const Obstacle> scene,
                              double resolution = kValidationResolution) {
    return trajectory_free(chain, traj, CollisionWorld(scene), resolution);
}

/// Appends `edge` (which starts where `path` ends) to `path`.
inline void append_trajectory(Trajectory& path, const Trajectory& edge) {
    if (path.configs.empty()) {
        path = edge;
        return;
    }
    for (std::size_t i = 1; i < edge.configs.size(); ++i) {
        path.configs.push_back(edge.configs[i]);
        path.ee_poses.push_back(edge.ee_poses[i]);
    }
    path.ee_path_cost += edge.ee_path_cost;
    path.work += edge.work;
}

inline json_io::Json configs_to_json(const std::vector<JointConfig>& qs) {
    json_io::Json out = json_io::Json::array();
    for (const auto& q : qs) out.push_back(std::vector<double>(q.data(), q.data() + q.size()));
    return out;
}

inline json_io::Json plan_result_to_json(const PlanResult& r, const std::string& algo) {
    using json_io::Json;
    Json hist = Json::array();
    for (const auto& s : r.cost_history) hist.push_back({{"t", s.t}, {"cost", s.cost}});
    const auto& st = r.stats;
    Json j = {
        {"algo", algo},
        {"solved", r.solved()},
        {"cost", r.solved() ? Json(r.best_cost()) : Json(nullptr)},
        {"goal_index", r.goal_index ? Json(*r.goal_index) : Json(nullptr)},
        {"cost_history", hist},
        {"trajectory", r.best_path ? configs_to_json(r.best_path->configs) : Json::array()},
        {"approach_path", r.approach_path ? configs_to_json(r.approach_path->configs) : Json(nullptr)},
        {"goal_configs", configs_to_json(r.goal_configs)},
        {"stats",
         {{"iterations", st.iterations},
          {"nodes", st.nodes},
          {"collision_checks", st.collision_checks},
          {"steer_calls", st.steer_calls},
          {"greedy_generations", st.greedy_generations},
          {"fallback_generations", st.fallback_generations},
          {"pruned_bab", st.pruned_bab},
          {"pruned_cc", st.pruned_cc},
          {"no_progress", st.no_progress},
          {"search_expansions", st.search_expansions},
          {"closed_size", st.closed_size},
          {"elapsed", st.elapsed}}},
    };
    return j;
}

}  // namespace jist
