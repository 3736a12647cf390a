#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "jist/planner/common.hpp"
#include "jist/roadmap/roadmap.hpp"
#include "jist/search/msmo_astar.hpp"

namespace jist {

enum class BabMode { GPlusH, G };

inline BabMode parse_bab_mode(const std::string& s) {
    if (s == "g+h" || s == "gh") return BabMode::GPlusH;
    if (s == "g") return BabMode::G;
    throw ContractError("unknown branch-and-bound mode '" + s + "' (expected g+h|g)");
}

inline std::string to_string(BabMode m) { return m == BabMode::G ? "g" : "g+h"; }

/// κ suggested by the roadmap size: 2·⌈ln |V_ee|⌉.
inline int kappa_for_roadmap(std::size_t vertices) {
    return 2 * static_cast<int>(roadmap_neighbor_count(vertices));
}

struct PlannerParams {
    std::uint64_t max_iters = 1'000'000;  // N
    int kappa = 20;
    double goal_tol = 0.005;     // DISP, m
    double time_budget = 30.0;   // s
    std::uint64_t rng_seed = 0;
    double selection_eps = 1e-3;  // m, in the selection weight 1/(eps + g + h)
    BabMode bab = BabMode::GPlusH;
    double cc_resolution = kValidationResolution;
    PlanClock::Mode clock = PlanClock::Mode::Wall;
    bool stop_on_first_solution = false;
    bool record_solutions = false;  // keep the path of every improvement
    SteeringParams steer;

    void validate() const {
        require(max_iters >= 1, "planner: N must be >= 1");
        require(kappa >= 1, "planner: kappa must be >= 1");
        require(goal_tol >= 0.0, "planner: goal_tol must be >= 0");
        require(time_budget > 0.0, "planner: time_budget must be positive");
        require(selection_eps > 0.0, "planner: selection_eps must be positive");
        require(cc_resolution > 0.0, "planner: cc_resolution must be positive");
    }
};

struct Action {
    enum class Kind { TargetPose, RandomControl, GoalConfigTarget };
    Kind kind = Kind::TargetPose;
    Pose target;            // TargetPose
    JointConfig goal;       // GoalConfigTarget
    std::uint64_t seed = 0; // RandomControl
    double h = 0.0;         // heuristic of the pose the action aims at; +inf for random controls

    static Action pose(const Pose& p, double h) { return {Kind::TargetPose, p, {}, 0, h}; }
    static Action random(std::uint64_t seed) {
        return {Kind::RandomControl, {}, {}, seed, std::numeric_limits<double>::infinity()};
    }
    static Action goal_config(const JointConfig& q, double h) { return {Kind::GoalConfigTarget, {}, q, 0, h}; }
};

struct TreeNode {
    JointConfig config;
    Pose ee;
    std::optional<std::size_t> parent;
    Action via;     // action that produced the edge from the parent
    double g = 0.0;
    double h = 0.0;
    std::optional<std::vector<Action>> cand;  // nullopt: never expanded
};

/// Deterministic steering for an action.
inline Trajectory steer_action(const KinematicChain& chain, const JointConfig& q, const Action& a,
                               const SteeringParams& p) {
    switch (a.kind) {
        case Action::Kind::TargetPose:
            return jplus_steer(chain, q, a.target, p);
        case Action::Kind::GoalConfigTarget:
            return cspace_steer(chain, q, a.goal, p);
        case Action::Kind::RandomControl: {
            Rng rng(a.seed);
            return random_control(chain, q, rng, p);
        }
    }
    throw ContractError("steer_action: unknown action kind");
}

/// Prune iff the candidate cannot beat the incumbent; never without one.
inline bool bab_check(double g, double h, double best_cost, BabMode mode = BabMode::GPlusH) {
    if (!std::isfinite(best_cost)) return false;
    return (mode == BabMode::G ? g : g + h) >= best_cost;
}

/// Weighted sampling over a growing list of positive weights.
class SelectionSampler {
public:
    void push(double w) {
        require(w > 0.0 && std::isfinite(w), "SelectionSampler: weight must be positive and finite");
        weights_.push_back(w);
        tree_.push_back(0.0);
        const std::size_t n = tree_.size();
        // New Fenwick slot n covers (n - lowbit(n), n].
        double s = w;
        for (std::size_t k = 1; k < (n & (~n + 1)); k <<= 1) s += tree_[n - k - 1];
        tree_[n - 1] = s;
        total_ += w;
    }

    std::size_t size() const { return weights_.size(); }
    double total() const { return total_; }
    double weight(std::size_t i) const { return weights_[i]; }

    std::size_t sample(Rng& rng) const {
        require(!weights_.empty(), "SelectionSampler: empty");
        return find(rng.uniform(0.0, total_));
    }

    /// Smallest index whose inclusive prefix sum exceeds `u`.
    std::size_t find(double u) const {
        std::size_t pos = 0;
        std::size_t step = 1;
        while (step * 2 <= tree_.size()) step *= 2;
        for (; step > 0; step >>= 1) {
            if (pos + step <= tree_.size() && tree_[pos + step - 1] <= u) {
                pos += step;
                u -= tree_[pos - 1];
            }
        }
        return std::min(pos, weights_.size() - 1);
    }

private:
    std::vector<double> weights_;
    std::vector<double> tree_;
    double total_ = 0.0;
};

inline double selection_weight(double g, double h, double eps) { return 1.0 / (eps + g + h); }

/// Target poses from the navigation function: starting at the closed vertex
/// nearest to `e_sel`, collects closed neighbors with a lower heuristic than
/// `h_sel`, then moves to the predecessor, until κ poses are found or the
/// chain ends. The rest is drawn without replacement from E_goal. Sorted
/// ascending by h; ties keep discovery order.
inline std::vector<Action> greedy_edges(const Pose& e_sel, double h_sel, const ClosedList& closed,
                                        const QueryAttachment& graph, std::span<const Pose> goals, int kappa, Rng& rng) {
    require(!closed.empty(), "greedy_edges: closed list is empty");
    require(kappa >= 1, "greedy_edges: kappa must be >= 1");
    const auto want = static_cast<std::size_t>(kappa);
    std::vector<Action> out;
    std::set<VertexId> taken;
    const ClosedEntry* cur = closed.nearest(e_sel).first;
    while (cur && out.size() < want) {
        graph.for_each_edge(cur->vertex, [&](const RoadmapEdge& e) {
            if (out.size() >= want || taken.count(e.to)) return;
            const ClosedEntry* c = closed.find(e.to);
            if (!c) return;
            const double h = heuristic_h(graph.pose(e.to), closed);
            if (h < h_sel) {
                taken.insert(e.to);
                out.push_back(Action::pose(graph.pose(e.to), h));
            }
        });
        cur = cur->predecessor ? closed.find(*cur->predecessor) : nullptr;
    }
    if (out.size() < want && !goals.empty()) {
        std::vector<std::size_t> idx(goals.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        const std::size_t pad = std::min(want - out.size(), goals.size());
        for (std::size_t i = 0; i < pad; ++i) {
            std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
            out.push_back(Action::pose(goals[idx[i]], heuristic_h(goals[idx[i]], closed)));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Action& a, const Action& b) { return a.h < b.h; });
    return out;
}

/// One random control and, when goal configurations are known, one
/// C-space target drawn uniformly from them.
inline std::vector<Action> fallback_edges(std::span<const JointConfig> goal_configs, std::span<const double> goal_h,
                                          Rng& rng) {
    std::vector<Action> out{Action::random(rng.next())};
    if (!goal_configs.empty()) {
        const std::size_t i = rng.index(goal_configs.size());
        out.push_back(Action::goal_config(goal_configs[i], goal_h[i]));
    }
    return out;
}

struct TraceStep {
    std::uint64_t iteration = 0;
    std::size_t selected = 0;
    bool greedy_rule = false;               // selected by the h(q_new) < h(parent) rule
    std::optional<std::size_t> inserted;    // node added this iteration
    double h_new = 0.0;
    double h_parent = 0.0;
};

using PlanTrace = std::vector<TraceStep>;

/// The JIST anytime tree search.
class JistPlanner {
public:
    JistPlanner(const KinematicChain& chain, std::span<const Obstacle> scene, const ReachabilityRoadmap& roadmap,
                const DispIndex& roadmap_index, const PlannerParams& params)
        : chain_(chain), world_(scene), roadmap_(roadmap), index_(roadmap_index), p_(params) {
        p_.validate();
        require(roadmap.meta().chain_hash == chain_hash(chain), "jist_plan: roadmap was built for a different chain");
    }

    PlanResult plan(const PlanQuery& query, PlanTrace* trace = nullptr) {
        require(!query.goals.empty(), "jist_plan: goal set is empty");
        require(query.approach_targets.empty() || query.approach_targets.size() == query.goals.size(),
                "jist_plan: approach_targets must match goals");
        check_dims(chain_, query.q_start, "jist_plan");
        require(chain_.within_limits(query.q_start), "jist_plan: start configuration outside joint limits");
        require(!collide_config(chain_, query.q_start, world_), "jist_plan: start configuration in collision");

        PlanClock clock(p_.clock);
        Rng rng(p_.rng_seed);
        PlanResult res;
        const Pose e_start = fk(chain_, query.q_start);

        // Navigation function over the roadmap.
        const QueryAttachment graph(roadmap_, index_, e_start, query.goals);
        const ClosedList closed = msmo_astar(graph, world_, chain_.ee_body);
        res.stats.search_expansions = closed.stats().expansions;
        res.stats.closed_size = closed.size();
        clock.charge(closed.stats().pose_checks + closed.stats().expansions);
        auto h_of = [&](const Pose& e) { return heuristic_h(e, closed); };

        // Root node; a start already inside a goal is a zero-cost solution.
        nodes_.clear();
        sampler_ = SelectionSampler();
        goal_h_.clear();
        add_node(TreeNode{query.q_start, e_start, std::nullopt, Action{}, 0.0, h_of(e_start), std::nullopt});
        double best = std::numeric_limits<double>::infinity();
        std::optional<std::size_t> best_node;
        if (auto m = goal_check_pose(chain_.ee_hull, e_start, query.goals, p_.goal_tol)) {
            best = 0.0;
            best_node = 0;
            res.goal_index = m->index;
            res.goal_configs.push_back(query.q_start);
            goal_h_.push_back(nodes_[0].h);
            res.cost_history.push_back({clock.elapsed(), 0.0});
            if (p_.record_solutions) res.solutions.push_back(rebuild_path(0));
        }
        std::optional<std::size_t> q_new = 0;  // the root has no parent, so the first pick is sampled

        for (std::uint64_t it = 0; it < p_.max_iters && best > 0.0; ++it) {
            if (clock.elapsed() >= p_.time_budget) break;
            if (p_.stop_on_first_solution && best_node) break;
            ++res.stats.iterations;

            // Keep extending an improving child, otherwise sample by 1/(eps + g + h).
            std::size_t sel;
            bool greedy_rule = false;
            if (q_new && nodes_[*q_new].parent && nodes_[*q_new].h < nodes_[*nodes_[*q_new].parent].h) {
                sel = *q_new;
                greedy_rule = true;
            } else {
                sel = sampler_.sample(rng);
            }
            TraceStep step{it, sel, greedy_rule, std::nullopt, 0.0, 0.0};

            // Candidate edges are generated once per node and consumed in h order.
            auto& cand = nodes_[sel].cand;
            if (!cand) {
                cand = greedy_edges(nodes_[sel].ee, nodes_[sel].h, closed, graph, query.goals, p_.kappa, rng);
                ++res.stats.greedy_generations;
            }
            if (cand->empty()) {
                cand = fallback_edges(res.goal_configs, goal_h_, rng);
                ++res.stats.fallback_generations;
            }

            // Steer along the lowest-h remaining edge.
            const auto best_it = std::min_element(cand->begin(), cand->end(),
                                                  [](const Action& a, const Action& b) { return a.h < b.h; });
            const Action a = *best_it;
            cand->erase(best_it);
            const JointConfig q_sel = nodes_[sel].config;
            const Trajectory traj = steer_action(chain_, q_sel, a, p_.steer);
            ++res.stats.steer_calls;
            clock.charge(traj.work);
            q_new.reset();

            // Prune by bound or collision; a goal hit below the incumbent is a new solution.
            if (traj.size() < 2) {
                ++res.stats.no_progress;
            } else {
                const Pose& e_new = traj.ee_poses.back();
                const double g = nodes_[sel].g + traj.ee_path_cost;
                const double h = h_of(e_new);
                std::uint64_t checks = 0;
                if (bab_check(g, h, best, p_.bab)) {
                    ++res.stats.pruned_bab;
                } else if (!trajectory_free(chain_, traj, world_, p_.cc_resolution, &checks)) {
                    ++res.stats.pruned_cc;
                } else {
                    const std::size_t id = add_node(TreeNode{traj.back(), e_new, sel, a, g, h, std::nullopt});
                    q_new = id;
                    step.inserted = id;
                    step.h_new = h;
                    step.h_parent = nodes_[sel].h;
                    if (auto m = goal_check_pose(chain_.ee_hull, e_new, query.goals, p_.goal_tol)) {
                        res.goal_configs.push_back(traj.back());
                        goal_h_.push_back(h);
                        if (g < best) {
                            best = g;
                            best_node = id;
                            res.goal_index = m->index;
                            res.cost_history.push_back({clock.elapsed(), g});
                            if (p_.record_solutions) res.solutions.push_back(rebuild_path(id));
                        }
                    }
                }
                res.stats.collision_checks += checks;
                clock.charge(checks);
            }
            if (trace) trace->push_back(step);
        }

        res.stats.nodes = nodes_.size();
        if (best_node) {
            res.best_path = rebuild_path(*best_node);
            if (!query.approach_targets.empty()) {
                const Trajectory ap =
                    jplus_steer(chain_, res.best_path->back(), query.approach_targets[*res.goal_index], p_.steer);
                std::uint64_t checks = 0;
                if (ap.reached && trajectory_free(chain_, ap, world_, p_.cc_resolution, &checks))
                    res.approach_path = ap;
                res.stats.collision_checks += checks;
            }
        }
        res.stats.elapsed = clock.elapsed();
        return res;
    }

    const std::vector<TreeNode>& nodes() const { return nodes_; }

private:
    std::size_t add_node(TreeNode n) {
        sampler_.push(selection_weight(n.g, n.h, p_.selection_eps));
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    // Steering is deterministic, so edges are regenerated rather than stored.
    Trajectory rebuild_path(std::size_t leaf) const {
        std::vector<std::size_t> chain_ids;
        for (std::optional<std::size_t> v = leaf; v; v = nodes_[*v].parent) chain_ids.push_back(*v);
        std::reverse(chain_ids.begin(), chain_ids.end());
        TrajectoryBuilder b(chain_, p_.steer.waypoint_res);
        b.start(nodes_[chain_ids.front()].config, nodes_[chain_ids.front()].ee);
        Trajectory path = b.finish(true);
        for (std::size_t i = 1; i < chain_ids.size(); ++i) {
            const auto& n = nodes_[chain_ids[i]];
            const Trajectory edge = steer_action(chain_, nodes_[*n.parent].config, n.via, p_.steer);
            require(edge.back() == n.config, "jist_plan: edge regeneration diverged");
            append_trajectory(path, edge);
        }
        path.reached = true;
        return path;
    }

    const KinematicChain& chain_;
    CollisionWorld world_;
    const ReachabilityRoadmap& roadmap_;
    const DispIndex& index_;
    PlannerParams p_;
    std::vector<TreeNode> nodes_;
    SelectionSampler sampler_;
    std::vector<double> goal_h_;
};

inline PlanResult jist_plan(const KinematicChain& chain, std::span<const Obstacle> scene,
                            const ReachabilityRoadmap& roadmap, const DispIndex& roadmap_index, const PlanQuery& query,
                            const PlannerParams& params, PlanTrace* trace = nullptr) {
    JistPlanner planner(chain, scene, roadmap, roadmap_index, params);
    return planner.plan(query, trace);
}

inline PlanResult jist_plan(const KinematicChain& chain, std::span<const Obstacle> scene,
                            const ReachabilityRoadmap& roadmap, const PlanQuery& query, const PlannerParams& params,
                            PlanTrace* trace = nullptr) {
    const DispIndex index = roadmap.make_index();
    return jist_plan(chain, scene, roadmap, index, query, params, trace);
}

/// Keys as written by to_json; absent keys keep `base` values. `kappa` may
/// be "auto", meaning kappa_for_roadmap(roadmap_vertices).
inline PlannerParams planner_params_from_json(const json_io::Json& j, std::size_t roadmap_vertices,
                                              PlannerParams base = {}, const std::string& where = "planner") {
    using json_io::get_or;
    json_io::check_keys(j, {"N", "kappa", "goal_tol", "time_budget", "rng_seed", "selection_eps", "bab", "cc_resolution",
                            "clock", "stop_on_first_solution", "record_solutions", "steering"},
                        where);
    PlannerParams p = base;
    p.max_iters = get_or(j, "N", p.max_iters, where);
    if (j.contains("kappa") && j["kappa"].is_string()) {
        if (j["kappa"] != "auto") json_io::fail(where + ".kappa", "expected an integer or \"auto\"");
        p.kappa = kappa_for_roadmap(roadmap_vertices);
    } else {
        p.kappa = get_or(j, "kappa", p.kappa, where);
    }
    p.goal_tol = get_or(j, "goal_tol", p.goal_tol, where);
    p.time_budget = get_or(j, "time_budget", p.time_budget, where);
    p.rng_seed = get_or(j, "rng_seed", p.rng_seed, where);
    p.selection_eps = get_or(j, "selection_eps", p.selection_eps, where);
    if (j.contains("bab")) p.bab = parse_bab_mode(get_or<std::string>(j, "bab", "", where));
    p.cc_resolution = get_or(j, "cc_resolution", p.cc_resolution, where);
    if (j.contains("clock")) p.clock = parse_clock_mode(get_or<std::string>(j, "clock", "", where));
    p.stop_on_first_solution = get_or(j, "stop_on_first_solution", p.stop_on_first_solution, where);
    p.record_solutions = get_or(j, "record_solutions", p.record_solutions, where);
    if (j.contains("steering")) p.steer = steering_params_from_json(j["steering"]);
    p.validate();
    return p;
}

inline json_io::Json to_json(const PlannerParams& p) {
    return {{"N", p.max_iters},
            {"kappa", p.kappa},
            {"goal_tol", p.goal_tol},
            {"time_budget", p.time_budget},
            {"rng_seed", p.rng_seed},
            {"selection_eps", p.selection_eps},
            {"bab", to_string(p.bab)},
            {"cc_resolution", p.cc_resolution},
            {"clock", to_string(p.clock)},
            {"stop_on_first_solution", p.stop_on_first_solution},
            {"record_solutions", p.record_solutions},
            {"steering", to_json(p.steer)}};
}

}  // namespace jist
