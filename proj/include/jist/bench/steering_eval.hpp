#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "jist/bench/csv.hpp"
#include "jist/geometry/disp_index.hpp"
#include "jist/kinematics/robot_io.hpp"
#include "jist/planner/common.hpp"
#include "jist/scenes/scene.hpp"

// Steering methods under growing workspace clutter. Per clutter level: n
// collision-free states, k reachable poses, m (state, pose) pairs drawn from
// the l ≈ neighbor_fraction·k DISP-nearest poses of random states, then every
// method run on every pair.

namespace jist {

enum class SteerMethod { Local, Ik, Jacobian };

inline SteerMethod parse_steer_method(const std::string& s) {
    if (s == "local") return SteerMethod::Local;
    if (s == "ik") return SteerMethod::Ik;
    if (s == "jacobian") return SteerMethod::Jacobian;
    throw ContractError("unknown steering method '" + s + "' (expected local|ik|jacobian)");
}

inline std::string to_string(SteerMethod m) {
    switch (m) {
        case SteerMethod::Local: return "local";
        case SteerMethod::Ik: return "ik";
        case SteerMethod::Jacobian: return "jacobian";
    }
    return "";
}

struct SteeringEvalConfig {
    std::filesystem::path robot;  // used by the loader only
    std::vector<double> fractions{0.0, 0.05, 0.10, 0.15};
    std::size_t n = 1000;  // |X_free|
    std::size_t k = 500;   // |Q_reachable|
    std::size_t m = 500;   // evaluation pairs
    double neighbor_fraction = 0.25;
    std::size_t j = 5;     // picks per sampled state
    std::vector<SteerMethod> methods{SteerMethod::Local, SteerMethod::Ik, SteerMethod::Jacobian};
    std::uint64_t seed = 0;
    Aabb bounds{Vec3(0.25, -0.6, 0.0), Vec3(1.0, 0.6, 0.9)};  // clutter region in front of the arm
    std::vector<KeepOut> keep_out;
    double min_size = 0.04;
    double max_size = 0.12;
    double cc_resolution = kValidationResolution;
    std::size_t max_sample_attempts = 200000;  // per sample set
    int ik_restarts = 10;
    int velocity_pairs = 200;
    bool strip_end_effector = true;  // evaluate the bare arm
    SteeringParams steer;

    std::size_t neighbors() const {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(neighbor_fraction * static_cast<double>(k))));
    }

    void validate() const {
        require(!fractions.empty(), "eval_steering: no clutter fractions");
        for (std::size_t i = 0; i < fractions.size(); ++i) {
            require(fractions[i] >= 0.0 && fractions[i] <= 0.5, "eval_steering: fractions must lie in [0, 0.5]");
            for (std::size_t k2 = 0; k2 < i; ++k2) require(fractions[k2] != fractions[i], "eval_steering: duplicate fraction");
        }
        require(n >= 1 && k >= 1 && m >= 1 && j >= 1, "eval_steering: n, k, m, j must be >= 1");
        require(neighbor_fraction > 0.0 && neighbor_fraction <= 1.0, "eval_steering: neighbor_fraction must lie in (0, 1]");
        require(static_cast<double>(j) < neighbor_fraction * static_cast<double>(k),
                "eval_steering: j must be < neighbor_fraction * k");
        require(!methods.empty(), "eval_steering: no methods");
        require(cc_resolution > 0.0 && ik_restarts >= 1 && velocity_pairs >= 1 && max_sample_attempts >= 1,
                "eval_steering: resolution, restarts, velocity pairs and attempts must be positive");
        steer.validate();
    }
};

inline SteeringEvalConfig steering_eval_config_from_json(const json_io::Json& j, const std::filesystem::path& base_dir,
                                                         const std::string& where = "steering") {
    using namespace json_io;
    check_keys(j, {"robot", "fractions", "n", "k", "m", "neighbor_fraction", "j", "methods", "seed", "bounds", "keep_out",
                   "min_size", "max_size", "cc_resolution", "max_sample_attempts", "ik_restarts", "velocity_pairs",
                   "strip_end_effector", "steering"},
               where);
    SteeringEvalConfig c;
    const Json& r = field(j, "robot", where);
    if (!r.is_string()) fail(where + ".robot", "expected a path string");
    c.robot = r.get<std::string>();
    if (c.robot.is_relative()) c.robot = base_dir / c.robot;
    c.fractions = get_or(j, "fractions", c.fractions, where);
    c.n = get_or(j, "n", c.n, where);
    c.k = get_or(j, "k", c.k, where);
    c.m = get_or(j, "m", c.m, where);
    c.neighbor_fraction = get_or(j, "neighbor_fraction", c.neighbor_fraction, where);
    c.j = get_or(j, "j", c.j, where);
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& s : get_or<std::vector<std::string>>(j, "methods", {}, where)) c.methods.push_back(parse_steer_method(s));
    }
    c.seed = get_or(j, "seed", c.seed, where);
    if (j.contains("bounds")) {
        const Json& b = j["bounds"];
        c.bounds = {vec3(field(b, "min", where + ".bounds"), where + ".bounds.min"),
                    vec3(field(b, "max", where + ".bounds"), where + ".bounds.max")};
    }
    if (j.contains("keep_out")) {
        c.keep_out.clear();
        const Json& ko = j["keep_out"];
        if (!ko.is_array()) fail(where + ".keep_out", "expected an array");
        for (std::size_t i = 0; i < ko.size(); ++i) {
            const std::string w = where + ".keep_out[" + std::to_string(i) + "]";
            c.keep_out.push_back({vec3(field(ko[i], "center", w), w + ".center"), number(field(ko[i], "radius", w), w + ".radius")});
        }
    }
    c.min_size = get_or(j, "min_size", c.min_size, where);
    c.max_size = get_or(j, "max_size", c.max_size, where);
    c.cc_resolution = get_or(j, "cc_resolution", c.cc_resolution, where);
    c.max_sample_attempts = get_or(j, "max_sample_attempts", c.max_sample_attempts, where);
    c.ik_restarts = get_or(j, "ik_restarts", c.ik_restarts, where);
    c.velocity_pairs = get_or(j, "velocity_pairs", c.velocity_pairs, where);
    c.strip_end_effector = get_or(j, "strip_end_effector", c.strip_end_effector, where);
    if (j.contains("steering")) c.steer = steering_params_from_json(j["steering"]);
    c.validate();
    return c;
}

inline SteeringEvalConfig load_steering_eval_config(const std::filesystem::path& path) {
    return steering_eval_config_from_json(parse_json_file(path), path.parent_path(), path.filename().string());
}

struct SteeringOutcome {
    bool reached = false;
    bool collision_free = false;
    double time_s = 0.0;   // steering wall time, IK restarts included, collision checking excluded
    std::uint64_t work = 0;
    double path_length = 0.0;      // summed C-space distances
    double ee_displacement = 0.0;  // summed DISP
    double final_disp = 0.0;       // DISP from the last waypoint to the target

    bool success() const { return reached && collision_free; }
};

/// Runs one method from `x` toward `target`. Success needs the target
/// reached within the steering tolerance and a collision-free trajectory.
inline SteeringOutcome run_steering_method(SteerMethod method, const KinematicChain& chain, const CollisionWorld& world,
                                           const JointConfig& x, const Pose& target, double ee_velocity_bound,
                                           const SteeringEvalConfig& c, std::uint64_t ik_seed) {
    SteeringOutcome o;
    const auto t0 = std::chrono::steady_clock::now();
    Trajectory traj;
    bool have_traj = true;
    switch (method) {
        case SteerMethod::Jacobian:
            traj = jplus_steer(chain, x, target, c.steer);
            break;
        case SteerMethod::Ik:
            traj = ik_steer(chain, x, target, ee_velocity_bound, c.steer);
            break;
        case SteerMethod::Local: {
            const auto goal = solve_ik(chain, target, x, c.ik_restarts, ik_seed, c.steer, &o.work);
            if (goal) {
                traj = cspace_steer(chain, x, *goal, c.steer);
            } else {
                have_traj = false;
            }
            break;
        }
    }
    o.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!have_traj) {
        o.final_disp = disp_distance(chain.ee_hull, fk(chain, x), target);
        return o;
    }
    o.work += traj.work;
    for (std::size_t i = 1; i < traj.size(); ++i) o.path_length += (traj.configs[i] - traj.configs[i - 1]).norm();
    o.ee_displacement = traj.ee_path_cost;
    o.final_disp = disp_distance(chain.ee_hull, traj.ee_poses.back(), target);
    o.reached = traj.reached && o.final_disp <= c.steer.goal_tol + 1e-12;
    o.collision_free = trajectory_free(chain, traj, world, c.cc_resolution);
    return o;
}

struct SteeringPairRecord {
    double fraction = 0.0;
    double achieved_fraction = 0.0;
    std::size_t pair = 0;
    std::size_t state = 0;  // index into X_free
    std::size_t pose = 0;   // index into Q_reachable
    SteerMethod method = SteerMethod::Jacobian;
    SteeringOutcome outcome;
};

struct SteeringSummaryRow {
    std::string method;
    double fraction = 0.0;
    std::string metric;  // success_rate | computation_time | path_length | ee_displacement
    std::optional<double> value, ci_low, ci_high;
    std::size_t n = 0;
};

struct SteeringEvalResult {
    std::vector<SteeringPairRecord> pairs;
    std::vector<double> achieved_fractions;  // per configured fraction
    double ee_velocity_bound = 0.0;
    std::vector<SteeringSummaryRow> summary;
    std::vector<std::pair<SteerMethod, double>> spearman;  // success rate vs fraction

    std::vector<double> success_rates(SteerMethod m) const {
        std::vector<double> out;
        for (const auto& r : summary)
            if (r.method == to_string(m) && r.metric == "success_rate") out.push_back(r.value.value_or(0.0));
        return out;
    }
};

namespace detail {

inline std::vector<JointConfig> sample_free(const KinematicChain& chain, const CollisionWorld& world, std::size_t count,
                                            std::uint64_t seed, std::size_t max_attempts, const char* what, double fraction) {
    Rng rng(seed);
    std::vector<JointConfig> out;
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (attempts++ >= max_attempts)
            throw ContractError(std::string("eval_steering: only ") + std::to_string(out.size()) + " of " +
                                std::to_string(count) + " collision-free " + what + " after " + std::to_string(max_attempts) +
                                " attempts at clutter fraction " + csv::num(fraction));
        JointConfig q = sample_config(chain, rng);
        if (!collide_config(chain, q, world)) out.push_back(std::move(q));
    }
    return out;
}

inline std::vector<SteeringSummaryRow> summarize(const std::vector<SteeringPairRecord>& pairs, const SteeringEvalConfig& c) {
    std::vector<SteeringSummaryRow> out;
    for (SteerMethod m : c.methods)
        for (double f : c.fractions) {
            std::vector<double> succ, time, len, disp;
            for (const auto& p : pairs) {
                if (p.method != m || p.fraction != f) continue;
                succ.push_back(p.outcome.success() ? 1.0 : 0.0);
                time.push_back(p.outcome.time_s);
                if (p.outcome.success()) {
                    len.push_back(p.outcome.path_length);
                    disp.push_back(p.outcome.ee_displacement);
                }
            }
            auto add = [&](const char* metric, const std::vector<double>& xs) {
                SteeringSummaryRow r{to_string(m), f, metric, std::nullopt, std::nullopt, std::nullopt, 0};
                if (const auto s = stats::mean_ci(xs)) {
                    r.value = s->mean;
                    r.ci_low = s->lo;
                    r.ci_high = s->hi;
                    r.n = s->n;
                }
                out.push_back(r);
            };
            add("success_rate", succ);
            add("computation_time", time);
            add("path_length", len);
            add("ee_displacement", disp);
        }
    return out;
}

}  // namespace detail

/// Every level reuses the same seeds: clutter scenes nest (each denser scene
/// extends the sparser one), and samples and pairs come from common random
/// streams, so differences between levels reflect the clutter.
inline SteeringEvalResult eval_steering(const KinematicChain& arm, const SteeringEvalConfig& c, std::ostream* log = nullptr) {
    c.validate();
    KinematicChain chain = arm;
    if (c.strip_end_effector) chain.ee_body.clear();
    SteeringEvalResult res;
    res.ee_velocity_bound = estimate_ee_velocity_bound(chain, c.velocity_pairs, mix_seed(c.seed, 7), c.steer);
    const std::size_t l = c.neighbors();
    for (std::size_t fi = 0; fi < c.fractions.size(); ++fi) {
        const double f = c.fractions[fi];
        ClutterOptions co;
        co.bounds = c.bounds;
        co.fraction = f;
        co.min_size = c.min_size;
        co.max_size = c.max_size;
        co.seed = mix_seed(c.seed, 1);
        co.keep_out = c.keep_out;
        const ClutterResult clutter = generate_clutter_scene(co);
        res.achieved_fractions.push_back(clutter.achieved_fraction);
        const CollisionWorld world(clutter.scene.obstacles);

        const auto x_free = detail::sample_free(chain, world, c.n, mix_seed(c.seed, 100), c.max_sample_attempts,
                                                "states", f);
        // Reachable means kinematically reachable: poses of self-collision-free
        // configurations, not filtered by the clutter.
        const auto q_src = detail::sample_free(chain, CollisionWorld(std::span<const Obstacle>{}), c.k, mix_seed(c.seed, 200),
                                               c.max_sample_attempts, "reachable poses", f);
        std::vector<std::pair<DispIndex::Id, Pose>> items;
        for (std::size_t i = 0; i < q_src.size(); ++i) items.emplace_back(static_cast<DispIndex::Id>(i), fk(chain, q_src[i]));
        const DispIndex index(chain.ee_hull, items);

        Rng rng(mix_seed(c.seed, 300));
        std::size_t pair = 0;
        while (pair < c.m) {
            const std::size_t si = rng.index(x_free.size());
            auto near = index.knn(fk(chain, x_free[si]), l);
            // Partial Fisher-Yates: j distinct picks among the l nearest.
            for (std::size_t p = 0; p < c.j && p < near.size() && pair < c.m; ++p, ++pair) {
                std::swap(near[p], near[p + rng.index(near.size() - p)]);
                const std::size_t pi = near[p].id;
                for (SteerMethod m : c.methods) {
                    SteeringPairRecord rec;
                    rec.fraction = f;
                    rec.achieved_fraction = clutter.achieved_fraction;
                    rec.pair = pair;
                    rec.state = si;
                    rec.pose = pi;
                    rec.method = m;
                    rec.outcome = run_steering_method(m, chain, world, x_free[si], items[pi].second, res.ee_velocity_bound,
                                                      c, mix_seed(c.seed, 1000 + pair));
                    res.pairs.push_back(rec);
                }
            }
        }
        if (log) {
            *log << "fraction " << f << " (achieved " << csv::num(clutter.achieved_fraction) << ", "
                 << clutter.scene.obstacles.size() << " obstacles):";
            for (SteerMethod m : c.methods) {
                std::size_t ok = 0, tot = 0;
                for (const auto& r : res.pairs)
                    if (r.fraction == f && r.method == m) {
                        ++tot;
                        ok += r.outcome.success();
                    }
                *log << " " << to_string(m) << "=" << csv::num(static_cast<double>(ok) / static_cast<double>(tot));
            }
            *log << "\n";
        }
    }
    res.summary = detail::summarize(res.pairs, c);
    for (SteerMethod m : c.methods) res.spearman.emplace_back(m, stats::spearman(c.fractions, res.success_rates(m)));
    return res;
}

inline std::string steering_pairs_csv(const SteeringEvalResult& r) {
    std::string out = csv::join({"fraction", "achieved_fraction", "pair", "state", "pose", "method", "success", "reached",
                                 "collision_free", "computation_time", "work", "path_length", "ee_displacement",
                                 "final_disp"});
    for (const auto& p : r.pairs) {
        const auto& o = p.outcome;
        out += csv::join({csv::num(p.fraction), csv::num(p.achieved_fraction), std::to_string(p.pair), std::to_string(p.state),
                          std::to_string(p.pose), to_string(p.method), o.success() ? "1" : "0", o.reached ? "1" : "0",
                          o.collision_free ? "1" : "0", csv::num(o.time_s), std::to_string(o.work), csv::num(o.path_length),
                          csv::num(o.ee_displacement), csv::num(o.final_disp)});
    }
    return out;
}

inline std::string steering_summary_csv(const SteeringEvalResult& r) {
    std::string out = csv::join({"method", "fraction", "metric", "value", "ci_low", "ci_high", "n"});
    for (const auto& s : r.summary)
        out += csv::join({s.method, csv::num(s.fraction), s.metric, csv::num(s.value), csv::num(s.ci_low), csv::num(s.ci_high),
                          std::to_string(s.n)});
    return out;
}

inline json_io::Json steering_trend_json(const SteeringEvalResult& r, const SteeringEvalConfig& c) {
    using json_io::Json;
    Json methods = Json::object();
    for (const auto& [m, rho] : r.spearman)
        methods[to_string(m)] = {{"success_rates", r.success_rates(m)},
                                 {"spearman_rho", std::isfinite(rho) ? Json(rho) : Json(nullptr)}};
    return {{"fractions", c.fractions},
            {"achieved_fractions", r.achieved_fractions},
            {"ee_velocity_bound", r.ee_velocity_bound},
            {"methods", methods}};
}

inline void write_steering_outputs(const SteeringEvalResult& r, const SteeringEvalConfig& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "steering_pairs.csv", steering_pairs_csv(r));
    write_text_file(dir / "steering_summary.csv", steering_summary_csv(r));
    write_text_file(dir / "steering_trend.json", steering_trend_json(r, c).dump(2) + "\n");
}

}  // namespace jist
