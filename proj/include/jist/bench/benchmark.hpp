#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "jist/baselines/grasp_rrt.hpp"
#include "jist/bench/csv.hpp"
#include "jist/kinematics/robot_io.hpp"
#include "jist/planner/jist.hpp"
#include "jist/roadmap/roadmap.hpp"
#include "jist/scenes/scene.hpp"

// Benchmark harness: planners × scenes × seeded trials, reported as success
// rate and best cost at fixed time buckets.

namespace jist {

enum class PlannerAlgo { Jist, GraspRrt };

inline PlannerAlgo parse_planner_algo(const std::string& s) {
    if (s == "jist") return PlannerAlgo::Jist;
    if (s == "grasp-rrt" || s == "grasp_rrt") return PlannerAlgo::GraspRrt;
    throw ContractError("unknown planner '" + s + "' (expected jist|grasp-rrt)");
}

inline std::string to_string(PlannerAlgo a) { return a == PlannerAlgo::Jist ? "jist" : "grasp-rrt"; }

struct BenchPlanner {
    std::string name;
    PlannerAlgo algo = PlannerAlgo::Jist;
    json_io::Json params = json_io::Json::object();  // planner parameter overrides
    std::optional<double> time_budget;               // overrides the benchmark budget
    std::vector<std::string> scenes;                 // empty = every scene
};

struct RoadmapSource {
    std::optional<std::filesystem::path> path;  // loaded if present, else built and saved there
    std::size_t vertices = 25000;
    std::uint64_t seed = 1;
};

struct BenchmarkConfig {
    std::filesystem::path robot;
    std::filesystem::path start;
    std::filesystem::path grasps;
    RoadmapSource roadmap;
    double pregrasp_offset = 0.02;
    std::vector<std::filesystem::path> scenes;
    std::vector<BenchPlanner> planners;
    int trials = 50;
    double time_budget = 30.0;
    double interval = 1.0;
    std::uint64_t seed = 0;
    PlanClock::Mode clock = PlanClock::Mode::Wall;
    bool stop_on_first_solution = false;

    void validate() const {
        require(trials >= 1, "benchmark: trials must be >= 1");
        require(time_budget > 0.0, "benchmark: time_budget must be positive");
        require(interval > 0.0 && interval <= time_budget, "benchmark: interval must lie in (0, time_budget]");
        require(!scenes.empty(), "benchmark: no scenes");
        require(!planners.empty(), "benchmark: no planners");
        std::set<std::string> names;
        for (const auto& p : planners) {
            require(csv::valid_name(p.name), "benchmark: planner name '" + p.name + "' is empty or has CSV metacharacters");
            require(names.insert(p.name).second, "benchmark: duplicate planner name '" + p.name + "'");
            require(!p.time_budget || (*p.time_budget > 0.0 && interval <= *p.time_budget),
                    "benchmark: planner '" + p.name + "' time_budget must be positive and >= interval");
        }
    }
};

/// Relative paths resolve against `base_dir`.
inline BenchmarkConfig benchmark_config_from_json(const json_io::Json& j, const std::filesystem::path& base_dir,
                                                  const std::string& where = "benchmark") {
    using namespace json_io;
    check_keys(j, {"robot", "start", "grasps", "roadmap", "pregrasp_offset", "scenes", "planners", "trials", "time_budget",
                   "interval", "seed", "clock", "stop_on_first_solution"},
               where);
    auto path_of = [&](const Json& v, const std::string& w) {
        if (!v.is_string()) fail(w, "expected a path string");
        const std::filesystem::path p = v.get<std::string>();
        return p.is_absolute() ? p : base_dir / p;
    };
    BenchmarkConfig c;
    c.robot = path_of(field(j, "robot", where), where + ".robot");
    c.start = path_of(field(j, "start", where), where + ".start");
    c.grasps = path_of(field(j, "grasps", where), where + ".grasps");
    if (j.contains("roadmap")) {
        const Json& r = j["roadmap"];
        check_keys(r, {"path", "vertices", "seed"}, where + ".roadmap");
        if (r.contains("path")) c.roadmap.path = path_of(r["path"], where + ".roadmap.path");
        c.roadmap.vertices = get_or(r, "vertices", c.roadmap.vertices, where + ".roadmap");
        c.roadmap.seed = get_or(r, "seed", c.roadmap.seed, where + ".roadmap");
    }
    c.pregrasp_offset = get_or(j, "pregrasp_offset", c.pregrasp_offset, where);
    const Json& sc = field(j, "scenes", where);
    if (!sc.is_array()) fail(where + ".scenes", "expected an array of paths");
    for (std::size_t i = 0; i < sc.size(); ++i) c.scenes.push_back(path_of(sc[i], where + ".scenes[" + std::to_string(i) + "]"));
    const Json& pl = field(j, "planners", where);
    if (!pl.is_array()) fail(where + ".planners", "expected an array");
    for (std::size_t i = 0; i < pl.size(); ++i) {
        const std::string w = where + ".planners[" + std::to_string(i) + "]";
        check_keys(pl[i], {"name", "algo", "params", "time_budget", "scenes"}, w);
        BenchPlanner p;
        p.algo = parse_planner_algo(get_or<std::string>(pl[i], "algo", "", w));
        p.name = get_or<std::string>(pl[i], "name", to_string(p.algo), w);
        if (pl[i].contains("params")) p.params = pl[i]["params"];
        if (pl[i].contains("time_budget")) p.time_budget = get_or(pl[i], "time_budget", 0.0, w);
        p.scenes = get_or(pl[i], "scenes", p.scenes, w);
        c.planners.push_back(std::move(p));
    }
    c.trials = get_or(j, "trials", c.trials, where);
    c.time_budget = get_or(j, "time_budget", c.time_budget, where);
    c.interval = get_or(j, "interval", c.interval, where);
    c.seed = get_or(j, "seed", c.seed, where);
    if (j.contains("clock")) c.clock = parse_clock_mode(get_or<std::string>(j, "clock", "", where));
    c.stop_on_first_solution = get_or(j, "stop_on_first_solution", c.stop_on_first_solution, where);
    c.validate();
    return c;
}

inline BenchmarkConfig load_benchmark_config(const std::filesystem::path& path) {
    return benchmark_config_from_json(parse_json_file(path), path.parent_path(), path.filename().string());
}

/// One scene ready to plan in. A scene without a query is infeasible for
/// every trial, with `infeasible_reason` saying why.
struct BenchScene {
    std::string name;
    std::vector<Obstacle> obstacles;
    std::optional<PlanQuery> query;
    std::string infeasible_reason;
};

struct BenchmarkSetup {
    KinematicChain chain;
    std::optional<ReachabilityRoadmap> roadmap;  // required by JIST entries
    std::vector<BenchScene> scenes;
    std::vector<BenchPlanner> planners;
    int trials = 1;
    double time_budget = 30.0;
    double interval = 1.0;
    std::uint64_t seed = 0;
    PlanClock::Mode clock = PlanClock::Mode::Wall;
    bool stop_on_first_solution = false;
};

/// Loads every referenced file, builds pre-grasp goal sets and the roadmap.
inline BenchmarkSetup prepare_benchmark(const BenchmarkConfig& c, std::ostream* log = nullptr) {
    c.validate();
    BenchmarkSetup s;
    s.chain = load_robot(c.robot);
    const JointConfig q0 = load_joint_config(c.start);
    check_dims(s.chain, q0, "benchmark start");
    const GraspSet grasps = load_grasp_set(c.grasps);
    std::set<std::string> names;
    for (const auto& path : c.scenes) {
        const Scene scene = load_scene(path);
        BenchScene b;
        b.name = scene.name.empty() ? path.stem().string() : scene.name;
        require(csv::valid_name(b.name), "benchmark: scene name '" + b.name + "' is empty or has CSV metacharacters");
        require(names.insert(b.name).second, "benchmark: duplicate scene name '" + b.name + "'");
        b.obstacles = scene.collision_obstacles();
        try {
            require(scene.target.has_value(), "scene has no target object");
            require(scene.target->id == grasps.object_id, "grasp set is for object '" + grasps.object_id + "'");
            require(!collide_config(s.chain, q0, b.obstacles), "start configuration in collision");
            const GoalSpec goals = make_pregrasp_goals(world_grasps(grasps, scene.target->pose), c.pregrasp_offset,
                                                       s.chain.ee_body, b.obstacles);
            b.query = PlanQuery{q0, goals.goal_poses, goals.final_poses};
        } catch (const ContractError& e) {
            b.infeasible_reason = e.what();
        }
        s.scenes.push_back(std::move(b));
    }
    for (const auto& p : c.planners)
        for (const auto& n : p.scenes) require(names.count(n), "benchmark: planner '" + p.name + "' names unknown scene '" + n + "'");
    s.planners = c.planners;
    s.trials = c.trials;
    s.time_budget = c.time_budget;
    s.interval = c.interval;
    s.seed = c.seed;
    s.clock = c.clock;
    s.stop_on_first_solution = c.stop_on_first_solution;

    const bool need_roadmap =
        std::any_of(c.planners.begin(), c.planners.end(), [](const BenchPlanner& p) { return p.algo == PlannerAlgo::Jist; });
    if (need_roadmap) {
        const auto& src = c.roadmap;
        if (src.path && std::filesystem::exists(*src.path)) {
            if (log) *log << "loading roadmap " << src.path->string() << "\n";
            s.roadmap = load_roadmap(*src.path, chain_hash(s.chain));
        } else {
            if (log) *log << "building roadmap n=" << src.vertices << " seed=" << src.seed << "\n";
            s.roadmap = build_roadmap(s.chain, src.vertices, src.seed);
            if (src.path) save_roadmap(*s.roadmap, *src.path);
        }
    }
    return s;
}

enum class TrialFailure { None, Timeout, Infeasible, Error };

inline std::string to_string(TrialFailure f) {
    switch (f) {
        case TrialFailure::None: return "";
        case TrialFailure::Timeout: return "timeout";
        case TrialFailure::Infeasible: return "infeasible";
        case TrialFailure::Error: return "error";
    }
    return "";
}

struct TrialRecord {
    std::string planner;
    std::string scene;
    int trial = 0;
    std::uint64_t seed = 0;
    double budget = 0.0;
    bool solved = false;
    TrialFailure failure = TrialFailure::None;
    std::string message;  // exception text or infeasibility reason
    std::vector<CostSample> history;
    PlanStats stats;
    double wall_seconds = 0.0;  // harness-measured, not deterministic

    std::optional<double> time_to_first() const {
        if (history.empty()) return std::nullopt;
        return history.front().t;
    }
    double final_cost() const { return history.empty() ? std::numeric_limits<double>::infinity() : history.back().cost; }
    /// Best cost known at time t, if any solution was reported by then.
    std::optional<double> cost_at(double t) const {
        std::optional<double> c;
        for (const auto& h : history)
            if (h.t <= t) c = h.cost;
        return c;
    }
};

/// Bucket times interval, 2·interval, ... up to and including the budget.
inline std::vector<double> bucket_times(double budget, double interval) {
    require(interval > 0.0 && interval <= budget, "bucket_times: interval must lie in (0, budget]");
    std::vector<double> out;
    const auto k = static_cast<std::size_t>(std::floor(budget / interval + 1e-9));
    for (std::size_t i = 1; i <= k; ++i) out.push_back(static_cast<double>(i) * interval);
    if (out.empty() || out.back() < budget - 1e-9) out.push_back(budget);
    return out;
}

struct BucketRow {
    std::string planner;
    std::string scene;
    double t = 0.0;
    int trials = 0;
    int successes = 0;
    std::optional<double> mean_cost;  // over trials solved by t

    double success_rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};

struct BenchmarkResult {
    std::vector<TrialRecord> trials;  // ordered by planner, scene, trial
    std::vector<BucketRow> buckets;
    double interval = 1.0;

    std::vector<const TrialRecord*> cell(const std::string& planner, const std::string& scene) const {
        std::vector<const TrialRecord*> out;
        for (const auto& t : trials)
            if (t.planner == planner && t.scene == scene) out.push_back(&t);
        return out;
    }
    const BucketRow* bucket(const std::string& planner, const std::string& scene, double t) const {
        for (const auto& b : buckets)
            if (b.planner == planner && b.scene == scene && std::abs(b.t - t) < 1e-9) return &b;
        return nullptr;
    }
};

namespace detail {

inline PlanResult run_planner(const BenchmarkSetup& s, const DispIndex* index, const BenchPlanner& p, const BenchScene& sc,
                              std::uint64_t seed, double budget) {
    const std::string where = "planners." + p.name + ".params";
    if (p.algo == PlannerAlgo::Jist) {
        require(s.roadmap && index, "benchmark: JIST needs a roadmap");
        PlannerParams base;
        base.time_budget = budget;
        base.clock = s.clock;
        base.stop_on_first_solution = s.stop_on_first_solution;
        PlannerParams pp = planner_params_from_json(p.params, s.roadmap->size(), base, where);
        pp.kappa = p.params.contains("kappa") ? pp.kappa : kappa_for_roadmap(s.roadmap->size());
        pp.rng_seed = seed;
        pp.time_budget = budget;
        return jist_plan(s.chain, sc.obstacles, *s.roadmap, *index, *sc.query, pp);
    }
    RRTParams base;
    base.time_budget = budget;
    base.clock = s.clock;
    RRTParams rp = rrt_params_from_json(p.params, base, where);
    rp.rng_seed = seed;
    rp.time_budget = budget;
    return grasp_rrt(s.chain, sc.obstacles, *sc.query, rp);
}

}  // namespace detail

/// Runs every (planner, scene, trial) cell serially. Trial i of every cell
/// uses seed base + i. Planner exceptions become `error` rows and the run
/// continues.
inline BenchmarkResult run_benchmark(const BenchmarkSetup& s, std::ostream* log = nullptr) {
    require(s.trials >= 1, "benchmark: trials must be >= 1");
    std::optional<DispIndex> index;
    if (s.roadmap) index = s.roadmap->make_index();
    BenchmarkResult out;
    out.interval = s.interval;
    for (const auto& p : s.planners) {
        const double budget = p.time_budget.value_or(s.time_budget);
        const std::vector<double> ts = bucket_times(budget, s.interval);
        for (const auto& sc : s.scenes) {
            if (!p.scenes.empty() && std::find(p.scenes.begin(), p.scenes.end(), sc.name) == p.scenes.end()) continue;
            const std::size_t first = out.trials.size();
            for (int i = 0; i < s.trials; ++i) {
                TrialRecord r;
                r.planner = p.name;
                r.scene = sc.name;
                r.trial = i;
                r.seed = s.seed + static_cast<std::uint64_t>(i);
                r.budget = budget;
                const auto t0 = std::chrono::steady_clock::now();
                if (!sc.query) {
                    r.failure = TrialFailure::Infeasible;
                    r.message = sc.infeasible_reason;
                } else {
                    try {
                        const PlanResult res = detail::run_planner(s, index ? &*index : nullptr, p, sc, r.seed, budget);
                        r.solved = res.solved();
                        r.history = res.cost_history;
                        r.stats = res.stats;
                        if (!r.solved) r.failure = TrialFailure::Timeout;
                    } catch (const std::exception& e) {
                        r.failure = TrialFailure::Error;
                        r.message = e.what();
                    }
                }
                r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (log)
                    *log << p.name << " " << sc.name << " trial " << i << ": "
                         << (r.solved ? "solved t=" + csv::num(*r.time_to_first()) + " cost=" + csv::num(r.final_cost())
                                      : to_string(r.failure) + (r.message.empty() ? "" : " (" + r.message + ")"))
                         << "\n";
                out.trials.push_back(std::move(r));
            }
            for (double t : ts) {
                BucketRow b{p.name, sc.name, t, s.trials, 0, std::nullopt};
                std::vector<double> costs;
                for (std::size_t k = first; k < out.trials.size(); ++k)
                    if (const auto c = out.trials[k].cost_at(t)) costs.push_back(*c);
                b.successes = static_cast<int>(costs.size());
                if (const auto m = stats::mean_ci(costs)) b.mean_cost = m->mean;
                out.buckets.push_back(b);
            }
        }
    }
    return out;
}

inline std::string trials_csv(const BenchmarkResult& r) {
    std::string out = csv::join({"planner", "scene", "trial", "seed", "solved", "failure", "time_to_first", "final_cost",
                                 "iterations", "nodes", "collision_checks", "elapsed"});
    for (const auto& t : r.trials)
        out += csv::join({t.planner, t.scene, std::to_string(t.trial), std::to_string(t.seed), t.solved ? "1" : "0",
                          to_string(t.failure), csv::num(t.time_to_first()), csv::num(t.final_cost()),
                          std::to_string(t.stats.iterations), std::to_string(t.stats.nodes),
                          std::to_string(t.stats.collision_checks), csv::num(t.stats.elapsed)});
    return out;
}

inline std::string buckets_csv(const BenchmarkResult& r) {
    std::string out = csv::join({"planner", "scene", "t", "trials", "successes", "success_rate", "mean_cost"});
    for (const auto& b : r.buckets)
        out += csv::join({b.planner, b.scene, csv::num(b.t), std::to_string(b.trials), std::to_string(b.successes),
                          csv::num(b.success_rate()), csv::num(b.mean_cost)});
    return out;
}

/// Long format: one row per trial per bucket.
inline std::string curves_csv(const BenchmarkResult& r) {
    std::string out = csv::join({"planner", "scene", "trial", "t", "solved", "cost"});
    for (const auto& t : r.trials)
        for (double bt : bucket_times(t.budget, r.interval)) {
            const auto c = t.cost_at(bt);
            out += csv::join({t.planner, t.scene, std::to_string(t.trial), csv::num(bt), c ? "1" : "0", csv::num(c)});
        }
    return out;
}

/// Harness wall time and failure messages; kept apart from the
/// deterministic tables.
inline std::string wall_times_csv(const BenchmarkResult& r) {
    std::string out = csv::join({"planner", "scene", "trial", "wall_seconds", "message"});
    for (const auto& t : r.trials) {
        std::string msg = t.message;
        for (char& ch : msg)
            if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') ch = ';';
        out += csv::join({t.planner, t.scene, std::to_string(t.trial), csv::num(t.wall_seconds), msg});
    }
    return out;
}

inline void write_benchmark_outputs(const BenchmarkResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "trials.csv", trials_csv(r));
    write_text_file(dir / "buckets.csv", buckets_csv(r));
    write_text_file(dir / "curves.csv", curves_csv(r));
    write_text_file(dir / "wall_times.csv", wall_times_csv(r));
}

// ---------------------------------------------------------------------------
// Report: per-bucket means and 95% intervals from one or more curves.csv.

struct ReportRow {
    std::string planner;
    std::string scene;
    double t = 0.0;
    std::string metric;  // success_rate | mean_cost
    std::optional<double> value, ci_low, ci_high;
    std::size_t n = 0;
};

struct Report {
    std::vector<ReportRow> rows;  // ordered by planner, scene, t, metric
    json_io::Json summary;
};

/// Aggregates curves.csv tables. success_rate averages the 0/1 solved flags
/// over all trials; mean_cost averages cost over solved trials only.
inline Report build_report(const std::vector<csv::Table>& tables, const std::vector<std::string>& names) {
    struct Acc {
        std::vector<double> solved, cost;
    };
    std::map<std::tuple<std::string, std::string, double>, Acc> cells;
    for (std::size_t k = 0; k < tables.size(); ++k) {
        const auto& tb = tables[k];
        const std::string& w = names[k];
        const auto cp = tb.column("planner", w), cs = tb.column("scene", w), ct = tb.column("t", w),
                   cv = tb.column("solved", w), cc = tb.column("cost", w);
        tb.column("trial", w);
        for (std::size_t i = 0; i < tb.rows.size(); ++i) {
            const auto& row = tb.rows[i];
            const std::string rw = w + " row " + std::to_string(i + 1);
            if (row[cp].empty() || row[cs].empty()) throw FormatError(rw + ": empty planner or scene");
            Acc& a = cells[{row[cp], row[cs], csv::parse_required(row[ct], rw + " t")}];
            const bool solved = csv::parse_bool(row[cv], rw + " solved");
            a.solved.push_back(solved ? 1.0 : 0.0);
            const auto cost = csv::parse_num(row[cc], rw + " cost");
            if (solved != cost.has_value()) throw FormatError(rw + ": cost must be present exactly when solved");
            if (cost) a.cost.push_back(*cost);
        }
    }
    Report rep;
    using json_io::Json;
    Json series = Json::array();
    std::map<std::pair<std::string, std::string>, Json> last;
    auto opt = [](std::optional<double> v) { return v ? Json(*v) : Json(nullptr); };
    for (const auto& [key, a] : cells) {
        const auto& [planner, scene, t] = key;
        const auto sr = stats::mean_ci(a.solved);
        const auto mc = stats::mean_ci(a.cost);
        ReportRow r1{planner, scene, t, "success_rate", sr->mean, sr->lo, sr->hi, sr->n};
        ReportRow r2{planner, scene, t, "mean_cost", std::nullopt, std::nullopt, std::nullopt, 0};
        if (mc) r2 = {planner, scene, t, "mean_cost", mc->mean, mc->lo, mc->hi, mc->n};
        for (const auto* r : {&r1, &r2}) {
            series.push_back({{"planner", planner}, {"scene", scene}, {"t", t}, {"metric", r->metric},
                              {"value", opt(r->value)}, {"ci_low", opt(r->ci_low)}, {"ci_high", opt(r->ci_high)},
                              {"n", r->n}});
            rep.rows.push_back(*r);
        }
        last[{planner, scene}] = {{"planner", planner}, {"scene", scene}, {"t", t}, {"trials", sr->n},
                                  {"success_rate", sr->mean}, {"mean_cost", opt(r2.value)}};
    }
    Json final_cells = Json::array();
    for (const auto& [k, v] : last) final_cells.push_back(v);
    rep.summary = {{"series", series}, {"final", final_cells}};
    return rep;
}

inline Report emit_report(const std::vector<std::filesystem::path>& curves) {
    std::vector<csv::Table> tables;
    std::vector<std::string> names;
    for (const auto& p : curves) {
        const std::string text = read_text_file(p);
        if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;  // empty input, empty report
        tables.push_back(csv::parse(text, p.string()));
        names.push_back(p.string());
    }
    return build_report(tables, names);
}

inline std::string report_csv(const Report& r) {
    std::string out = csv::join({"planner", "scene", "t", "metric", "value", "ci_low", "ci_high", "n"});
    for (const auto& row : r.rows)
        out += csv::join({row.planner, row.scene, csv::num(row.t), row.metric, csv::num(row.value), csv::num(row.ci_low),
                          csv::num(row.ci_high), std::to_string(row.n)});
    return out;
}

}  // namespace jist
