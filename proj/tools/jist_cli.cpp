// jist: command-line front end for roadmap building, planning, scene
// generation, benchmarking, steering evaluation and report aggregation.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "jist/baselines/grasp_rrt.hpp"
#include "jist/bench/benchmark.hpp"
#include "jist/bench/steering_eval.hpp"
#include "jist/kinematics/robot_io.hpp"
#include "jist/planner/jist.hpp"
#include "jist/roadmap/roadmap.hpp"
#include "jist/scenes/scene.hpp"

namespace fs = std::filesystem;
using namespace jist;

namespace {

int build_roadmap_cmd(const std::string& robot, std::size_t n, std::uint64_t seed, const std::string& out) {
    const KinematicChain chain = load_robot(robot);
    const ReachabilityRoadmap rm = build_roadmap(chain, n, seed);
    save_roadmap(rm, out);
    std::cout << "roadmap: " << rm.size() << " vertices, " << rm.edge_count() << " edges, ee_velocity_bound "
              << rm.meta().ee_velocity_bound << " m/s -> " << out << "\n";
    return 0;
}

struct PlanArgs {
    std::string robot, scene, roadmap, start, goals, grasps, out, algo = "jist", bab = "g+h", clock = "wall", params,
        closed_csv;
    double pregrasp_offset = 0.02;
    std::uint64_t iters = 0, seed = 0;
    int kappa = 0;
    double time_budget = 30.0;
    bool stop_on_first = false;
};

/// Goals file: a bare array of poses, or {"goals": [...], "approach_targets": [...]}.
PlanQuery load_goals(const std::string& path, PlanQuery q) {
    const json_io::Json j = parse_json_file(path);
    const std::string where = fs::path(path).filename().string();
    if (j.is_array()) {
        q.goals = json_io::poses(j, where);
        return q;
    }
    json_io::check_keys(j, {"goals", "approach_targets"}, where);
    q.goals = json_io::poses(json_io::field(j, "goals", where), where + ".goals");
    if (j.contains("approach_targets")) q.approach_targets = json_io::poses(j["approach_targets"], where + ".approach_targets");
    return q;
}

int plan_cmd(const PlanArgs& a) {
    const KinematicChain chain = load_robot(a.robot);
    const Scene scene = load_scene(a.scene);
    const std::vector<Obstacle> obstacles = scene.collision_obstacles();
    PlanQuery q;
    q.q_start = load_joint_config(a.start);
    if (!a.goals.empty()) {
        q = load_goals(a.goals, q);
    } else {
        require(scene.target.has_value(), "plan: --grasps needs a scene with a target object");
        const GoalSpec g = make_pregrasp_goals(world_grasps(load_grasp_set(a.grasps), scene.target->pose),
                                               a.pregrasp_offset, chain.ee_body, obstacles);
        q.goals = g.goal_poses;
        q.approach_targets = g.final_poses;
    }
    const json_io::Json extra = a.params.empty() ? json_io::Json::object() : parse_json_file(a.params);

    PlanResult r;
    if (parse_planner_algo(a.algo) == PlannerAlgo::Jist) {
        require(!a.roadmap.empty(), "plan: --roadmap is required for jist");
        const ReachabilityRoadmap rm = load_roadmap(a.roadmap, chain_hash(chain));
        PlannerParams p = planner_params_from_json(extra, rm.size());
        if (!extra.contains("kappa")) p.kappa = kappa_for_roadmap(rm.size());
        if (a.kappa > 0) p.kappa = a.kappa;
        if (a.iters > 0) p.max_iters = a.iters;
        p.time_budget = a.time_budget;
        p.rng_seed = a.seed;
        p.bab = parse_bab_mode(a.bab);
        p.clock = parse_clock_mode(a.clock);
        p.stop_on_first_solution = a.stop_on_first || p.stop_on_first_solution;
        const DispIndex index = rm.make_index();
        r = jist_plan(chain, obstacles, rm, index, q, p);
        if (!a.closed_csv.empty()) {
            const QueryAttachment graph(rm, index, fk(chain, q.q_start), q.goals);
            const ClosedList closed = msmo_astar(graph, CollisionWorld(obstacles), chain.ee_body);
            std::ofstream os(a.closed_csv);
            if (!os) throw FormatError("cannot open '" + a.closed_csv + "' for writing");
            write_closed_csv(os, closed);
        }
    } else {
        RRTParams p = rrt_params_from_json(extra);
        if (a.iters > 0) p.max_iters = a.iters;
        p.time_budget = a.time_budget;
        p.rng_seed = a.seed;
        p.clock = parse_clock_mode(a.clock);
        r = grasp_rrt(chain, obstacles, q, p);
    }
    json_io::Json j = plan_result_to_json(r, a.algo);
    j["validated"] = r.best_path ? json_io::Json(validate_solution(chain, *r.best_path, obstacles)) : json_io::Json(nullptr);
    write_text_file(a.out, j.dump(2) + "\n");
    std::cout << (r.solved() ? "solved, cost " + csv::num(r.best_cost()) + " m" : std::string("no solution")) << " -> "
              << a.out << "\n";
    return r.solved() ? 0 : 3;
}

struct GenSceneArgs {
    std::vector<double> bounds;
    std::vector<std::string> keep_out;
    double fraction = 0.1, min_size = 0.04, max_size = 0.12;
    std::uint64_t seed = 0;
    std::string out, name = "clutter";
};

int gen_scene_cmd(const GenSceneArgs& a) {
    require(a.bounds.size() == 6, "gen-scene: --bounds needs 6 numbers: xmin ymin zmin xmax ymax zmax");
    ClutterOptions o;
    o.bounds = {Vec3(a.bounds[0], a.bounds[1], a.bounds[2]), Vec3(a.bounds[3], a.bounds[4], a.bounds[5])};
    require((o.bounds.hi.array() > o.bounds.lo.array()).all(), "gen-scene: bounds max must exceed min");
    o.fraction = a.fraction;
    o.seed = a.seed;
    o.min_size = a.min_size;
    o.max_size = a.max_size;
    for (const auto& k : a.keep_out) {
        const auto f = csv::split(k);
        require(f.size() == 4, "gen-scene: --keep-out takes cx,cy,cz,r");
        o.keep_out.push_back({Vec3(csv::parse_required(f[0], "keep-out"), csv::parse_required(f[1], "keep-out"),
                                   csv::parse_required(f[2], "keep-out")),
                              csv::parse_required(f[3], "keep-out")});
    }
    ClutterResult r = generate_clutter_scene(o);
    r.scene.name = a.name;
    save_scene(r.scene, a.out);
    std::cout << r.scene.obstacles.size() << " obstacles, achieved fraction " << csv::num(r.achieved_fraction) << " -> "
              << a.out << "\n";
    return 0;
}

int benchmark_cmd(const std::string& config, const std::string& out, bool quiet) {
    const BenchmarkConfig c = load_benchmark_config(config);
    const BenchmarkSetup s = prepare_benchmark(c, quiet ? nullptr : &std::cerr);
    const BenchmarkResult r = run_benchmark(s, quiet ? nullptr : &std::cerr);
    write_benchmark_outputs(r, out);
    std::cout << "wrote trials.csv, buckets.csv, curves.csv, wall_times.csv to " << out << "\n";
    return 0;
}

int eval_steering_cmd(const std::string& config, const std::string& out, bool quiet) {
    const SteeringEvalConfig c = load_steering_eval_config(config);
    const SteeringEvalResult r = eval_steering(load_robot(c.robot), c, quiet ? nullptr : &std::cerr);
    write_steering_outputs(r, c, out);
    for (const auto& [m, rho] : r.spearman) std::cout << to_string(m) << ": spearman rho " << csv::num(rho) << "\n";
    std::cout << "wrote steering_pairs.csv, steering_summary.csv, steering_trend.json to " << out << "\n";
    return 0;
}

int report_cmd(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<fs::path> paths(inputs.begin(), inputs.end());
    const Report r = emit_report(paths);
    fs::create_directories(out);
    write_text_file(fs::path(out) / "report.json", r.summary.dump(2) + "\n");
    write_text_file(fs::path(out) / "report.csv", report_csv(r));
    if (r.rows.empty()) {
        std::cerr << "error: no data rows in input\n";
        return 1;
    }
    std::cout << r.rows.size() << " rows -> " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"JIST manipulation planning toolkit"};
    app.require_subcommand(1);

    std::string robot, out;
    std::size_t n = 25000;
    std::uint64_t seed = 0;
    auto* br = app.add_subcommand("build-roadmap", "Build and save a reachability roadmap");
    br->add_option("--robot", robot, "Robot JSON")->required()->check(CLI::ExistingFile);
    br->add_option("--n", n, "Vertex count")->check(CLI::Range(2, 100000000));
    br->add_option("--seed", seed, "RNG seed");
    br->add_option("--out", out, "Output roadmap file")->required();

    PlanArgs pa;
    auto* pl = app.add_subcommand("plan", "Plan from a start configuration to a goal pose set");
    pl->add_option("--robot", pa.robot, "Robot JSON")->required()->check(CLI::ExistingFile);
    pl->add_option("--scene", pa.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    pl->add_option("--roadmap", pa.roadmap, "Roadmap file (jist)")->check(CLI::ExistingFile);
    pl->add_option("--start", pa.start, "Start configuration JSON")->required()->check(CLI::ExistingFile);
    auto* goals = pl->add_option("--goals", pa.goals, "Goal poses JSON")->check(CLI::ExistingFile);
    auto* grasps = pl->add_option("--grasps", pa.grasps, "Grasp set JSON; goals become pre-grasps of the scene target")
                       ->check(CLI::ExistingFile);
    goals->excludes(grasps);
    pl->add_option("--pregrasp-offset", pa.pregrasp_offset, "Pre-grasp back-off (m)");
    pl->add_option("--algo", pa.algo, "jist | grasp-rrt")->check(CLI::IsMember({"jist", "grasp-rrt"}));
    pl->add_option("--iters", pa.iters, "Iteration cap N");
    pl->add_option("--kappa", pa.kappa, "Greedy edges per expansion (default 2 ceil(ln n))");
    pl->add_option("--time-budget", pa.time_budget, "Seconds on the planner clock");
    pl->add_option("--seed", pa.seed, "RNG seed");
    pl->add_option("--bab", pa.bab, "Branch-and-bound bound: g+h | g")->check(CLI::IsMember({"g+h", "gh", "g"}));
    pl->add_option("--clock", pa.clock, "wall | work")->check(CLI::IsMember({"wall", "work"}));
    pl->add_flag("--stop-on-first", pa.stop_on_first, "Return at the first solution");
    pl->add_option("--params", pa.params, "Planner parameter JSON")->check(CLI::ExistingFile);
    pl->add_option("--closed-csv", pa.closed_csv, "Dump the navigation-function closed list (jist)");
    pl->add_option("--out", pa.out, "Result JSON")->required();

    GenSceneArgs ga;
    auto* gs = app.add_subcommand("gen-scene", "Generate a random clutter scene");
    gs->add_option("--bounds", ga.bounds, "xmin ymin zmin xmax ymax zmax")->required()->expected(6);
    gs->add_option("--fraction", ga.fraction, "Occupied volume fraction in [0, 0.5]");
    gs->add_option("--seed", ga.seed, "RNG seed");
    gs->add_option("--min-size", ga.min_size, "Smallest primitive extent (m)");
    gs->add_option("--max-size", ga.max_size, "Largest primitive extent (m)");
    gs->add_option("--keep-out", ga.keep_out, "Sphere cx,cy,cz,r no primitive may touch (repeatable)");
    gs->add_option("--name", ga.name, "Scene name");
    gs->add_option("--out", ga.out, "Scene JSON")->required();

    std::string config;
    bool quiet = false;
    auto* bm = app.add_subcommand("benchmark", "Run planners over scenes and seeds");
    bm->add_option("--config", config, "Benchmark JSON")->required()->check(CLI::ExistingFile);
    bm->add_option("--out", out, "Output directory")->required();
    bm->add_flag("--quiet", quiet, "No progress log");

    auto* es = app.add_subcommand("eval-steering", "Steering methods across clutter levels");
    es->add_option("--config", config, "Steering evaluation JSON")->required()->check(CLI::ExistingFile);
    es->add_option("--out", out, "Output directory")->required();
    es->add_flag("--quiet", quiet, "No progress log");

    std::vector<std::string> inputs;
    auto* rp = app.add_subcommand("report", "Aggregate curves.csv files into means and 95% intervals");
    rp->add_option("--in", inputs, "curves.csv files")->required()->check(CLI::ExistingFile);
    rp->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*br) return build_roadmap_cmd(robot, n, seed, out);
        if (*pl) {
            if (pa.goals.empty() && pa.grasps.empty()) throw ContractError("plan: one of --goals or --grasps is required");
            return plan_cmd(pa);
        }
        if (*gs) return gen_scene_cmd(ga);
        if (*bm) return benchmark_cmd(config, out, quiet);
        if (*es) return eval_steering_cmd(config, out, quiet);
        if (*rp) return report_cmd(inputs, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
