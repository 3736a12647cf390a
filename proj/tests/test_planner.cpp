#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "jist/planner/jist.hpp"
#include "test_util.hpp"

using namespace jist;
using jist::testing::cube_hull;
using jist::testing::robot;

namespace {

const KinematicChain& planar() {
    static const KinematicChain c = robot("planar_3r.json");
    return c;
}

const ReachabilityRoadmap& planar_roadmap() {
    static const ReachabilityRoadmap rm = build_roadmap(planar(), 1500, 5);
    return rm;
}

JointConfig q3(double a, double b, double c) { return (JointConfig(3) << a, b, c).finished(); }

// A sphere on the end-effector arc between start and goal.
std::vector<Obstacle> small_obstacle() { return {{"post", Sphere{Vec3(0.3, 0.9, 0.0), 0.04}}}; }

PlanQuery planar_query() {
    PlanQuery q;
    q.q_start = q3(0.0, 0.4, 0.3);
    q.goals = {fk(planar(), q3(1.3, 0.5, -0.4))};
    return q;
}

PlannerParams planar_params(std::uint64_t seed) {
    PlannerParams p;
    p.max_iters = 2000;
    p.rng_seed = seed;
    p.kappa = kappa_for_roadmap(planar_roadmap().size());
    p.clock = PlanClock::Mode::Work;
    p.time_budget = 1e9;
    return p;
}

// Straight line of closed vertices along x, 0.1 apart, with the goal on
// vertex 0 and the start beyond vertex 9.
struct LineGraph {
    ReachabilityRoadmap rm;
    DispIndex index;
    std::unique_ptr<QueryAttachment> graph;
    ClosedList closed;
    std::vector<Pose> goals{Pose::translation(0.0, 0.0, 0.0)};

    LineGraph() {
        std::vector<Pose> poses;
        for (int i = 0; i < 10; ++i) poses.push_back(Pose::translation(0.1 * i, 0.0, 0.0));
        rm = ReachabilityRoadmap(cube_hull(0.05), poses, RoadmapMeta{});
        for (VertexId v = 0; v + 1 < 10; ++v) rm.add_edge(v, v + 1);
        rm.sort_adjacency();
        index = rm.make_index();
        graph = std::make_unique<QueryAttachment>(rm, index, Pose::translation(0.95, 0.0, 0.0), goals);
        closed = msmo_astar(*graph, CollisionWorld{}, std::vector<Shape>{});
    }
};

}  // namespace

TEST(Selection, SingleNodeAlwaysSelected) {
    SelectionSampler s;
    s.push(selection_weight(0.3, 0.2, 1e-3));
    Rng rng(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(s.sample(rng), 0u);
}

TEST(Selection, FindMatchesLinearPrefixScan) {
    SelectionSampler s;
    Rng rng(2);
    std::vector<double> w;
    for (int i = 0; i < 37; ++i) {
        w.push_back(rng.uniform(0.1, 5.0));
        s.push(w.back());
    }
    double total = 0.0;
    for (double x : w) total += x;
    EXPECT_NEAR(s.total(), total, 1e-12);
    for (int t = 0; t < 2000; ++t) {
        const double u = rng.uniform(0.0, total);
        std::size_t expect = 0;
        double acc = w[0];
        while (acc <= u && expect + 1 < w.size()) acc += w[++expect];
        const std::size_t got = s.find(u);
        // Rounding can only move a draw that sits on a boundary.
        if (got != expect) {
            double prefix = 0.0;
            for (std::size_t i = 0; i < std::max(got, expect); ++i) prefix += w[i];
            EXPECT_NEAR(prefix, u, 1e-9);
        }
    }
}

TEST(Selection, FrequencyFollowsInverseCost) {
    SelectionSampler s;
    s.push(selection_weight(0.5, 0.5, 0.01));  // g + h = 1
    s.push(selection_weight(1.0, 2.0, 0.01));  // g + h = 3
    Rng rng(3);
    int c0 = 0, c1 = 0;
    for (int i = 0; i < 100000; ++i) (s.sample(rng) == 0 ? c0 : c1)++;
    const double expected = (1.0 / 1.01) / (1.0 / 3.01);
    EXPECT_NEAR(static_cast<double>(c0) / c1, expected, 0.05 * expected);
}

TEST(Selection, EqualCostsUniform) {
    SelectionSampler s;
    for (int i = 0; i < 8; ++i) s.push(selection_weight(0.7, 0.3, 1e-3));
    Rng rng(4);
    std::vector<int> counts(8, 0);
    const int draws = 80000;
    for (int i = 0; i < draws; ++i) counts[s.sample(rng)]++;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - draws / 8.0) * (c - draws / 8.0) / (draws / 8.0);
    EXPECT_LT(chi2, 24.32);  // chi-square, 7 dof, p = 0.001
}

TEST(Bab, Boundaries) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_FALSE(bab_check(100.0, 100.0, inf));
    EXPECT_TRUE(bab_check(0.6, 0.4, 1.0));
    EXPECT_FALSE(bab_check(0.59, 0.4, 1.0));
    EXPECT_FALSE(bab_check(0.6, 0.4, 1.0, BabMode::G));
    EXPECT_TRUE(bab_check(1.0, 0.0, 1.0, BabMode::G));
}

TEST(GoalCheck, ExactBoundaryAndTies) {
    const auto& c = planar();
    const JointConfig q = q3(0.3, -0.2, 0.5);
    const Pose e = fk(c, q);
    const std::vector<Pose> goals{Pose::translation(5, 5, 5), e};
    const auto m = goal_check(c, q, goals, 0.005);
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(m->index, 1u);
    EXPECT_EQ(m->distance, 0.0);

    const std::vector<Pose> far{Pose::translation(0.005 + 1e-6, 0, 0) * e};
    EXPECT_FALSE(goal_check(c, q, far, 0.005).has_value());

    const std::vector<Pose> twins{Pose::translation(0.002, 0, 0) * e, Pose::translation(-0.002, 0, 0) * e};
    const auto t = goal_check(c, q, twins, 0.005);
    ASSERT_TRUE(t.has_value());
    EXPECT_EQ(t->index, 0u);
}

TEST(Fallback, RandomOnlyWithoutGoalConfigs) {
    Rng rng(5);
    const auto a = fallback_edges({}, {}, rng);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].kind, Action::Kind::RandomControl);
    EXPECT_TRUE(std::isinf(a[0].h));
}

TEST(Fallback, GoalConfigChosenUniformlyAndDeterministic) {
    const std::vector<JointConfig> goals{q3(0, 0, 0), q3(1, 1, 1)};
    const std::vector<double> h{0.001, 0.002};
    Rng rng(6);
    int first = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const auto a = fallback_edges(goals, h, rng);
        ASSERT_EQ(a.size(), 2u);
        EXPECT_EQ(a[1].kind, Action::Kind::GoalConfigTarget);
        if (a[1].goal == goals[0]) ++first;
    }
    EXPECT_NEAR(static_cast<double>(first) / draws, 0.5, 0.03);
    Rng r1(7), r2(7);
    const auto x = fallback_edges(goals, h, r1);
    const auto y = fallback_edges(goals, h, r2);
    EXPECT_EQ(x[0].seed, y[0].seed);
    EXPECT_EQ(x[1].goal, y[1].goal);
}

TEST(GreedyEdges, WalksPredecessorsFromNearestClosedVertex) {
    LineGraph lg;
    Rng rng(8);
    const Pose e_sel = lg.rm.pose(7);
    const double h_sel = heuristic_h(e_sel, lg.closed);
    EXPECT_NEAR(h_sel, 0.7, 1e-12);
    // Brute-force scan: qualifying closed neighbors of vertices 7, 6, 5, ...
    // in walk order are 6, 5, 4, ...; the first three are kept.
    const auto a = greedy_edges(e_sel, h_sel, lg.closed, *lg.graph, lg.goals, 3, rng);
    ASSERT_EQ(a.size(), 3u);
    EXPECT_NEAR(a[0].target.t.x(), 0.4, 1e-12);
    EXPECT_NEAR(a[1].target.t.x(), 0.5, 1e-12);
    EXPECT_NEAR(a[2].target.t.x(), 0.6, 1e-12);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_LT(a[i].h, h_sel);
        if (i) EXPECT_LE(a[i - 1].h, a[i].h);
    }
}

TEST(GreedyEdges, GoalRootPadsFromGoalSet) {
    LineGraph lg;
    Rng rng(9);
    const auto a = greedy_edges(lg.goals[0], 0.0, lg.closed, *lg.graph, lg.goals, 5, rng);
    ASSERT_EQ(a.size(), 1u);  // padding never repeats a goal
    EXPECT_TRUE(a[0].target == lg.goals[0]);
}

TEST(JistPlan, StartAtGoalIsImmediateZeroCostSolution) {
    auto q = planar_query();
    q.goals = {fk(planar(), q.q_start)};
    const auto r = jist_plan(planar(), {}, planar_roadmap(), q, planar_params(1));
    ASSERT_TRUE(r.solved());
    EXPECT_EQ(r.best_cost(), 0.0);
    ASSERT_EQ(r.cost_history.size(), 1u);
    EXPECT_EQ(r.stats.iterations, 0u);
}

TEST(JistPlan, RejectsBadInputs) {
    auto q = planar_query();
    const std::vector<Obstacle> block{{"b", Sphere{fk(planar(), q.q_start).t, 0.05}}};
    EXPECT_THROW(jist_plan(planar(), block, planar_roadmap(), q, planar_params(1)), ContractError);
    q.goals.clear();
    EXPECT_THROW(jist_plan(planar(), {}, planar_roadmap(), q, planar_params(1)), ContractError);
    const auto spatial = robot("spatial_7r.json");
    EXPECT_THROW(jist_plan(spatial, {}, planar_roadmap(), planar_query(), planar_params(1)), ContractError);
}

TEST(JistPlan, SmallObstacleSolvedNearStraightLineCost) {
    const auto q = planar_query();
    const auto obs = small_obstacle();
    const double straight = disp_distance(planar().ee_hull, fk(planar(), q.q_start), q.goals[0]);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = jist_plan(planar(), obs, planar_roadmap(), q, planar_params(seed));
        ASSERT_TRUE(r.solved()) << "seed " << seed;
        EXPECT_LE(r.best_cost(), 1.5 * straight) << "seed " << seed;
        EXPECT_TRUE(validate_solution(planar(), *r.best_path, obs));
        EXPECT_NEAR(r.best_path->ee_path_cost, r.best_cost(), 1e-9);
        EXPECT_TRUE(r.best_path->configs.front() == q.q_start);
        EXPECT_LE(disp_distance(planar().ee_hull, r.best_path->ee_poses.back(), q.goals[0]), 0.005);
    }
}

TEST(JistPlan, AnytimeContractAndLineSixOnTracedRuns) {
    const auto q = planar_query();
    const auto obs = small_obstacle();
    for (std::uint64_t seed = 10; seed < 14; ++seed) {
        PlanTrace trace;
        const auto r = jist_plan(planar(), obs, planar_roadmap(), q, planar_params(seed), &trace);
        for (std::size_t i = 1; i < r.cost_history.size(); ++i) {
            EXPECT_LT(r.cost_history[i].cost, r.cost_history[i - 1].cost);
            EXPECT_GE(r.cost_history[i].t, r.cost_history[i - 1].t);
        }
        int checked = 0;
        for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
            if (!trace[i].inserted || !(trace[i].h_new < trace[i].h_parent)) continue;
            EXPECT_EQ(trace[i + 1].selected, *trace[i].inserted);
            EXPECT_TRUE(trace[i + 1].greedy_rule);
            ++checked;
        }
        EXPECT_GT(checked, 0);
    }
}

TEST(JistPlan, EnclosedGoalFailsAndUsesFallback) {
    auto q = planar_query();
    const Pose goal = fk(planar(), q3(1.0, 0.3, 0.2));
    q.goals = {goal};
    const std::vector<Obstacle> cage{{"cage", Sphere{goal.t, 0.12}}};
    auto p = planar_params(2);
    p.max_iters = 400;
    const auto r = jist_plan(planar(), cage, planar_roadmap(), q, p);
    EXPECT_FALSE(r.solved());
    EXPECT_TRUE(r.cost_history.empty());
    EXPECT_GT(r.stats.fallback_generations, 0u);
}

TEST(JistPlan, DeterministicUnderWorkClock) {
    const auto q = planar_query();
    const auto obs = small_obstacle();
    auto p = planar_params(21);
    p.max_iters = 600;
    const auto a = plan_result_to_json(jist_plan(planar(), obs, planar_roadmap(), q, p), "jist").dump();
    const auto b = plan_result_to_json(jist_plan(planar(), obs, planar_roadmap(), q, p), "jist").dump();
    EXPECT_EQ(a, b);
}

TEST(JistPlan, CandidateConsumptionReachesFallback) {
    // With kappa = 1 a node's single greedy action is consumed on its first
    // selection, so its second selection must generate fallback actions.
    const auto q = planar_query();
    auto p = planar_params(3);
    p.kappa = 1;
    p.max_iters = 300;
    const auto r = jist_plan(planar(), small_obstacle(), planar_roadmap(), q, p);
    EXPECT_GT(r.stats.fallback_generations, 0u);
    EXPECT_EQ(r.stats.steer_calls, r.stats.iterations);
}

TEST(JistPlan, BabGModeStillSolves) {
    auto p = planar_params(4);
    p.bab = BabMode::G;
    const auto r = jist_plan(planar(), small_obstacle(), planar_roadmap(), planar_query(), p);
    EXPECT_TRUE(r.solved());
}

TEST(Validate, EmptySceneTrueAndObstacleFalse) {
    const auto& c = planar();
    const Trajectory t = cspace_steer(c, q3(0, 0, 0), q3(1.2, 0, 0), SteeringParams{});
    EXPECT_TRUE(validate_solution(c, t, {}));
    const Pose mid = fk(c, q3(0.6, 0, 0));
    const std::vector<Obstacle> wall{{"w", Sphere{mid.t, 0.05}}};
    EXPECT_FALSE(validate_solution(c, t, wall));
}

TEST(Validate, AgreesWithTenTimesFinerResolution) {
    const auto& c = planar();
    Rng rng(11);
    std::vector<Obstacle> obs;
    for (int i = 0; i < 6; ++i)
        obs.push_back({"o" + std::to_string(i), Sphere{Vec3(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9), 0.0), 0.04}});
    int disagreements = 0;
    for (int i = 0; i < 100; ++i) {
        const Trajectory t = cspace_steer(c, sample_config(c, rng), sample_config(c, rng), SteeringParams{});
        if (validate_solution(c, t, obs, 1e-3) != validate_solution(c, t, obs, 1e-4)) ++disagreements;
    }
    EXPECT_EQ(disagreements, 0);
}
