#include <gtest/gtest.h>

#include "jist/baselines/grasp_rrt.hpp"
#include "test_util.hpp"

using namespace jist;
using jist::testing::robot;

namespace {

const KinematicChain& planar() {
    static const KinematicChain c = robot("planar_3r.json");
    return c;
}

JointConfig q3(double a, double b, double c) { return (JointConfig(3) << a, b, c).finished(); }

RRTParams params(std::uint64_t seed) {
    RRTParams p;
    p.max_iters = 5000;
    p.rng_seed = seed;
    p.clock = PlanClock::Mode::Work;
    p.time_budget = 1e9;
    return p;
}

PlanQuery query(const JointConfig& goal) {
    PlanQuery q;
    q.q_start = q3(0.0, 0.4, 0.3);
    q.goals = {fk(planar(), goal)};
    return q;
}

}  // namespace

TEST(GraspRrt, StartAtGoalIsImmediate) {
    const auto q = query(q3(0.0, 0.4, 0.3));
    const auto r = grasp_rrt(planar(), {}, q, params(1));
    ASSERT_TRUE(r.solved());
    EXPECT_EQ(r.best_cost(), 0.0);
    EXPECT_EQ(r.stats.iterations, 0u);
}

TEST(GraspRrt, ObstacleFreeSeedSweep) {
    // Regression on 50 seeds: the obstacle-free planar-3R query is solved
    // within 5000 iterations at goal_bias 0.1.
    const auto q = query(q3(2.0, -0.9, 0.6));
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto r = grasp_rrt(planar(), {}, q, params(seed));
        if (!r.solved()) continue;
        ++solved;
        EXPECT_TRUE(validate_solution(planar(), *r.best_path, {}));
        EXPECT_LE(disp_distance(planar().ee_hull, r.best_path->ee_poses.back(), q.goals[0]), 0.005);
        EXPECT_EQ(r.cost_history.size(), 1u);
    }
    EXPECT_EQ(solved, 50);
}

TEST(GraspRrt, TreeEdgesCollisionFree) {
    const std::vector<Obstacle> obs{{"post", Sphere{Vec3(0.3, 0.9, 0.0), 0.04}}};
    const auto q = query(q3(1.3, 0.5, -0.4));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = grasp_rrt(planar(), obs, q, params(seed));
        ASSERT_TRUE(r.solved());
        EXPECT_TRUE(validate_solution(planar(), *r.best_path, obs));
        EXPECT_TRUE(r.best_path->configs.front() == q.q_start);
    }
}

TEST(GraspRrt, EnclosedGoalFails) {
    const auto q = query(q3(1.0, 0.3, 0.2));
    const std::vector<Obstacle> cage{{"cage", Sphere{q.goals[0].t, 0.12}}};
    auto p = params(2);
    p.max_iters = 1000;
    const auto r = grasp_rrt(planar(), cage, q, p);
    EXPECT_FALSE(r.solved());
    EXPECT_TRUE(r.cost_history.empty());
}

TEST(GraspRrt, DeterministicPerSeed) {
    const auto q = query(q3(2.0, -0.9, 0.6));
    const auto a = plan_result_to_json(grasp_rrt(planar(), {}, q, params(7)), "grasp-rrt").dump();
    const auto b = plan_result_to_json(grasp_rrt(planar(), {}, q, params(7)), "grasp-rrt").dump();
    EXPECT_EQ(a, b);
}

TEST(GraspRrt, RejectsBadParams) {
    auto p = params(1);
    p.goal_bias = 1.5;
    EXPECT_THROW(grasp_rrt(planar(), {}, query(q3(1, 1, 1)), p), ContractError);
    p = params(1);
    p.joint_weights = {1.0};
    EXPECT_THROW(grasp_rrt(planar(), {}, query(q3(1, 1, 1)), p), ContractError);
}
