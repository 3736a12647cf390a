#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jist/steering/steering.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace jist;
using namespace jist::testing;
using jist::testing::robot;

namespace {


void expect_gaps_within(const KinematicChain& c, const Trajectory& t, double res) {
    std::vector<Pose> poses;
    for (const auto& q : t.configs) poses.push_back(fk(c, q));
    for (std::size_t i = 1; i < poses.size(); ++i) EXPECT_LE(disp_distance(c.ee_hull, poses[i - 1], poses[i]), res);
    EXPECT_EQ(t.ee_path_cost, path_cost(c.ee_hull, poses));
}

}  // namespace

TEST(JPlusSteer, TargetAtStartIsImmediate) {
    const auto c = robot("planar_3r.json");
    const JointConfig q = Eigen::Vector3d(0.3, -0.5, 1.0);
    const Trajectory t = jplus_steer(c, q, fk(c, q), SteeringParams{});
    EXPECT_TRUE(t.reached);
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(t.ee_path_cost, 0.0);
}

TEST(JPlusSteer, PlanarThreeRegressionRate) {
    const auto c = robot("planar_3r.json");
    const SteeringParams p;
    int reached = 0;
    for (const auto& pr : reachable_pairs(c, 1000, 0.75, 21)) {
        const Trajectory t = jplus_steer(c, pr.start, pr.target, p);
        if (t.reached) {
            ++reached;
            EXPECT_LE(disp_distance(c.ee_hull, fk(c, t.back()), pr.target), p.goal_tol);
        }
        for (const auto& q : t.configs) ASSERT_TRUE(c.within_limits(q));
        for (std::size_t i = 1; i < t.target_distance.size(); ++i)
            ASSERT_LE(t.target_distance[i], t.target_distance[i - 1] + 1e-9);
    }
    EXPECT_GE(reached, 950);
}

TEST(JPlusSteer, DescentWithSmallClamp) {
    const auto c = robot("planar_3r.json");
    SteeringParams p;
    p.step_clamp = 0.01;
    p.max_iters = 2000;
    for (const auto& pr : reachable_pairs(c, 100, 0.75, 22)) {
        const Trajectory t = jplus_steer(c, pr.start, pr.target, p);
        for (std::size_t i = 1; i < t.target_distance.size(); ++i)
            EXPECT_LE(t.target_distance[i], t.target_distance[i - 1] + 1e-9);
        expect_gaps_within(c, t, p.waypoint_res);
    }
}

TEST(JPlusSteer, UnreachableTargetFailsMonotonically) {
    const auto c = robot("planar_3r.json");
    const Pose far = Pose::translation(2.0 * c.reach(), 0.3, 0.0);
    const Trajectory t = jplus_steer(c, Eigen::Vector3d(0.5, 0.5, 0.5), far, SteeringParams{});
    EXPECT_FALSE(t.reached);
    ASSERT_GT(t.target_distance.size(), 1u);
    for (std::size_t i = 1; i < t.target_distance.size(); ++i)
        EXPECT_LE(t.target_distance[i], t.target_distance[i - 1]);
}

TEST(JPlusSteer, Deterministic) {
    const auto c = robot("spatial_7r.json");
    const auto pr = reachable_pairs(c, 1, 0.6, 23).front();
    const Trajectory a = jplus_steer(c, pr.start, pr.target, SteeringParams{});
    const Trajectory b = jplus_steer(c, pr.start, pr.target, SteeringParams{});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.configs[i], b.configs[i]);
}

TEST(JPlusSteer, RejectsBadStart) {
    const auto c = robot("planar_3r.json");
    EXPECT_THROW(jplus_steer(c, Eigen::Vector2d(0, 0), Pose{}, SteeringParams{}), ContractError);
    const auto arm = robot("spatial_7r.json");
    JointConfig q = JointConfig::Zero(7);
    q[1] = arm.joints[1].hi + 0.1;
    EXPECT_THROW(jplus_steer(arm, q, Pose{}, SteeringParams{}), ContractError);
}

TEST(CSpaceSteer, SameConfigAndLinearJoint) {
    const auto c = robot("planar_2r.json");
    const SteeringParams p;
    const JointConfig a = Eigen::Vector2d(0, 0);
    EXPECT_EQ(cspace_steer(c, a, a, p).size(), 1u);

    const JointConfig b = Eigen::Vector2d(1.5707963267948966, 0);
    const Trajectory t = cspace_steer(c, a, b, p);
    EXPECT_TRUE(t.reached);
    EXPECT_EQ(t.back(), b);
    for (std::size_t i = 1; i < t.size(); ++i) {
        EXPECT_EQ(t.configs[i][1], 0.0);
        EXPECT_GT(t.configs[i][0], t.configs[i - 1][0]);
    }
    expect_gaps_within(c, t, p.waypoint_res);
}

TEST(CSpaceSteer, StepsHonorVelocityLimit) {
    const auto c = robot("spatial_7r.json");
    Rng rng(24);
    const SteeringParams p;
    for (int k = 0; k < 20; ++k) {
        const JointConfig a = sample_config(c, rng), b = sample_config(c, rng);
        const auto steps = cspace_steps(c, a, b, p.dt);
        JointConfig prev = a;
        for (const auto& q : steps) {
            for (std::size_t i = 0; i < c.dof(); ++i)
                EXPECT_LE(std::abs(q[i] - prev[i]), c.joints[i].max_velocity * p.dt + 1e-12);
            prev = q;
        }
        expect_gaps_within(c, cspace_steer(c, a, b, p), p.waypoint_res);
    }
}

TEST(SolveIk, SeedAlreadyAtTarget) {
    const auto c = robot("spatial_7r.json");
    const JointConfig seed = (Eigen::VectorXd(7) << 0.1, 0.4, -0.2, -1.2, 0.3, 0.8, 0.0).finished();
    const auto sol = solve_ik(c, fk(c, seed), seed, 5, 1, SteeringParams{});
    ASSERT_TRUE(sol);
    EXPECT_EQ(*sol, seed);
}

TEST(SolveIk, ReachableWithRestartsAndUnreachable) {
    const auto c = robot("spatial_7r.json");
    const SteeringParams p;
    Rng rng(25);
    int ok = 0;
    for (int k = 0; k < 20; ++k) {
        const Pose target = fk(c, sample_config(c, rng));
        const auto sol = solve_ik(c, target, sample_config(c, rng), 20, 100 + k, p);
        if (!sol) continue;
        ++ok;
        EXPECT_TRUE(c.within_limits(*sol));
        EXPECT_LE(disp_distance(c.ee_hull, fk(c, *sol), target), p.goal_tol);
    }
    EXPECT_GE(ok, 18);
    const Pose far = Pose::translation(3.0, 0.0, 0.5);
    EXPECT_FALSE(solve_ik(c, far, JointConfig::Zero(7), 3, 1, p));
}

TEST(IkSteer, TrivialAndTube) {
    const auto c = robot("planar_3r.json");
    const SteeringParams p;
    const JointConfig q = Eigen::Vector3d(0.4, -0.8, 0.9);
    const Pose e0 = fk(c, q);
    EXPECT_EQ(ik_steer(c, q, e0, 0.2, p).size(), 1u);

    const Pose target(e0.t + Vec3(-0.1, -0.05, 0.0), e0.q);
    const double vel = 0.1;  // 5 mm waypoints at dt = 0.05
    const Trajectory t = ik_steer(c, q, target, vel, p);
    ASSERT_TRUE(t.reached);
    EXPECT_LE(disp_distance(c.ee_hull, fk(c, t.back()), target), p.goal_tol);
    const Vec3 a = e0.t, d = target.t - e0.t;
    for (const auto& cq : t.configs) {
        const Vec3 x = fk(c, cq).t;
        const double s = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
        EXPECT_LE((a + s * d - x).norm(), 2 * p.waypoint_res);
    }
}

TEST(IkSteer, UnreachableWaypointReturnsPartial) {
    const auto c = robot("planar_3r.json");
    const JointConfig q = Eigen::Vector3d(0.0, 0.3, 0.3);
    const Pose e0 = fk(c, q);
    const Pose target(Vec3(3.0, 0.0, 0.0), e0.q);
    const Trajectory t = ik_steer(c, q, target, 0.5, SteeringParams{});
    EXPECT_FALSE(t.reached);
    EXPECT_GE(t.size(), 1u);
}

TEST(RandomControl, ZeroVelocityIsStationary) {
    auto c = robot("planar_3r.json");
    for (auto& j : c.joints) j.max_velocity = 0.0;
    Rng rng(26);
    const JointConfig q = Eigen::Vector3d(0.1, 0.2, 0.3);
    const Trajectory t = random_control(c, q, rng, SteeringParams{});
    for (const auto& x : t.configs) EXPECT_EQ(x, q);
}

TEST(RandomControl, DeterministicAndVelocityBounded) {
    const auto c = robot("spatial_7r.json");
    const SteeringParams p;
    Rng r1(27), r2(27);
    const JointConfig q = JointConfig::Zero(7);
    for (int k = 0; k < 20; ++k) {
        const Trajectory a = random_control(c, q, r1, p);
        const Trajectory b = random_control(c, q, r2, p);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a.configs[i], b.configs[i]);
            EXPECT_TRUE(c.within_limits(a.configs[i]));
            if (i > 0)
                for (std::size_t j = 0; j < c.dof(); ++j)
                    EXPECT_LE(std::abs(a.configs[i][j] - a.configs[i - 1][j]),
                              c.joints[j].max_velocity * p.dt + 1e-12);
        }
        expect_gaps_within(c, a, p.waypoint_res);
    }
}

TEST(SteeringParams, JsonDefaultsAndValidation) {
    const SteeringParams p = steering_params_from_json(nlohmann::json::object());
    EXPECT_EQ(p.lambda, 0.05);
    EXPECT_EQ(p.step_clamp, 0.05);
    EXPECT_EQ(p.max_iters, 500);
    EXPECT_EQ(p.goal_tol, 0.005);
    EXPECT_EQ(p.waypoint_res, 0.005);
    EXPECT_THROW(steering_params_from_json({{"lambda", -1.0}}), ContractError);
    EXPECT_EQ(to_json(steering_params_from_json(to_json(p))), to_json(p));
}

TEST(EeVelocityBound, PositiveAndDeterministic) {
    const auto c = robot("spatial_7r.json");
    const double a = estimate_ee_velocity_bound(c, 50, 3, SteeringParams{});
    EXPECT_GT(a, 0.0);
    EXPECT_EQ(a, estimate_ee_velocity_bound(c, 50, 3, SteeringParams{}));
}
