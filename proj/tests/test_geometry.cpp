#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jist/geometry/collision.hpp"
#include "jist/geometry/disp.hpp"
#include "jist/geometry/disp_index.hpp"
#include "jist/geometry/json_io.hpp"
#include "jist/geometry/segment.hpp"
#include "test_util.hpp"

using namespace jist;
using jist::testing::cube_hull;
using jist::testing::random_pose;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Second DISP route: Eigen isometries over hull vertices plus random convex
// combinations of them. The max of a convex function over the hull is
// attained at a vertex, so interior samples never raise it.
double disp_oracle(const HullPoints& h, const Pose& a, const Pose& b, std::mt19937_64& gen) {
    Eigen::Isometry3d ta = Eigen::Translation3d(a.t) * a.q;
    Eigen::Isometry3d tb = Eigen::Translation3d(b.t) * b.q;
    double best = 0.0;
    for (const auto& p : h.points) best = std::max(best, (ta * p - tb * p).norm());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 50; ++s) {
        Vec3 p = Vec3::Zero();
        double wsum = 0.0;
        for (const auto& v : h.points) {
            const double w = u(gen);
            p += w * v;
            wsum += w;
        }
        p /= wsum;
        best = std::max(best, (ta * p - tb * p).norm());
    }
    return best;
}

}  // namespace

TEST(PoseInterpolate, EqualEndpointsReturnInput) {
    const Pose a(Vec3(0.3, -0.2, 1.0), Quat(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized())));
    const Pose m = pose_interpolate(a, a, 0.5);
    EXPECT_NEAR((m.t - a.t).norm(), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m.q.dot(a.q)), 1.0, 1e-12);
}

TEST(PoseInterpolate, LinearTranslationMidpoint) {
    const Pose m = pose_interpolate(Pose::identity(), Pose::translation(1, 0, 0), 0.5);
    EXPECT_NEAR((m.t - Vec3(0.5, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(PoseInterpolate, SlerpMatchesAxisAngleOracle) {
    const Pose m = pose_interpolate(Pose::identity(), Pose::rot_z(kPi / 2), 0.5);
    const Quat expected(Eigen::AngleAxisd(kPi / 4, Vec3::UnitZ()));
    EXPECT_NEAR(std::abs(m.q.dot(expected)), 1.0, 1e-12);
    EXPECT_NEAR(m.q.norm(), 1.0, 1e-9);
}

TEST(PoseInterpolate, EndpointsExactAndRejectsOutOfRange) {
    std::mt19937_64 gen(1);
    const Pose a = random_pose(gen), b = random_pose(gen);
    EXPECT_TRUE(pose_interpolate(a, b, 0.0) == a);
    EXPECT_TRUE(pose_interpolate(a, b, 1.0) == b);
    EXPECT_THROW(pose_interpolate(a, b, -0.1), ContractError);
    EXPECT_THROW(pose_interpolate(a, b, 1.1), ContractError);
}

TEST(PoseInterpolate, ShortestArcUnderDoubleCover) {
    const Quat q(Eigen::AngleAxisd(0.4, Vec3::UnitZ()));
    Quat neg;
    neg.coeffs() = -q.coeffs();
    const Pose m = pose_interpolate(Pose::identity(), Pose(Vec3::Zero(), neg), 0.5);
    const Quat expected(Eigen::AngleAxisd(0.2, Vec3::UnitZ()));
    EXPECT_NEAR(std::abs(m.q.dot(expected)), 1.0, 1e-12);
}

TEST(PoseInvariant, CompositionWithInverseIsIdentity) {
    std::mt19937_64 gen(2);
    for (int i = 0; i < 200; ++i) {
        const Pose p = random_pose(gen);
        const Pose id = p * p.inverse();
        EXPECT_LT(id.t.norm(), 1e-9);
        EXPECT_NEAR(std::abs(id.q.w()), 1.0, 1e-9);
        const Pose m = pose_interpolate(p, random_pose(gen), 0.37);
        EXPECT_NEAR(m.q.norm(), 1.0, 1e-9);
    }
}

TEST(PoseInterpolate, TranslationPairsHaveMonotoneDisp) {
    const HullPoints h = cube_hull(0.1);
    const Pose a = Pose::translation(0.1, 0.2, 0.3);
    const Pose b = Pose::translation(-0.4, 0.5, 0.0);
    double prev = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double d = disp_distance(h, a, pose_interpolate(a, b, i / 20.0));
        EXPECT_GE(d, prev);
        prev = d;
    }
}

TEST(Disp, IdentityIsZero) {
    std::mt19937_64 gen(3);
    const Pose e = random_pose(gen);
    EXPECT_EQ(disp_distance(cube_hull(0.1), e, e), 0.0);
}

TEST(Disp, PureTranslation) {
    EXPECT_NEAR(disp_distance(cube_hull(0.1), Pose::identity(), Pose::translation(0.1, 0, 0)), 0.1, 1e-15);
}

TEST(Disp, CubeQuarterTurnBruteForce) {
    const HullPoints h = cube_hull(0.1);
    const Mat3 r = Pose::rot_z(kPi / 2).rotation_matrix();
    double brute = 0.0;
    for (const auto& p : h.points) brute = std::max(brute, (p - r * p).norm());
    EXPECT_NEAR(brute, 0.2, 1e-12);
    EXPECT_NEAR(disp_distance(h, Pose::identity(), Pose::rot_z(kPi / 2)), brute, 1e-12);
}

TEST(Disp, EmptyHullIsError) {
    EXPECT_THROW(disp_distance(HullPoints{}, Pose{}, Pose{}), ContractError);
}

TEST(PathCost, SingleAndCollinear) {
    const HullPoints h = cube_hull(0.1);
    const std::vector<Pose> one{Pose::translation(1, 2, 3)};
    EXPECT_EQ(path_cost(h, one), 0.0);
    const std::vector<Pose> line{Pose::identity(), Pose::translation(0.1, 0, 0), Pose::translation(0.3, 0, 0)};
    EXPECT_NEAR(path_cost(h, line), 0.3, 1e-15);
    EXPECT_THROW(path_cost(h, std::vector<Pose>{}), ContractError);
}

TEST(PathCost, MatchesIndependentPairwiseOracle) {
    std::mt19937_64 gen(4);
    const HullPoints h = cube_hull(0.08);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Pose> path;
        for (int i = 0; i < 5; ++i) path.push_back(random_pose(gen));
        double oracle = 0.0;
        for (int i = 0; i + 1 < 5; ++i) oracle += disp_oracle(h, path[i], path[i + 1], gen);
        EXPECT_NEAR(path_cost(h, path), oracle, 1e-12);
    }
}

TEST(DispProperties, MetricAxiomsOnRandomTriples) {
    std::mt19937_64 gen(5);
    const HullPoints h = cube_hull(0.1);
    for (int i = 0; i < 300; ++i) {
        const Pose a = random_pose(gen), b = random_pose(gen), c = random_pose(gen);
        const double ab = disp_distance(h, a, b);
        EXPECT_EQ(ab, disp_distance(h, b, a));
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(disp_distance(h, a, c), ab + disp_distance(h, b, c) + 1e-9);
    }
}

TEST(Collision, SphereSeparatedAndOverlapping) {
    const std::vector<Shape> ee{Sphere{Vec3::Zero(), 0.05}};
    const std::vector<Obstacle> far{{"s", Sphere{Vec3(1, 0, 0), 0.05}}};
    const std::vector<Obstacle> near{{"s", Sphere{Vec3(0.08, 0, 0), 0.05}}};
    EXPECT_FALSE(collide_pose(ee, Pose::identity(), far));
    EXPECT_TRUE(collide_pose(ee, Pose::identity(), near));
}

TEST(Collision, CapsuleBoxGrazingContactCounts) {
    const Box b{Vec3(0, 0, 0), Vec3(1, 1, 1), {}};
    // Capsule axis parallel to the x = 0 face at exactly one radius.
    const Capsule touching{Vec3(-0.1, 0.2, 0.5), Vec3(-0.1, 0.8, 0.5), 0.1};
    const Capsule clear{Vec3(-0.1000001, 0.2, 0.5), Vec3(-0.1000001, 0.8, 0.5), 0.1};
    EXPECT_DOUBLE_EQ(std::sqrt(detail::segment_box_dist2(touching.p0, touching.p1, b)), 0.1);
    EXPECT_TRUE(shapes_intersect(touching, b));
    EXPECT_FALSE(shapes_intersect(clear, b));
    // Edge contact: the closest box feature is the edge x = 0, y = 0.
    const double r = std::sqrt(0.1 * 0.1 + 0.1 * 0.1);
    const Capsule corner{Vec3(-0.1, -0.1, 0.2), Vec3(-0.1, -0.1, 0.6), r};
    EXPECT_TRUE(shapes_intersect(corner, b));
}

TEST(Collision, SegmentBoxDistanceMatchesDenseSampling) {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        Box b{Vec3(-0.2, -0.1, -0.3), Vec3(0.1, 0.3, 0.2), random_pose(gen, 0.3)};
        const Vec3 p(u(gen), u(gen), u(gen)), q(u(gen), u(gen), u(gen));
        double sampled = 1e9;
        for (int k = 0; k <= 20000; ++k) {
            const Vec3 x = p + (k / 20000.0) * (q - p);
            sampled = std::min(sampled, std::sqrt(detail::point_box_dist2(x, b)));
        }
        const double exact = std::sqrt(detail::segment_box_dist2(p, q, b));
        EXPECT_LE(exact, sampled + 1e-12);
        EXPECT_NEAR(exact, sampled, 2e-4);
    }
}

TEST(CollisionProperties, SymmetricAndRigidInvariant) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-0.5, 0.5), r(0.05, 0.3);
    auto random_shape = [&](int kind) -> Shape {
        const Vec3 c(u(gen), u(gen), u(gen));
        if (kind == 0) return Sphere{c, r(gen)};
        if (kind == 1) return Capsule{c, c + Vec3(u(gen), u(gen), u(gen)), r(gen)};
        const Vec3 e(r(gen), r(gen), r(gen));
        return Box{c - e, c + e, {}};
    };
    int checked = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        const Shape a = random_shape(trial % 3);
        const Shape b = random_shape((trial / 3) % 3);
        const Pose t = random_pose(gen);
        const Shape ta = transform_shape(a, t), tb = transform_shape(b, t);
        EXPECT_EQ(shapes_intersect(a, b), shapes_intersect(b, a));
        if (a.index() == 2 && b.index() == 2) {
            // No distance routine for box pairs: compare predicates away from contact.
            EXPECT_EQ(shapes_intersect(a, b), shapes_intersect(ta, tb));
        } else {
            const double d0 = shape_distance(a, b);
            const double d1 = shape_distance(ta, tb);
            EXPECT_NEAR(d0, d1, 1e-9);
            if (d0 > 1e-9) EXPECT_EQ(shapes_intersect(a, b), shapes_intersect(ta, tb));
            ++checked;
        }
    }
    EXPECT_GT(checked, 2000);
}

TEST(Segment, WaypointsAndCollisionCounts) {
    const HullPoints h = cube_hull(0.05);
    const std::vector<Shape> ee{Sphere{Vec3::Zero(), 0.02}};
    const SE3Segment free = make_segment(h, Pose::identity(), Pose::translation(0.5, 0, 0), 0.05);
    ASSERT_EQ(free.waypoints.size(), 11u);
    EXPECT_TRUE(free.waypoints.front() == free.start);
    EXPECT_TRUE(free.waypoints.back() == free.end);
    EXPECT_EQ(segment_collision_count(ee, free, std::vector<Obstacle>{}), 0);

    const std::vector<Obstacle> big{{"big", Box{Vec3(-5, -5, -5), Vec3(5, 5, 5), {}}}};
    EXPECT_EQ(segment_collision_count(ee, free, big), 10);

    const std::vector<Obstacle> wall{{"wall", Box{Vec3(0.24, -1, -1), Vec3(0.26, 1, 1), {}}}};
    int brute = 0;
    for (std::size_t i = 1; i < free.waypoints.size(); ++i)
        for (const auto& s : ee)
            if (shapes_intersect(transform_shape(s, free.waypoints[i]), wall[0].shape)) ++brute;
    EXPECT_EQ(segment_collision_count(ee, free, wall), brute);
    EXPECT_GT(brute, 0);
}

TEST(Segment, GapsRespectResolutionUnderRotation) {
    std::mt19937_64 gen(8);
    const HullPoints h = cube_hull(0.1);
    for (int i = 0; i < 50; ++i) {
        const Pose a = random_pose(gen), b = random_pose(gen);
        const SE3Segment s = make_segment(h, a, b, 0.05);
        EXPECT_LE(max_waypoint_gap(h, s.waypoints), 0.05 + kGapSlack);
    }
}

TEST(DispIndex, KnnMatchesBruteForce) {
    std::mt19937_64 gen(9);
    const HullPoints h = cube_hull(0.1);
    std::vector<std::pair<DispIndex::Id, Pose>> items;
    for (DispIndex::Id i = 0; i < 600; ++i) items.emplace_back(i, random_pose(gen, 1.0));
    const DispIndex index(h, items);
    for (int q = 0; q < 50; ++q) {
        const Pose query = random_pose(gen, 1.0);
        std::vector<DispIndex::Hit> brute;
        for (const auto& [id, p] : items) brute.push_back({disp_distance(h, query, p), id});
        std::sort(brute.begin(), brute.end());
        const auto hits = index.knn(query, 7);
        ASSERT_EQ(hits.size(), 7u);
        for (std::size_t k = 0; k < 7; ++k) {
            EXPECT_EQ(hits[k].id, brute[k].id);
            EXPECT_EQ(hits[k].dist, brute[k].dist);
        }
    }
}

TEST(JsonIo, ShapeRoundTripAndMissingType) {
    const Shape s = Capsule{Vec3(0.1, 0.2, 0.3), Vec3(-0.4, 0.5, 0.6), 0.07};
    const Shape back = json_io::shape(json_io::to_json(s), "s");
    EXPECT_EQ(json_io::to_json(back), json_io::to_json(s));
    nlohmann::json bad = {{"center", {0, 0, 0}}, {"radius", 1.0}};
    try {
        json_io::shape(bad, "scene.obstacles[3]");
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("\"type\""), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("obstacles[3]"), std::string::npos);
    }
}
