#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "jist/kinematics/chain.hpp"
#include "jist/kinematics/robot_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace jist;
using namespace jist::testing;
using jist::testing::robot;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent forward kinematics: homogeneous 4x4 products with Rodrigues
// rotation matrices, no quaternions.
Eigen::Matrix4d homogeneous(const Mat3& r, const Vec3& t) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = r;
    m.topRightCorner<3, 1>() = t;
    return m;
}

Mat3 rodrigues(const Vec3& axis, double angle) {
    Mat3 k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    return Mat3::Identity() + std::sin(angle) * k + (1 - std::cos(angle)) * k * k;
}

Eigen::Matrix4d fk_oracle(const KinematicChain& c, const JointConfig& q) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (std::size_t i = 0; i < c.dof(); ++i) {
        const auto& j = c.joints[i];
        m = m * homogeneous(j.origin.rotation_matrix(), j.origin.t) * homogeneous(rodrigues(j.axis, q[i]), Vec3::Zero());
    }
    return m * homogeneous(c.ee_offset.rotation_matrix(), c.ee_offset.t);
}



}  // namespace

TEST(Fk, PlanarTwoLinkStraightAndRotated) {
    const auto c = robot("planar_2r.json");
    const Pose e0 = fk(c, Eigen::Vector2d(0, 0));
    EXPECT_NEAR((e0.t - Vec3(2, 0, 0)).norm(), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(e0.q.w()), 1.0, 1e-15);
    const Pose e1 = fk(c, Eigen::Vector2d(kPi / 2, 0));
    EXPECT_NEAR((e1.t - Vec3(0, 2, 0)).norm(), 0.0, 1e-12);
}

TEST(Fk, DimensionMismatchIsError) {
    const auto c = robot("planar_2r.json");
    EXPECT_THROW(fk(c, Eigen::Vector3d(0, 0, 0)), ContractError);
    EXPECT_THROW(jacobian(c, Eigen::Vector3d(0, 0, 0)), ContractError);
}

TEST(Fk, SpatialSevenMatchesHomogeneousOracle) {
    const auto c = robot("spatial_7r.json");
    std::mt19937_64 gen(11);
    for (int i = 0; i < 200; ++i) {
        const JointConfig q = random_q(c, gen);
        const Pose e = fk(c, q);
        const Eigen::Matrix4d m = fk_oracle(c, q);
        EXPECT_LT((e.t - m.topRightCorner<3, 1>()).norm(), 1e-12);
        EXPECT_LT((e.rotation_matrix() - m.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Fk, InvariantUnderZeroFixedFrame) {
    auto c = robot("spatial_7r.json");
    auto extended = c;
    // A trailing joint held at zero with an identity origin is a fixed frame.
    Joint fixed;
    fixed.name = "fixed";
    extended.joints.push_back(fixed);
    extended.link_bodies.push_back({});
    std::mt19937_64 gen(12);
    for (int i = 0; i < 50; ++i) {
        const JointConfig q = random_q(c, gen);
        JointConfig q8(8);
        q8 << q, 0.0;
        EXPECT_TRUE(fk(c, q) == fk(extended, q8));
    }
}

TEST(Jacobian, PlanarTwoLinkAtZero) {
    const auto c = robot("planar_2r.json");
    const JointConfig q = Eigen::Vector2d(0, 0);
    const Jacobian j = jacobian(c, q);
    Eigen::Matrix<double, 2, 2> lin;
    lin << 0, 0, 2, 1;
    EXPECT_LT((j.topRows<2>() - lin).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(j(5, 0), 1.0, 1e-15);
    EXPECT_NEAR(j(5, 1), 1.0, 1e-15);
    EXPECT_LT((j - fd_jacobian(c, q, 1e-6)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Jacobian, SingleJointAngularIsAxis) {
    KinematicChain c;
    Joint j;
    j.axis = Vec3(1, 2, 2) / 3.0;
    j.origin = Pose::translation(0.1, 0.2, 0.3);
    c.joints = {j};
    c.link_bodies = {{}};
    c.ee_offset = Pose::translation(0.5, 0, 0);
    c.ee_hull = jist::testing::cube_hull(0.05);
    for (double q : {-1.0, 0.0, 0.7, 2.5}) {
        Eigen::VectorXd v(1);
        v << q;
        const Jacobian jac = jacobian(c, v);
        EXPECT_EQ(Vec3(jac.block<3, 1>(3, 0)), j.axis);
    }
}

TEST(Jacobian, RandomConfigsMatchFiniteDifferences) {
    for (const char* f : {"planar_2r.json", "planar_3r.json", "spatial_7r.json"}) {
        const auto c = robot(f);
        std::mt19937_64 gen(13);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const JointConfig q = random_q(c, gen);
            worst = std::max(worst, (jacobian(c, q) - fd_jacobian(c, q, 1e-6)).cwiseAbs().maxCoeff());
        }
        EXPECT_LT(worst, 1e-4) << f;
    }
}

TEST(Jacobian, FirstOrderPredictionOfLinearMotion) {
    const auto c = robot("spatial_7r.json");
    std::mt19937_64 gen(14);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const JointConfig q = random_q(c, gen);
        JointConfig dq(c.dof());
        for (std::size_t k = 0; k < c.dof(); ++k) dq[k] = n(gen);
        dq *= 1e-6 / dq.norm();
        const Vec6 pred = jacobian(c, q) * dq;
        const Vec3 actual = fk(c, q + dq).t - fk(c, q).t;
        EXPECT_LT((actual - pred.head<3>()).norm(), 1e-4 * dq.norm());
    }
}

TEST(DlsPinv, OrthonormalInverseAndZeroMatrix) {
    std::mt19937_64 gen(15);
    Eigen::Matrix<double, 6, 6> a;
    for (int i = 0; i < 36; ++i) a(i) = std::normal_distribution<double>(0, 1)(gen);
    const Eigen::Matrix<double, 6, 6> orth = Eigen::HouseholderQR<Eigen::Matrix<double, 6, 6>>(a).householderQ();
    const Jacobian j = orth;
    EXPECT_LT((dls_pinv(j, 0.0) - orth.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((dls_pinv(Jacobian::Identity(6, 6), 0.0) - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-15);

    const Jacobian zero = Jacobian::Zero(6, 4);
    EXPECT_EQ(dls_pinv(zero, 0.1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DlsPinv, SingularUndampedIsError) {
    EXPECT_THROW(dls_pinv(Jacobian::Zero(6, 3), 0.0), NumericalError);
    EXPECT_THROW(dls_pinv(Jacobian::Zero(6, 3), -1.0), ContractError);
}

TEST(DlsPinv, MatchesSvdOracle) {
    std::mt19937_64 gen(16);
    for (int cols : {3, 6, 7}) {
        for (int trial = 0; trial < 20; ++trial) {
            Jacobian j(6, cols);
            for (int i = 0; i < j.size(); ++i) j(i) = std::normal_distribution<double>(0, 1)(gen);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const auto& s = svd.singularValues();
            Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(cols, 6);
            for (int k = 0; k < s.size(); ++k) sigma(k, k) = s[k] / (s[k] * s[k] + 0.05 * 0.05);
            const Eigen::MatrixXd oracle = svd.matrixV() * sigma * svd.matrixU().transpose();
            EXPECT_LT((dls_pinv(j, 0.05) - oracle).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(CollideConfig, EmptySceneAndEnclosedBase) {
    const auto c = robot("spatial_7r.json");
    const JointConfig q = JointConfig::Zero(7);
    EXPECT_FALSE(collide_config(c, q, std::vector<Obstacle>{}));
    const std::vector<Obstacle> enclosing{{"cage", Sphere{Vec3(0, 0, 0.05), 0.3}}};
    EXPECT_TRUE(collide_config(c, q, enclosing));
    EXPECT_FALSE(collide_config(c, q, enclosing, {"cage"}));
}

TEST(CollideConfig, MatchesExhaustivePairOracle) {
    const auto c = robot("spatial_7r.json");
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-0.8, 0.8), z(0.0, 1.2), r(0.03, 0.15);
    int hits = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const JointConfig q = random_q(c, gen);
        std::vector<Obstacle> scene;
        for (int k = 0; k < 3; ++k) {
            const Vec3 p(u(gen), u(gen), z(gen));
            if (k == 0) scene.push_back({"s", Sphere{p, r(gen)}});
            if (k == 1) scene.push_back({"c", Capsule{p, p + Vec3(u(gen), u(gen), 0) * 0.3, r(gen)}});
            if (k == 2) scene.push_back({"b", Box{p, p + Vec3(r(gen), r(gen), r(gen)), {}}});
        }
        // Oracle: every placed body against every obstacle, no broadphase.
        const FkResult f = fk_frames(c, q);
        std::vector<Shape> bodies = c.base_body;
        for (std::size_t i = 0; i < c.dof(); ++i)
            for (const auto& s : c.link_bodies[i]) bodies.push_back(transform_shape(s, f.frames[i]));
        for (const auto& s : c.ee_body) bodies.push_back(transform_shape(s, f.ee));
        bool oracle = false;
        for (const auto& b : bodies)
            for (const auto& o : scene) oracle = oracle || shapes_intersect(b, o.shape);
        oracle = oracle || self_collides(c, q);
        EXPECT_EQ(collide_config(c, q, scene), oracle);
        hits += oracle;
    }
    EXPECT_GT(hits, 20);
    EXPECT_LT(hits, 380);
}

TEST(CollideConfig, AttachedObjectMatchesCompositeChain) {
    const auto c = robot("spatial_7r.json");
    const Shape object_in_ee = Capsule{Vec3(0, 0, 0.04), Vec3(0, 0, 0.12), 0.03};
    const auto attached = attach_object(c, object_in_ee);
    auto composite = c;
    composite.ee_body = {c.ee_body[0], c.ee_body[1], c.ee_body[2], object_in_ee};
    std::mt19937_64 gen(18);
    std::uniform_real_distribution<double> u(-0.8, 0.8), z(0.0, 1.2);
    for (int trial = 0; trial < 200; ++trial) {
        const JointConfig q = random_q(c, gen);
        const Pose e = fk(c, q);
        std::vector<Obstacle> scene{{"obj", transform_shape(object_in_ee, e)},
                                    {"s", Sphere{Vec3(u(gen), u(gen), z(gen)), 0.1}}};
        EXPECT_EQ(collide_config(attached, q, scene, {"obj"}), collide_config(composite, q, scene, {"obj"}));
    }
}

TEST(RobotIo, RoundTripAndHash) {
    const auto c = robot("spatial_7r.json");
    const auto back = robot_from_json(robot_to_json(c));
    EXPECT_EQ(robot_to_json(back), robot_to_json(c));
    EXPECT_EQ(chain_hash(back), chain_hash(c));
    auto other = c;
    other.joints[3].hi -= 0.1;
    EXPECT_NE(chain_hash(other), chain_hash(c));
    EXPECT_FALSE(self_collides(c, JointConfig::Zero(7)));
}

TEST(RobotIo, RejectsInvalidSpecs) {
    auto j = robot_to_json(robot("planar_2r.json"));
    j["joints"][0]["limits"] = {1.0, -1.0};
    EXPECT_THROW(robot_from_json(j), FormatError);
    auto k = robot_to_json(robot("planar_2r.json"));
    k["version"] = 99;
    EXPECT_THROW(robot_from_json(k), FormatError);
}
