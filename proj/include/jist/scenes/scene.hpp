#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jist/core/error.hpp"
#include "jist/core/rng.hpp"
#include "jist/geometry/collision.hpp"
#include "jist/geometry/json_io.hpp"
#include "jist/kinematics/chain.hpp"
#include "jist/kinematics/robot_io.hpp"

// Scene file:
//   {"format": "jist-scene", "version": 1, "name": s,
//    "obstacles": [{"id": s, "shape": shape}...],
//    "target_object": {"id": s, "shape": shape (object frame), "pose": pose},   optional
//    "support_surfaces": [{"point": [..], "normal": [..], "obstacle_id": s}]}     optional
// Grasp-set file:
//   {"object_id": s, "grasps": [{"pose": pose (object frame), "approach": [..] (grasp frame)}...]}

namespace jist {

inline constexpr int kSceneFormatVersion = 1;

struct TargetObject {
    std::string id;
    Shape shape;  // in the object frame
    Pose pose;    // p_o

    Shape world_shape() const { return transform_shape(shape, pose); }
};

/// Plane an object can rest on; `obstacle_id` names the obstacle providing it.
struct SupportSurface {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    std::string obstacle_id;
};

struct Scene {
    std::string name;
    std::vector<Obstacle> obstacles;
    std::optional<TargetObject> target;
    std::vector<SupportSurface> supports;

    void validate() const {
        std::set<std::string> ids;
        for (const auto& o : obstacles) {
            require(!o.id.empty(), "scene: obstacle without id");
            require(ids.insert(o.id).second, "scene: duplicate obstacle id '" + o.id + "'");
            validate_shape(o.shape);
        }
        if (target) {
            require(!ids.count(target->id), "scene: target object id '" + target->id + "' collides with an obstacle id");
            validate_shape(target->shape);
        }
        for (const auto& s : supports) require(std::abs(s.normal.norm() - 1.0) < 1e-9, "scene: support normal must be unit");
    }

    /// Obstacles for arm collision checking, with the target object appended
    /// as an obstacle when `include_target` is set.
    std::vector<Obstacle> collision_obstacles(bool include_target = true) const {
        std::vector<Obstacle> out = obstacles;
        if (include_target && target) out.push_back({target->id, target->world_shape()});
        return out;
    }

    bool operator==(const Scene& o) const;
};

namespace detail {

inline bool shape_equal(const Shape& a, const Shape& b) {
    if (a.index() != b.index()) return false;
    return std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b);
            if constexpr (std::is_same_v<T, Sphere>) return x.center == y.center && x.radius == y.radius;
            if constexpr (std::is_same_v<T, Capsule>) return x.p0 == y.p0 && x.p1 == y.p1 && x.radius == y.radius;
            if constexpr (std::is_same_v<T, Box>) return x.lo == y.lo && x.hi == y.hi && x.frame == y.frame;
        },
        a);
}

}  // namespace detail

inline bool Scene::operator==(const Scene& o) const {
    if (name != o.name || obstacles.size() != o.obstacles.size() || target.has_value() != o.target.has_value() ||
        supports.size() != o.supports.size())
        return false;
    for (std::size_t i = 0; i < obstacles.size(); ++i)
        if (obstacles[i].id != o.obstacles[i].id || !detail::shape_equal(obstacles[i].shape, o.obstacles[i].shape))
            return false;
    if (target && (target->id != o.target->id || !detail::shape_equal(target->shape, o.target->shape) ||
                   !(target->pose == o.target->pose)))
        return false;
    for (std::size_t i = 0; i < supports.size(); ++i)
        if (supports[i].point != o.supports[i].point || supports[i].normal != o.supports[i].normal ||
            supports[i].obstacle_id != o.supports[i].obstacle_id)
            return false;
    return true;
}

inline json_io::Json scene_to_json(const Scene& s) {
    using json_io::Json;
    using json_io::to_json;
    Json obs = Json::array();
    for (const auto& o : s.obstacles) obs.push_back({{"id", o.id}, {"shape", to_json(o.shape)}});
    Json j = {{"format", "jist-scene"}, {"version", kSceneFormatVersion}, {"name", s.name}, {"obstacles", obs}};
    if (s.target)
        j["target_object"] = {{"id", s.target->id}, {"shape", to_json(s.target->shape)}, {"pose", to_json(s.target->pose)}};
    if (!s.supports.empty()) {
        Json sup = Json::array();
        for (const auto& p : s.supports)
            sup.push_back({{"point", to_json(p.point)}, {"normal", to_json(p.normal)}, {"obstacle_id", p.obstacle_id}});
        j["support_surfaces"] = sup;
    }
    return j;
}

inline Scene scene_from_json(const json_io::Json& j, const std::string& where = "scene") {
    using namespace json_io;
    const Json& fmt = field(j, "format", where);
    if (fmt != "jist-scene") fail(where + ".format", "expected \"jist-scene\"");
    const Json& ver = field(j, "version", where);
    if (!ver.is_number_integer() || ver.get<int>() != kSceneFormatVersion)
        fail(where + ".version", "unsupported scene format version");
    Scene s;
    if (j.contains("name")) s.name = j["name"].get<std::string>();
    const Json& obs = field(j, "obstacles", where);
    if (!obs.is_array()) fail(where + ".obstacles", "expected an array");
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const std::string w = where + ".obstacles[" + std::to_string(i) + "]";
        const Json& id = field(obs[i], "id", w);
        if (!id.is_string()) fail(w + ".id", "expected a string");
        s.obstacles.push_back({id.get<std::string>(), shape(field(obs[i], "shape", w), w + ".shape")});
    }
    if (j.contains("target_object")) {
        const std::string w = where + ".target_object";
        const Json& t = j["target_object"];
        const Json& id = field(t, "id", w);
        if (!id.is_string()) fail(w + ".id", "expected a string");
        s.target = TargetObject{id.get<std::string>(), shape(field(t, "shape", w), w + ".shape"),
                                pose(field(t, "pose", w), w + ".pose")};
    }
    if (j.contains("support_surfaces")) {
        const Json& sup = j["support_surfaces"];
        if (!sup.is_array()) fail(where + ".support_surfaces", "expected an array");
        for (std::size_t i = 0; i < sup.size(); ++i) {
            const std::string w = where + ".support_surfaces[" + std::to_string(i) + "]";
            SupportSurface p;
            p.point = vec3(field(sup[i], "point", w), w + ".point");
            p.normal = vec3(field(sup[i], "normal", w), w + ".normal");
            if (p.normal.norm() < 1e-12) fail(w + ".normal", "zero normal");
            p.normal.normalize();
            if (sup[i].contains("obstacle_id")) p.obstacle_id = sup[i]["obstacle_id"].get<std::string>();
            s.supports.push_back(p);
        }
    }
    try {
        s.validate();
    } catch (const ContractError& e) {
        fail(where, e.what());
    }
    return s;
}

inline Scene load_scene(const std::filesystem::path& path) {
    return scene_from_json(parse_json_file(path), path.filename().string());
}

inline void save_scene(const Scene& s, const std::filesystem::path& path) {
    write_text_file(path, scene_to_json(s).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Procedural clutter

struct KeepOut {
    Vec3 center;
    double radius;
};

struct ClutterOptions {
    Aabb bounds{Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)};
    double fraction = 0.0;      // target occupied volume / bounds volume
    double min_size = 0.04;     // primitive extent range, m
    double max_size = 0.12;
    std::uint64_t seed = 0;
    std::vector<KeepOut> keep_out;  // regions no primitive may touch
    int max_retries = 2000;         // per primitive
};

struct ClutterResult {
    Scene scene;
    double achieved_fraction = 0.0;
};

/// Non-overlapping random boxes, spheres and capsules inside `bounds`,
/// added one at a time from a single seeded stream until their total
/// volume reaches the requested fraction. A larger fraction with the same
/// seed extends the obstacle list of a smaller one.
inline ClutterResult generate_clutter_scene(const ClutterOptions& opt) {
    require(opt.fraction >= 0.0 && opt.fraction <= 0.5, "generate_clutter_scene: fraction must lie in [0, 0.5]");
    require(opt.min_size > 0.0 && opt.min_size <= opt.max_size, "generate_clutter_scene: invalid size range");
    const Vec3 ext = opt.bounds.hi - opt.bounds.lo;
    require((ext.array() > opt.max_size).all(), "generate_clutter_scene: bounds smaller than max primitive size");
    const double total = ext.prod();
    ClutterResult out;
    out.scene.name = "clutter";
    Rng rng(opt.seed);
    double volume = 0.0;
    while (volume < opt.fraction * total) {
        bool placed = false;
        for (int attempt = 0; attempt < opt.max_retries && !placed; ++attempt) {
            const int kind = static_cast<int>(rng.index(3));
            const double a = rng.uniform(opt.min_size, opt.max_size);
            const double b = rng.uniform(opt.min_size, opt.max_size);
            const double c = rng.uniform(opt.min_size, opt.max_size);
            const double half = 0.5 * opt.max_size;
            const Vec3 center(rng.uniform(opt.bounds.lo.x() + half, opt.bounds.hi.x() - half),
                              rng.uniform(opt.bounds.lo.y() + half, opt.bounds.hi.y() - half),
                              rng.uniform(opt.bounds.lo.z() + half, opt.bounds.hi.z() - half));
            const double yaw = rng.uniform(-3.14159265358979323846, 3.14159265358979323846);
            Shape s;
            if (kind == 0) {
                const Vec3 h(0.5 * a, 0.5 * b, 0.5 * c);
                s = Box{-h, h, Pose(center, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())))};
            } else if (kind == 1) {
                s = Sphere{center, 0.5 * a};
            } else {
                const double r = 0.25 * std::min(a, b);
                const Vec3 axis = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * Vec3::UnitX();
                const Vec3 half_seg = 0.5 * std::max(0.0, c - 2 * r) * axis;
                s = Capsule{center - half_seg, center + half_seg, r};
            }
            bool ok = true;
            for (const auto& k : opt.keep_out)
                if (shapes_intersect(s, Shape{Sphere{k.center, k.radius}})) ok = false;
            for (std::size_t i = 0; ok && i < out.scene.obstacles.size(); ++i)
                if (shapes_intersect(s, out.scene.obstacles[i].shape)) ok = false;
            if (!ok) continue;
            out.scene.obstacles.push_back({"clutter_" + std::to_string(out.scene.obstacles.size()), s});
            volume += shape_volume(s);
            placed = true;
        }
        if (!placed)
            throw ContractError("generate_clutter_scene: placement failed after retries; achieved fraction " +
                                std::to_string(volume / total));
    }
    out.achieved_fraction = volume / total;
    return out;
}

// ---------------------------------------------------------------------------
// Goal sets

struct Grasp {
    Pose pose;                          // end-effector pose in the object frame
    Vec3 approach = Vec3::UnitZ();      // motion toward the object, grasp frame
};

struct GraspSet {
    std::string object_id;
    std::vector<Grasp> grasps;
};

inline GraspSet grasp_set_from_json(const json_io::Json& j, const std::string& where = "grasps") {
    using namespace json_io;
    GraspSet g;
    const Json& id = field(j, "object_id", where);
    if (!id.is_string()) fail(where + ".object_id", "expected a string");
    g.object_id = id.get<std::string>();
    const Json& arr = field(j, "grasps", where);
    if (!arr.is_array() || arr.empty()) fail(where + ".grasps", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string w = where + ".grasps[" + std::to_string(i) + "]";
        Grasp gr;
        gr.pose = pose(field(arr[i], "pose", w), w + ".pose");
        gr.approach = vec3(field(arr[i], "approach", w), w + ".approach");
        if (gr.approach.norm() < 1e-12) fail(w + ".approach", "zero approach vector");
        gr.approach.normalize();
        g.grasps.push_back(gr);
    }
    return g;
}

inline json_io::Json grasp_set_to_json(const GraspSet& g) {
    json_io::Json arr = json_io::Json::array();
    for (const auto& gr : g.grasps) arr.push_back({{"pose", json_io::to_json(gr.pose)}, {"approach", json_io::to_json(gr.approach)}});
    return {{"object_id", g.object_id}, {"grasps", arr}};
}

inline GraspSet load_grasp_set(const std::filesystem::path& path) {
    return grasp_set_from_json(parse_json_file(path), path.filename().string());
}

struct GoalSpec {
    std::vector<Pose> goal_poses;      // E_goal
    std::vector<Pose> final_poses;     // grasp or placement pose each goal backs off from
    std::vector<std::size_t> sources;  // index into the input list
    std::string provenance;
};

/// Grasps in world frame given the object pose.
inline std::vector<Grasp> world_grasps(const GraspSet& g, const Pose& object_pose) {
    std::vector<Grasp> out;
    for (const auto& gr : g.grasps) out.push_back({object_pose * gr.pose, gr.approach});
    return out;
}

/// Each grasp backed off by `offset` against its approach direction;
/// pre-grasps where the end-effector body collides are dropped.
inline GoalSpec make_pregrasp_goals(std::span<const Grasp> grasps, double offset, std::span<const Shape> ee_body,
                                    std::span<const Obstacle> scene) {
    require(!grasps.empty(), "make_pregrasp_goals: no grasps");
    require(offset >= 0.0, "make_pregrasp_goals: offset must be >= 0");
    const CollisionWorld world(scene);
    GoalSpec g;
    g.provenance = "pregrasp offset " + std::to_string(offset);
    for (std::size_t i = 0; i < grasps.size(); ++i) {
        const Pose pre = grasps[i].pose * Pose::translation(-offset * grasps[i].approach);
        if (world.hits_body(ee_body, pre)) continue;
        g.goal_poses.push_back(pre);
        g.final_poses.push_back(grasps[i].pose);
        g.sources.push_back(i);
    }
    require(!g.goal_poses.empty(), "make_pregrasp_goals: every pre-grasp collides (empty goal set)");
    return g;
}

/// Each placement raised by `lift` along the support normal; colliding
/// results are dropped.
inline GoalSpec make_preplacement_goals(std::span<const Pose> placements, double lift, const Vec3& normal,
                                        std::span<const Shape> ee_body, std::span<const Obstacle> scene) {
    require(!placements.empty(), "make_preplacement_goals: no placements");
    require(std::abs(normal.norm() - 1.0) < 1e-9, "make_preplacement_goals: normal must be unit");
    const CollisionWorld world(scene);
    GoalSpec g;
    g.provenance = "preplacement lift " + std::to_string(lift);
    for (std::size_t i = 0; i < placements.size(); ++i) {
        const Pose pre = lift == 0.0 ? placements[i] : Pose::translation(lift * normal) * placements[i];
        if (world.hits_body(ee_body, pre)) continue;
        g.goal_poses.push_back(pre);
        g.final_poses.push_back(placements[i]);
        g.sources.push_back(i);
    }
    require(!g.goal_poses.empty(), "make_preplacement_goals: every placement collides (empty goal set)");
    return g;
}

/// Largest d (to `resolution`) such that the target object's bounding box
/// grown by d on every side touches no obstacle other than its supports.
inline double object_clearance(const Scene& s, double max_d = 0.5, double resolution = 1e-4) {
    require(s.target.has_value(), "object_clearance: scene has no target object");
    std::set<std::string> skip;
    for (const auto& p : s.supports) skip.insert(p.obstacle_id);
    const Aabb b = bounds(s.target->world_shape());
    auto free_at = [&](double d) {
        const Shape grown = Box{b.lo - Vec3::Constant(d), b.hi + Vec3::Constant(d), Pose{}};
        for (const auto& o : s.obstacles)
            if (!skip.count(o.id) && shapes_intersect(grown, o.shape)) return false;
        return true;
    };
    if (!free_at(0.0)) return 0.0;
    if (free_at(max_d)) return max_d;
    double lo = 0.0, hi = max_d;
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        (free_at(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace jist
