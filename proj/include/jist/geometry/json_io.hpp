#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "jist/core/error.hpp"
#include "jist/geometry/disp.hpp"
#include "jist/geometry/shapes.hpp"

// JSON encodings shared by robot, scene, roadmap-query and result files.
//   pose:     {"t": [x, y, z], "q": [w, x, y, z]}
//   sphere:   {"type": "sphere", "center": [..], "radius": r}
//   capsule:  {"type": "capsule", "p0": [..], "p1": [..], "radius": r}
//   box:      {"type": "box", "min": [..], "max": [..], "frame": pose (optional)}

namespace jist::json_io {

using Json = nlohmann::json;

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
    throw FormatError(where + ": " + what);
}

inline const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(where, std::string("missing field \"") + key + "\"");
    return *it;
}

inline double number(const Json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

inline Vec3 vec3(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) fail(where, "expected an array of 3 numbers");
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]"), number(j[2], where + "[2]")};
}

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json to_json(const Pose& p) {
    return {{"t", to_json(p.t)}, {"q", Json::array({p.q.w(), p.q.x(), p.q.y(), p.q.z()})}};
}

inline Pose pose(const Json& j, const std::string& where) {
    const Vec3 t = vec3(field(j, "t", where), where + ".t");
    const Json& q = field(j, "q", where);
    if (!q.is_array() || q.size() != 4) fail(where + ".q", "expected [w, x, y, z]");
    Quat quat(number(q[0], where + ".q"), number(q[1], where + ".q"), number(q[2], where + ".q"),
              number(q[3], where + ".q"));
    if (quat.norm() < 1e-12) fail(where + ".q", "zero quaternion");
    Pose p;
    p.t = t;
    // Keep file values verbatim when already unit length so round trips are exact.
    p.q = std::abs(quat.norm() - 1.0) <= 1e-12 ? quat : quat.normalized();
    return p;
}

inline Json to_json(const Shape& s) {
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return {{"type", "sphere"}, {"center", to_json(v.center)}, {"radius", v.radius}};
            } else if constexpr (std::is_same_v<T, Capsule>) {
                return {{"type", "capsule"}, {"p0", to_json(v.p0)}, {"p1", to_json(v.p1)}, {"radius", v.radius}};
            } else {
                Json j = {{"type", "box"}, {"min", to_json(v.lo)}, {"max", to_json(v.hi)}};
                if (!(v.frame == Pose::identity())) j["frame"] = to_json(v.frame);
                return j;
            }
        },
        s);
}

inline Shape shape(const Json& j, const std::string& where) {
    const Json& type = field(j, "type", where);
    if (!type.is_string()) fail(where + ".type", "expected a string");
    const auto t = type.get<std::string>();
    Shape out;
    if (t == "sphere") {
        out = Sphere{vec3(field(j, "center", where), where + ".center"),
                     number(field(j, "radius", where), where + ".radius")};
    } else if (t == "capsule") {
        out = Capsule{vec3(field(j, "p0", where), where + ".p0"), vec3(field(j, "p1", where), where + ".p1"),
                      number(field(j, "radius", where), where + ".radius")};
    } else if (t == "box") {
        Box b{vec3(field(j, "min", where), where + ".min"), vec3(field(j, "max", where), where + ".max"), {}};
        if (j.contains("frame")) b.frame = pose(j["frame"], where + ".frame");
        out = b;
    } else {
        fail(where + ".type", "unknown shape type \"" + t + "\"");
    }
    try {
        validate_shape(out);
    } catch (const ContractError& e) {
        fail(where, e.what());
    }
    return out;
}

inline std::vector<Shape> shapes(const Json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array of shapes");
    std::vector<Shape> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(shape(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline Json to_json(const std::vector<Shape>& v) {
    Json a = Json::array();
    for (const auto& s : v) a.push_back(to_json(s));
    return a;
}

inline HullPoints hull(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of points");
    HullPoints h;
    for (std::size_t i = 0; i < j.size(); ++i) h.points.push_back(vec3(j[i], where + "[" + std::to_string(i) + "]"));
    return h;
}

inline Json to_json(const HullPoints& h) {
    Json a = Json::array();
    for (const auto& p : h.points) a.push_back(to_json(p));
    return a;
}

inline std::vector<Pose> poses(const Json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array of poses");
    std::vector<Pose> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(pose(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

/// Rejects keys outside `allowed` so typos in config files surface.
inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) fail(where, "unknown field \"" + it.key() + "\"");
    }
}

/// `j[key]` converted to T, or `def` when absent.
template <class T>
T get_or(const Json& j, const char* key, T def, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(where + "." + key, "wrong type");
    }
}

}  // namespace jist::json_io
