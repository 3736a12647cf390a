#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "jist/geometry/json_io.hpp"
#include "jist/kinematics/chain.hpp"

// Robot spec file, version 1:
// {
//   "format": "jist-robot", "version": 1, "name": "...",
//   "base_body": [shape...],
//   "joints": [{"name", "axis": [x,y,z], "origin": pose, "limits": [lo, hi] | "continuous": true, "max_velocity"}...],
//   "link_bodies": [[shape...] per joint],
//   "ee_offset": pose, "ee_hull": [[x,y,z]...], "ee_body": [shape...]
// }

namespace jist {

inline constexpr int kRobotFormatVersion = 1;

inline json_io::Json robot_to_json(const KinematicChain& c) {
    using json_io::to_json;
    json_io::Json joints = json_io::Json::array();
    json_io::Json links = json_io::Json::array();
    for (std::size_t i = 0; i < c.dof(); ++i) {
        const auto& j = c.joints[i];
        json_io::Json jj = {{"name", j.name}, {"axis", to_json(j.axis)}, {"origin", to_json(j.origin)}};
        if (j.continuous())
            jj["continuous"] = true;
        else
            jj["limits"] = {j.lo, j.hi};
        jj["max_velocity"] = j.max_velocity;
        joints.push_back(jj);
        links.push_back(to_json(c.link_bodies[i]));
    }
    return {{"format", "jist-robot"},  {"version", kRobotFormatVersion},  {"name", c.name},
            {"base_body", to_json(c.base_body)}, {"joints", joints},   {"link_bodies", links},
            {"ee_offset", to_json(c.ee_offset)}, {"ee_hull", to_json(c.ee_hull)}, {"ee_body", to_json(c.ee_body)}};
}

inline KinematicChain robot_from_json(const json_io::Json& j, const std::string& where = "robot") {
    using namespace json_io;
    const Json& fmt = field(j, "format", where);
    if (fmt != "jist-robot") fail(where + ".format", "expected \"jist-robot\"");
    const Json& ver = field(j, "version", where);
    if (!ver.is_number_integer() || ver.get<int>() != kRobotFormatVersion)
        fail(where + ".version", "unsupported robot format version");

    KinematicChain c;
    if (j.contains("name")) c.name = j["name"].get<std::string>();
    if (j.contains("base_body")) c.base_body = shapes(j["base_body"], where + ".base_body");
    const Json& joints = field(j, "joints", where);
    if (!joints.is_array() || joints.empty()) fail(where + ".joints", "expected a non-empty array");
    for (std::size_t i = 0; i < joints.size(); ++i) {
        const std::string w = where + ".joints[" + std::to_string(i) + "]";
        Joint jt;
        if (joints[i].contains("name")) jt.name = joints[i]["name"].get<std::string>();
        jt.axis = vec3(field(joints[i], "axis", w), w + ".axis");
        jt.origin = pose(field(joints[i], "origin", w), w + ".origin");
        const bool continuous = joints[i].value("continuous", false);
        if (continuous) {
            if (joints[i].contains("limits")) fail(w + ".limits", "continuous joints take no limits");
            jt = Joint::make_continuous(jt);
        } else {
            const Json& lim = field(joints[i], "limits", w);
            if (!lim.is_array() || lim.size() != 2) fail(w + ".limits", "expected [lo, hi]");
            jt.lo = number(lim[0], w + ".limits[0]");
            jt.hi = number(lim[1], w + ".limits[1]");
        }
        jt.max_velocity = number(field(joints[i], "max_velocity", w), w + ".max_velocity");
        c.joints.push_back(jt);
    }
    if (j.contains("link_bodies")) {
        const Json& lb = j["link_bodies"];
        if (!lb.is_array() || lb.size() != c.dof()) fail(where + ".link_bodies", "expected one shape list per joint");
        for (std::size_t i = 0; i < lb.size(); ++i)
            c.link_bodies.push_back(shapes(lb[i], where + ".link_bodies[" + std::to_string(i) + "]"));
    } else {
        c.link_bodies.assign(c.dof(), {});
    }
    c.ee_offset = pose(field(j, "ee_offset", where), where + ".ee_offset");
    c.ee_hull = hull(field(j, "ee_hull", where), where + ".ee_hull");
    if (j.contains("ee_body")) c.ee_body = shapes(j["ee_body"], where + ".ee_body");
    try {
        c.validate();
    } catch (const ContractError& e) {
        fail(where, e.what());
    }
    return c;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json_io::Json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json_io::Json::parse(text);
    } catch (const json_io::Json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << text;
}

inline KinematicChain load_robot(const std::filesystem::path& path) {
    return robot_from_json(parse_json_file(path), path.string());
}

inline void save_robot(const KinematicChain& c, const std::filesystem::path& path) {
    write_text_file(path, robot_to_json(c).dump(2) + "\n");
}

/// Joint configuration: a bare array or {"q": [...]}.
inline JointConfig joint_config_from_json(const json_io::Json& j, const std::string& where = "config") {
    const json_io::Json& arr = j.is_object() ? json_io::field(j, "q", where) : j;
    const std::string w = j.is_object() ? where + ".q" : where;
    if (!arr.is_array() || arr.empty()) json_io::fail(w, "expected a non-empty array of joint values");
    JointConfig q(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        q[static_cast<Eigen::Index>(i)] = json_io::number(arr[i], w + "[" + std::to_string(i) + "]");
    return q;
}

inline json_io::Json joint_config_to_json(const JointConfig& q) {
    return {{"q", std::vector<double>(q.data(), q.data() + q.size())}};
}

inline JointConfig load_joint_config(const std::filesystem::path& path) {
    return joint_config_from_json(parse_json_file(path), path.filename().string());
}

/// FNV-1a 64 over the canonical JSON encoding of the chain.
inline std::uint64_t chain_hash(const KinematicChain& c) {
    const std::string s = robot_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace jist
