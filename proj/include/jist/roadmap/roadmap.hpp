#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jist/core/error.hpp"
#include "jist/core/rng.hpp"
#include "jist/geometry/disp_index.hpp"
#include "jist/geometry/segment.hpp"
#include "jist/kinematics/chain.hpp"
#include "jist/kinematics/robot_io.hpp"
#include "jist/steering/steering.hpp"

namespace jist {

using VertexId = std::uint32_t;

/// Neighbor count ceil(ln n), at least 1.
inline std::size_t roadmap_neighbor_count(std::size_t n) {
    if (n < 2) return 1;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(n)))));
}

/// Edge discretization: waypoint spacing min(5 cm, length / 4).
inline constexpr double kMaxEdgeSpacing = 0.05;
inline double edge_resolution(double length) { return std::min(kMaxEdgeSpacing, length / 4.0); }

inline std::uint32_t edge_pieces(const HullPoints& hull, const Pose& a, const Pose& b, double length) {
    if (length <= 0.0) return 1;
    return static_cast<std::uint32_t>(pieces_for_resolution(hull, a, b, length, edge_resolution(length)));
}

struct RoadmapEdge {
    VertexId to;
    std::uint32_t pieces;  // waypoint intervals
    double length;         // DISP between endpoints
};

struct RoadmapMeta {
    std::uint64_t n_target = 0;
    std::uint64_t seed = 0;
    std::uint64_t chain_hash = 0;
    double ee_velocity_bound = 0.0;  // m/s
};

/// Undirected k-nearest-neighbor graph over reachable end-effector poses.
/// Edge waypoints are not stored: both directions interpolate from the
/// lower-id endpoint so reversing one gives the other exactly.
class ReachabilityRoadmap {
public:
    ReachabilityRoadmap() = default;
    ReachabilityRoadmap(HullPoints hull, std::vector<Pose> vertices, RoadmapMeta meta)
        : hull_(std::move(hull)), vertices_(std::move(vertices)), adj_(vertices_.size()), meta_(meta) {}

    const HullPoints& hull() const { return hull_; }
    const RoadmapMeta& meta() const { return meta_; }
    std::size_t size() const { return vertices_.size(); }
    const Pose& pose(VertexId v) const { return vertices_.at(v); }
    const std::vector<Pose>& poses() const { return vertices_; }
    std::span<const RoadmapEdge> edges(VertexId v) const { return adj_.at(v); }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& a : adj_) n += a.size();
        return n / 2;
    }

    bool isolated(VertexId v) const { return adj_.at(v).empty(); }

    /// Adds (u, v) in both directions unless present.
    void add_edge(VertexId u, VertexId v) {
        require(u != v, "roadmap: self edge");
        for (const auto& e : adj_.at(u))
            if (e.to == v) return;
        const double len = disp_distance(hull_, vertices_[u], vertices_[v]);
        const auto [a, b] = std::minmax(u, v);
        const std::uint32_t pieces = edge_pieces(hull_, vertices_[a], vertices_[b], len);
        adj_[u].push_back({v, pieces, len});
        adj_[v].push_back({u, pieces, len});
    }

    void add_edge_raw(VertexId u, VertexId v, std::uint32_t pieces, double length) {
        adj_.at(u).push_back({v, pieces, length});
        adj_.at(v).push_back({u, pieces, length});
    }

    void sort_adjacency() {
        for (auto& a : adj_) std::sort(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.to < y.to; });
    }

    DispIndex make_index() const {
        std::vector<std::pair<DispIndex::Id, Pose>> items;
        items.reserve(vertices_.size());
        for (VertexId i = 0; i < vertices_.size(); ++i) items.emplace_back(i, vertices_[i]);
        return DispIndex(hull_, items);
    }

    bool operator==(const ReachabilityRoadmap& o) const {
        if (!(meta_.n_target == o.meta_.n_target && meta_.seed == o.meta_.seed &&
              meta_.chain_hash == o.meta_.chain_hash && meta_.ee_velocity_bound == o.meta_.ee_velocity_bound))
            return false;
        if (hull_.points != o.hull_.points || vertices_.size() != o.vertices_.size()) return false;
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            if (!(vertices_[i] == o.vertices_[i]) || adj_[i].size() != o.adj_[i].size()) return false;
            for (std::size_t j = 0; j < adj_[i].size(); ++j) {
                const auto &a = adj_[i][j], &b = o.adj_[i][j];
                if (a.to != b.to || a.pieces != b.pieces || a.length != b.length) return false;
            }
        }
        return true;
    }

private:
    HullPoints hull_;
    std::vector<Pose> vertices_;
    std::vector<std::vector<RoadmapEdge>> adj_;
    RoadmapMeta meta_;
};

/// Waypoints from `from` to `to` with `pieces` intervals, interpolated from
/// the lower id so the two directions are exact reverses.
inline std::vector<Pose> edge_waypoints(const Pose& from, const Pose& to, VertexId from_id, VertexId to_id,
                                        std::uint32_t pieces) {
    if (from_id <= to_id) return interpolate_waypoints(from, to, pieces);
    auto w = interpolate_waypoints(to, from, pieces);
    std::reverse(w.begin(), w.end());
    return w;
}

struct BuildOptions {
    std::size_t velocity_pairs = 200;  // random pairs for the ee velocity bound
    std::size_t max_sample_attempts_factor = 100;
};

/// Samples n self-collision-free configurations uniformly in the limits,
/// takes their end-effector poses as vertices and links each vertex to its
/// ceil(ln n) DISP-nearest neighbors. Deterministic for a fixed seed.
inline ReachabilityRoadmap build_roadmap(const KinematicChain& chain, std::size_t n, std::uint64_t seed,
                                         const BuildOptions& opt = {}) {
    require(n >= 2, "build_roadmap: n must be >= 2");
    chain.validate();
    Rng rng(mix_seed(seed, 1));
    std::vector<Pose> poses;
    poses.reserve(n);
    std::size_t attempts = 0;
    while (poses.size() < n) {
        if (++attempts > opt.max_sample_attempts_factor * n)
            throw ContractError("build_roadmap: too many self-colliding samples");
        const JointConfig q = sample_config(chain, rng);
        if (self_collides(chain, q)) continue;
        poses.push_back(fk(chain, q));
    }
    RoadmapMeta meta;
    meta.n_target = n;
    meta.seed = seed;
    meta.chain_hash = chain_hash(chain);
    meta.ee_velocity_bound =
        estimate_ee_velocity_bound(chain, static_cast<int>(opt.velocity_pairs), mix_seed(seed, 2), SteeringParams{});

    ReachabilityRoadmap rm(chain.ee_hull, std::move(poses), meta);
    const DispIndex index = rm.make_index();
    const std::size_t k = roadmap_neighbor_count(n);
    for (VertexId v = 0; v < n; ++v)
        for (const auto& h : index.knn(rm.pose(v), k, v)) rm.add_edge(v, h.id);
    rm.sort_adjacency();
    return rm;
}

// Binary format, little-endian:
//   magic "JISTRMAP", u32 version, u64 n_target, u64 seed, u64 chain_hash,
//   f64 ee_velocity_bound, u32 hull size, hull points (3 f64 each),
//   u64 vertex count, poses (t xyz, q wxyz), u64 edge count,
//   edges (u32 u, u32 v, u32 pieces, f64 length) with u < v ascending,
//   u64 FNV-1a checksum of everything before it.
inline constexpr std::uint32_t kRoadmapFormatVersion = 1;
inline constexpr char kRoadmapMagic[8] = {'J', 'I', 'S', 'T', 'R', 'M', 'A', 'P'};

namespace detail {

class ByteWriter {
public:
    template <class T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    std::string& data() { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}
    template <class T>
    T get() {
        if (pos_ + sizeof(T) > end_) throw FormatError("roadmap file truncated");
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::size_t remaining() const { return end_ - pos_; }

private:
    const std::string& buf_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

inline std::uint64_t fnv1a(const char* p, std::size_t n) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(p[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detail

inline std::string serialize_roadmap(const ReachabilityRoadmap& rm) {
    detail::ByteWriter w;
    w.bytes(kRoadmapMagic, 8);
    w.put(kRoadmapFormatVersion);
    w.put(rm.meta().n_target);
    w.put(rm.meta().seed);
    w.put(rm.meta().chain_hash);
    w.put(rm.meta().ee_velocity_bound);
    w.put(static_cast<std::uint32_t>(rm.hull().points.size()));
    for (const auto& p : rm.hull().points) {
        w.put(p.x());
        w.put(p.y());
        w.put(p.z());
    }
    w.put(static_cast<std::uint64_t>(rm.size()));
    for (const auto& p : rm.poses()) {
        for (int i = 0; i < 3; ++i) w.put(p.t[i]);
        w.put(p.q.w());
        w.put(p.q.x());
        w.put(p.q.y());
        w.put(p.q.z());
    }
    w.put(static_cast<std::uint64_t>(rm.edge_count()));
    for (VertexId u = 0; u < rm.size(); ++u)
        for (const auto& e : rm.edges(u)) {
            if (e.to < u) continue;
            w.put(u);
            w.put(e.to);
            w.put(e.pieces);
            w.put(e.length);
        }
    w.put(detail::fnv1a(w.data().data(), w.data().size()));
    return std::move(w.data());
}

/// Parses a serialized roadmap. When `expected_hash` is given the file must
/// have been built for that chain.
inline ReachabilityRoadmap deserialize_roadmap(const std::string& buf,
                                               std::optional<std::uint64_t> expected_hash = std::nullopt) {
    if (buf.size() < 8 + sizeof(std::uint64_t) || std::memcmp(buf.data(), kRoadmapMagic, 8) != 0)
        throw FormatError("roadmap: not a roadmap file (bad magic)");
    const std::size_t body = buf.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, buf.data() + body, sizeof(stored));
    detail::ByteReader r(buf, body);
    for (int i = 0; i < 8; ++i) r.get<char>();
    const auto version = r.get<std::uint32_t>();
    if (version != kRoadmapFormatVersion)
        throw FormatError("roadmap: unsupported format version " + std::to_string(version));
    if (stored != detail::fnv1a(buf.data(), body)) throw FormatError("roadmap: checksum mismatch (corrupt file)");
    RoadmapMeta meta;
    meta.n_target = r.get<std::uint64_t>();
    meta.seed = r.get<std::uint64_t>();
    meta.chain_hash = r.get<std::uint64_t>();
    meta.ee_velocity_bound = r.get<double>();
    if (expected_hash && *expected_hash != meta.chain_hash)
        throw FormatError("roadmap: built for a different robot (chain hash mismatch)");
    HullPoints hull;
    const auto m = r.get<std::uint32_t>();
    if (m == 0 || m * 24ULL > r.remaining()) throw FormatError("roadmap: bad hull size");
    for (std::uint32_t i = 0; i < m; ++i) {
        const double x = r.get<double>(), y = r.get<double>(), z = r.get<double>();
        hull.points.emplace_back(x, y, z);
    }
    const auto n = r.get<std::uint64_t>();
    if (n * 56 > r.remaining()) throw FormatError("roadmap: bad vertex count");
    std::vector<Pose> poses;
    poses.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Pose p;
        for (int k = 0; k < 3; ++k) p.t[k] = r.get<double>();
        const double qw = r.get<double>(), qx = r.get<double>(), qy = r.get<double>(), qz = r.get<double>();
        p.q = Quat(qw, qx, qy, qz);
        poses.push_back(p);
    }
    ReachabilityRoadmap rm(std::move(hull), std::move(poses), meta);
    const auto ne = r.get<std::uint64_t>();
    if (ne * 20 != r.remaining()) throw FormatError("roadmap: bad edge count");
    for (std::uint64_t i = 0; i < ne; ++i) {
        const auto u = r.get<std::uint32_t>(), v = r.get<std::uint32_t>(), pieces = r.get<std::uint32_t>();
        const double len = r.get<double>();
        if (u >= n || v >= n || u >= v || pieces == 0) throw FormatError("roadmap: invalid edge record");
        rm.add_edge_raw(u, v, pieces, len);
    }
    rm.sort_adjacency();
    return rm;
}

inline void save_roadmap(const ReachabilityRoadmap& rm, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    const std::string buf = serialize_roadmap(rm);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

inline ReachabilityRoadmap load_roadmap(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> expected_hash = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_roadmap(buf, expected_hash);
}

/// Temporary start and goal vertices layered over a base roadmap. Ids
/// [0, base.size()) are base vertices; the start follows, then the goals.
/// The base roadmap is never modified, so dropping the attachment detaches.
class QueryAttachment {
public:
    QueryAttachment(const ReachabilityRoadmap& base, const DispIndex& base_index, const Pose& start,
                    std::span<const Pose> goals)
        : base_(&base), extra_adj_(base.size()) {
        require(!goals.empty(), "attach_query: goal set is empty");
        const std::size_t k = roadmap_neighbor_count(base.size());
        start_id_ = static_cast<VertexId>(base.size());
        temp_poses_.push_back(start);
        for (const auto& g : goals) temp_poses_.push_back(g);
        temp_adj_.resize(temp_poses_.size());
        for (std::size_t i = 0; i < goals.size(); ++i) goal_ids_.push_back(start_id_ + 1 + static_cast<VertexId>(i));

        for (VertexId t = start_id_; t < start_id_ + temp_poses_.size(); ++t)
            for (const auto& h : base_index.knn(pose(t), k)) link(t, h.id);
        // The start also links to goals it is as close to as its k-th base
        // neighbor, so a start inside the goal set has a direct zero-length edge.
        const double reach = temp_adj_[0].empty() ? 0.0 : temp_adj_[0].back().length;
        for (VertexId g : goal_ids_)
            if (disp_distance(base.hull(), start, pose(g)) <= reach) link(start_id_, g);
    }

    const ReachabilityRoadmap& base() const { return *base_; }
    const HullPoints& hull() const { return base_->hull(); }
    std::size_t size() const { return base_->size() + temp_poses_.size(); }
    VertexId start_id() const { return start_id_; }
    const std::vector<VertexId>& goal_ids() const { return goal_ids_; }
    bool is_temp(VertexId v) const { return v >= start_id_; }

    const Pose& pose(VertexId v) const { return v < start_id_ ? base_->pose(v) : temp_poses_.at(v - start_id_); }

    /// Calls fn(edge) for every edge incident to v.
    template <class F>
    void for_each_edge(VertexId v, F&& fn) const {
        if (v < start_id_) {
            for (const auto& e : base_->edges(v)) fn(e);
            for (const auto& e : extra_adj_[v]) fn(e);
        } else {
            for (const auto& e : temp_adj_[v - start_id_]) fn(e);
        }
    }

    std::size_t temp_edge_count(VertexId t) const { return temp_adj_.at(t - start_id_).size(); }

    std::vector<Pose> waypoints(VertexId from, const RoadmapEdge& e) const {
        return edge_waypoints(pose(from), pose(e.to), from, e.to, e.pieces);
    }

private:
    void link(VertexId t, VertexId other) {
        auto& list = temp_adj_[t - start_id_];
        for (const auto& e : list)
            if (e.to == other) return;
        const double len = disp_distance(hull(), pose(t), pose(other));
        const auto [a, b] = std::minmax(t, other);
        const std::uint32_t pieces = edge_pieces(hull(), pose(a), pose(b), len);
        list.push_back({other, pieces, len});
        if (other < start_id_)
            extra_adj_[other].push_back({t, pieces, len});
        else
            temp_adj_[other - start_id_].push_back({t, pieces, len});
    }

    const ReachabilityRoadmap* base_;
    VertexId start_id_ = 0;
    std::vector<VertexId> goal_ids_;
    std::vector<Pose> temp_poses_;
    std::vector<std::vector<RoadmapEdge>> temp_adj_;
    std::vector<std::vector<RoadmapEdge>> extra_adj_;
};

inline QueryAttachment attach_query(const ReachabilityRoadmap& rm, const DispIndex& index, const Pose& start,
                                    std::span<const Pose> goals) {
    return QueryAttachment(rm, index, start, goals);
}

}  // namespace jist
