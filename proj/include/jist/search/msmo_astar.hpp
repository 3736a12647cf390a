#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <unordered_map>
#include <vector>

#include "jist/geometry/disp_index.hpp"
#include "jist/kinematics/chain.hpp"
#include "jist/roadmap/roadmap.hpp"

namespace jist {

struct ClosedEntry {
    VertexId vertex = 0;
    int f1 = 0;      // colliding waypoints along the best path from the goals
    double g2 = 0.0; // DISP path length from the goals
    std::optional<VertexId> predecessor;  // none for goal roots
};

struct SearchStats {
    std::uint64_t expansions = 0;
    std::uint64_t edge_evaluations = 0;  // edges whose interior was collision checked
    std::uint64_t pose_checks = 0;
};

/// Vertices expanded by the multi-start search, in expansion order, with an
/// index for nearest-closed-vertex queries.
class ClosedList {
public:
    ClosedList() = default;

    const std::vector<ClosedEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    /// Entries [0, expanded_count()) are in expansion order; goal roots the
    /// search never reached follow them.
    std::size_t expanded_count() const { return expanded_; }
    std::size_t size() const { return entries_.size(); }

    const ClosedEntry* find(VertexId v) const {
        if (v >= slot_.size() || slot_[v] < 0) return nullptr;
        return &entries_[static_cast<std::size_t>(slot_[v])];
    }

    const Pose& pose(const ClosedEntry& e) const { return poses_[static_cast<std::size_t>(&e - entries_.data())]; }

    /// Closed entry whose pose is DISP-nearest to `e`, with the distance.
    std::pair<const ClosedEntry*, double> nearest(const Pose& e) const {
        require(!entries_.empty(), "closed list is empty");
        const auto hit = index_.nearest(e);
        return {&entries_[hit->id], hit->dist};
    }

    bool start_reached() const { return start_reached_; }
    int min_collisions() const { return min_collisions_; }
    /// Vertex ids of the best path from a goal root to the start.
    const std::vector<VertexId>& best_path() const { return best_path_; }
    const SearchStats& stats() const { return stats_; }

private:
    friend class MsmoSearch;

    std::vector<ClosedEntry> entries_;
    std::vector<Pose> poses_;
    std::vector<std::int32_t> slot_;
    DispIndex index_;
    std::size_t expanded_ = 0;
    bool start_reached_ = false;
    int min_collisions_ = -1;
    std::vector<VertexId> best_path_;
    SearchStats stats_;
};

/// Lexicographic A* from every goal root toward the start: minimizes the
/// number of colliding edge waypoints first, then g2 + DISP(e_u, e_start).
/// Each vertex is expanded at most once; ties go to the smaller vertex id.
/// Edge collision counts are computed on first use and cached.
class MsmoSearch {
public:
    MsmoSearch(const QueryAttachment& graph, const CollisionWorld& world, std::span<const Shape> ee_body)
        : g_(graph), world_(world), body_(ee_body.begin(), ee_body.end()), vertex_hit_(graph.size(), -1) {}

    ClosedList run() {
        const std::size_t n = g_.size();
        const Pose& start = g_.pose(g_.start_id());
        std::vector<int> f1(n, std::numeric_limits<int>::max());
        std::vector<double> g2(n, std::numeric_limits<double>::infinity());
        std::vector<std::optional<VertexId>> pred(n);
        std::vector<char> closed(n, 0);
        std::vector<double> h2(n, -1.0);
        auto h = [&](VertexId v) {
            if (h2[v] < 0.0) h2[v] = disp_distance(g_.hull(), g_.pose(v), start);
            return h2[v];
        };

        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
        for (VertexId r : g_.goal_ids()) {
            if (f1[r] == 0 && g2[r] == 0.0) continue;
            f1[r] = 0;
            g2[r] = 0.0;
            open.push({0, h(r), r});
        }

        ClosedList out;
        out.slot_.assign(n, -1);
        while (!open.empty()) {
            const Item top = open.top();
            open.pop();
            const VertexId u = top.v;
            if (closed[u]) continue;
            closed[u] = 1;
            out.slot_[u] = static_cast<std::int32_t>(out.entries_.size());
            out.entries_.push_back({u, f1[u], g2[u], pred[u]});
            out.poses_.push_back(g_.pose(u));
            ++out.stats_.expansions;
            if (u == g_.start_id()) {
                out.start_reached_ = true;
                break;
            }
            g_.for_each_edge(u, [&](const RoadmapEdge& e) {
                const VertexId v = e.to;
                if (closed[v]) return;
                const int nf1 = f1[u] + collisions(u, e, out.stats_);
                const double ng2 = g2[u] + e.length;
                if (nf1 < f1[v] || (nf1 == f1[v] && ng2 < g2[v])) {
                    f1[v] = nf1;
                    g2[v] = ng2;
                    pred[v] = u;
                    open.push({nf1, ng2 + h(v), v});
                }
            });
        }

        out.expanded_ = out.entries_.size();
        for (VertexId r : g_.goal_ids()) {
            if (out.slot_[r] >= 0) continue;
            out.slot_[r] = static_cast<std::int32_t>(out.entries_.size());
            out.entries_.push_back({r, 0, 0.0, std::nullopt});
            out.poses_.push_back(g_.pose(r));
        }

        std::vector<std::pair<DispIndex::Id, Pose>> items;
        items.reserve(out.entries_.size());
        for (std::size_t i = 0; i < out.entries_.size(); ++i)
            items.emplace_back(static_cast<DispIndex::Id>(i), out.poses_[i]);
        out.index_ = DispIndex(g_.hull(), items);
        if (out.start_reached_) {
            out.min_collisions_ = f1[g_.start_id()];
            std::optional<VertexId> v = g_.start_id();
            std::vector<VertexId> rev;
            while (v) {
                rev.push_back(*v);
                v = pred[*v];
            }
            out.best_path_.assign(rev.rbegin(), rev.rend());
        }
        return out;
    }

private:
    struct Item {
        int f1;
        double f2;
        VertexId v;
        bool operator>(const Item& o) const {
            if (f1 != o.f1) return f1 > o.f1;
            if (f2 != o.f2) return f2 > o.f2;
            return v > o.v;
        }
    };

    bool vertex_collides(VertexId v, SearchStats& st) {
        if (vertex_hit_[v] < 0) {
            ++st.pose_checks;
            vertex_hit_[v] = world_.hits_body(body_, g_.pose(v)) ? 1 : 0;
        }
        return vertex_hit_[v] == 1;
    }

    // Colliding waypoints entered when traversing u -> e.to: the interior
    // waypoints plus the destination vertex.
    int collisions(VertexId u, const RoadmapEdge& e, SearchStats& st) {
        const auto [a, b] = std::minmax(u, e.to);
        const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
        auto it = interior_.find(key);
        if (it == interior_.end()) {
            ++st.edge_evaluations;
            int count = 0;
            if (e.pieces > 1) {
                const auto w = edge_waypoints(g_.pose(a), g_.pose(b), a, b, e.pieces);
                for (std::size_t i = 1; i + 1 < w.size(); ++i) {
                    ++st.pose_checks;
                    if (world_.hits_body(body_, w[i])) ++count;
                }
            }
            it = interior_.emplace(key, count).first;
        }
        return it->second + (vertex_collides(e.to, st) ? 1 : 0);
    }

    const QueryAttachment& g_;
    const CollisionWorld& world_;
    std::vector<Shape> body_;
    std::vector<std::int8_t> vertex_hit_;
    std::unordered_map<std::uint64_t, int> interior_;
};

inline ClosedList msmo_astar(const QueryAttachment& graph, const CollisionWorld& world, std::span<const Shape> ee_body) {
    return MsmoSearch(graph, world, ee_body).run();
}

/// Cost-to-go estimate: g2 of the DISP-nearest closed vertex plus the DISP to it.
inline double heuristic_h(const Pose& e, const ClosedList& closed) {
    require(!closed.empty(), "heuristic_h: closed list is empty");
    const auto [entry, d] = closed.nearest(e);
    return entry->g2 + d;
}

/// CSV dump: vertex_id,f1,g2,predecessor (empty for goal roots).
inline void write_closed_csv(std::ostream& os, const ClosedList& closed) {
    os << "vertex_id,f1,g2,predecessor\n";
    os.precision(17);
    for (const auto& e : closed.entries()) {
        os << e.vertex << ',' << e.f1 << ',' << e.g2 << ',';
        if (e.predecessor) os << *e.predecessor;
        os << '\n';
    }
}

}  // namespace jist
