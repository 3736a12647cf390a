#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "jist/geometry/disp.hpp"

namespace jist {

/// Exact nearest-neighbor queries under DISP.
///
/// The displacement of the hull centroid is the mean of the per-point
/// displacements, so its norm never exceeds DISP. Items are indexed by their
/// transformed centroid in a kd-tree; a subtree is skipped only when its
/// centroid lower bound exceeds the current k-th best DISP. Results match a
/// brute-force scan ordered by (distance, id).
class DispIndex {
public:
    using Id = std::uint32_t;
    struct Hit {
        double dist;
        Id id;
        bool operator<(const Hit& o) const { return dist < o.dist || (dist == o.dist && id < o.id); }
    };

    DispIndex() = default;

    DispIndex(const HullPoints& hull, const std::vector<std::pair<Id, Pose>>& items) : hull_(hull) {
        require(!hull.empty(), "DispIndex: empty hull");
        const std::size_t m = hull.points.size();
        ids_.reserve(items.size());
        centroids_.reserve(items.size());
        points_.resize(items.size() * m);
        std::vector<Vec3> tmp;
        for (std::size_t i = 0; i < items.size(); ++i) {
            ids_.push_back(items[i].first);
            transform_hull(hull, items[i].second, tmp);
            Vec3 c = Vec3::Zero();
            for (std::size_t j = 0; j < m; ++j) {
                points_[i * m + j] = tmp[j];
                c += tmp[j];
            }
            centroids_.push_back(c / static_cast<double>(m));
        }
        perm_.resize(items.size());
        std::iota(perm_.begin(), perm_.end(), 0u);
        if (!items.empty()) build(0, static_cast<std::uint32_t>(items.size()));
    }

    std::size_t size() const { return ids_.size(); }

    /// k nearest items to `query`, ascending by (distance, id). `exclude`
    /// removes one id from consideration.
    std::vector<Hit> knn(const Pose& query, std::size_t k, std::optional<Id> exclude = std::nullopt) const {
        std::vector<Hit> best;
        if (k == 0 || ids_.empty()) return best;
        Query q{transform_hull(hull_, query), Vec3::Zero(), k, exclude, &best};
        for (const auto& p : q.pts) q.centroid += p;
        q.centroid /= static_cast<double>(q.pts.size());
        search(0, q);
        return best;
    }

    std::optional<Hit> nearest(const Pose& query) const {
        auto h = knn(query, 1);
        if (h.empty()) return std::nullopt;
        return h.front();
    }

private:
    struct Node {
        Vec3 lo, hi;
        std::uint32_t begin, end;
        std::int32_t left = -1, right = -1;
    };
    struct Query {
        std::vector<Vec3> pts;
        Vec3 centroid;
        std::size_t k;
        std::optional<Id> exclude;
        std::vector<Hit>* best;
    };

    static constexpr std::uint32_t kLeaf = 16;
    // Slack on the lower bound to absorb rounding in the centroid arithmetic.
    static constexpr double kSlack = 1e-12;

    std::int32_t build(std::uint32_t begin, std::uint32_t end) {
        Node n;
        n.begin = begin;
        n.end = end;
        n.lo = n.hi = centroids_[perm_[begin]];
        for (std::uint32_t i = begin; i < end; ++i) {
            n.lo = n.lo.cwiseMin(centroids_[perm_[i]]);
            n.hi = n.hi.cwiseMax(centroids_[perm_[i]]);
        }
        const auto idx = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(n);
        if (end - begin <= kLeaf) return idx;
        int axis = 0;
        (n.hi - n.lo).maxCoeff(&axis);
        const std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double ca = centroids_[a][axis];
                             const double cb = centroids_[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        const auto l = build(begin, mid);
        const auto r = build(mid, end);
        nodes_[idx].left = l;
        nodes_[idx].right = r;
        return idx;
    }

    static double box_dist(const Node& n, const Vec3& p) {
        const Vec3 d = (n.lo - p).cwiseMax(p - n.hi).cwiseMax(Vec3::Zero());
        return d.norm();
    }

    double bound(const Query& q) const {
        if (q.best->size() < q.k) return std::numeric_limits<double>::infinity();
        return q.best->back().dist;
    }

    void offer(Query& q, Hit h) const {
        auto& best = *q.best;
        if (best.size() == q.k && !(h < best.back())) return;
        best.insert(std::upper_bound(best.begin(), best.end(), h), h);
        if (best.size() > q.k) best.pop_back();
    }

    void search(std::int32_t ni, Query& q) const {
        const Node& n = nodes_[ni];
        if (box_dist(n, q.centroid) - kSlack > bound(q)) return;
        if (n.left < 0) {
            const std::size_t m = q.pts.size();
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                const std::uint32_t item = perm_[i];
                if (q.exclude && ids_[item] == *q.exclude) continue;
                if ((centroids_[item] - q.centroid).norm() - kSlack > bound(q)) continue;
                const double d = disp_points(q.pts, std::span<const Vec3>(points_.data() + item * m, m));
                offer(q, {d, ids_[item]});
            }
            return;
        }
        const double dl = box_dist(nodes_[n.left], q.centroid);
        const double dr = box_dist(nodes_[n.right], q.centroid);
        if (dl <= dr) {
            search(n.left, q);
            search(n.right, q);
        } else {
            search(n.right, q);
            search(n.left, q);
        }
    }

    HullPoints hull_;
    std::vector<Id> ids_;
    std::vector<Vec3> centroids_;
    std::vector<Vec3> points_;
    std::vector<std::uint32_t> perm_;
    std::vector<Node> nodes_;
};

}  // namespace jist
