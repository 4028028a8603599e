#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mstg/core.hpp"

namespace mstg {

/// Edge (b, e) is live at every epoch x with b <= x <= e.
struct EdgeLabel {
    static constexpr Epoch open = std::numeric_limits<Epoch>::max();

    Epoch b = 1;
    Epoch e = open;

    bool live_at(Epoch x) const noexcept { return b <= x && x <= e; }
    friend bool operator==(const EdgeLabel&, const EdgeLabel&) = default;
};

struct GraphParams {
    std::size_t m = 16;                 // out-degree limit
    std::size_t ef_construction = 100;  // pool width of the insertion search

    friend bool operator==(const GraphParams&, const GraphParams&) = default;
};

/// Generation-tagged membership set; reset() is O(1) amortized.
class VisitedSet {
public:
    void reset(std::size_t n) {
        if (tags_.size() < n) tags_.resize(n, 0);
        if (++current_ == 0) {
            std::fill(tags_.begin(), tags_.end(), 0);
            current_ = 1;
        }
    }
    /// True if `i` was not yet in the set.
    bool insert(std::size_t i) noexcept {
        if (tags_[i] == current_) return false;
        tags_[i] = current_;
        return true;
    }
    bool contains(std::size_t i) const noexcept { return tags_[i] == current_; }

private:
    std::vector<std::uint32_t> tags_;
    std::uint32_t current_ = 0;
};

struct SearchResult {
    std::vector<Neighbor> items;  // ascending by (dist, id)
    bool partial = false;         // fewer than k items were reachable
};

/// Greedy best-first k-ANN search over an abstract neighbor provider.
///
/// `neighbors(u, out)` fills `out` with the ids adjacent to `u`; `dist(id)`
/// returns the distance from the query to `id`. Only ids produced by the
/// provider (or listed in `entries`) are ever passed to `dist`. The pool keeps
/// the `pool_width` closest ids seen so far; the search stops once every pool
/// member has been expanded. `visited` must be reset by the caller.
template <class NeighborsFn, class DistFn>
SearchResult knn_search(NeighborsFn&& neighbors, DistFn&& dist, std::span<const ObjectId> entries,
                        std::size_t k, std::size_t pool_width, VisitedSet& visited) {
    if (k == 0 || pool_width < k) {
        throw invalid_input("knn_search: require 1 <= k <= L (k=" + std::to_string(k) +
                            ", L=" + std::to_string(pool_width) + ")");
    }
    struct Slot {
        Neighbor n;
        bool expanded;
    };
    std::vector<Slot> pool;
    pool.reserve(pool_width + 1);

    // Returns the position the candidate landed at, or pool_width if rejected.
    auto offer = [&](const Neighbor& c) -> std::size_t {
        if (pool.size() == pool_width && !(c < pool.back().n)) return pool_width;
        auto it = std::lower_bound(pool.begin(), pool.end(), c,
                                   [](const Slot& s, const Neighbor& v) { return s.n < v; });
        const auto pos = static_cast<std::size_t>(it - pool.begin());
        pool.insert(it, Slot{c, false});
        if (pool.size() > pool_width) pool.pop_back();
        return pos;
    };

    for (ObjectId ep : entries) {
        if (visited.insert(ep)) offer(Neighbor{ep, dist(ep)});
    }

    std::vector<ObjectId> adj;
    std::size_t cursor = 0;
    while (cursor < pool.size()) {
        if (pool[cursor].expanded) {
            ++cursor;
            continue;
        }
        pool[cursor].expanded = true;
        const ObjectId u = pool[cursor].n.id;
        adj.clear();
        neighbors(u, adj);
        std::size_t next = cursor + 1;
        for (ObjectId v : adj) {
            if (!visited.insert(v)) continue;
            const std::size_t pos = offer(Neighbor{v, dist(v)});
            if (pos < next) next = pos;
        }
        cursor = next;
    }

    SearchResult out;
    const std::size_t take = std::min(k, pool.size());
    out.items.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.items.push_back(pool[i].n);
    out.partial = take < k;
    return out;
}

/// Single-entry convenience overload.
template <class NeighborsFn, class DistFn>
SearchResult knn_search(NeighborsFn&& neighbors, DistFn&& dist, ObjectId entry, std::size_t k,
                        std::size_t pool_width, VisitedSet& visited) {
    const ObjectId e[1] = {entry};
    return knn_search(std::forward<NeighborsFn>(neighbors), std::forward<DistFn>(dist),
                      std::span<const ObjectId>(e), k, pool_width, visited);
}

/// RNG neighbor selection. Candidates are scanned in ascending (dist, id)
/// order; c survives iff c.dist < pair_dist(c, s) for every kept s. At most
/// `m` survive.
template <class PairDist>
std::vector<Neighbor> rng_prune(std::vector<Neighbor> candidates, std::size_t m, PairDist&& pair_dist) {
    std::sort(candidates.begin(), candidates.end());
    std::vector<Neighbor> kept;
    kept.reserve(std::min(m, candidates.size()));
    for (const Neighbor& c : candidates) {
        if (kept.size() >= m) break;
        bool keep = true;
        for (const Neighbor& s : kept) {
            if (!(c.dist < pair_dist(c.id, s.id))) {
                keep = false;
                break;
            }
        }
        if (keep) kept.push_back(c);
    }
    return kept;
}

/// Plain adjacency snapshot: id -> ascending neighbor ids.
using Adjacency = std::map<ObjectId, std::vector<ObjectId>>;

/// Flat proximity graph whose edges carry epoch labels, so that a single
/// structure answers "what did the graph look like after epoch x" for every x.
/// Insertions must arrive in nondecreasing epoch order.
class LabeledGraph {
public:
    struct Edge {
        ObjectId to;
        EdgeLabel label;
        friend bool operator==(const Edge&, const Edge&) = default;
    };

    LabeledGraph(const VectorSet& vectors, GraphParams params) : vectors_(&vectors), params_(params) {
        if (params_.m == 0 || params_.ef_construction == 0) {
            throw invalid_input("LabeledGraph: m and ef_construction must be positive");
        }
    }

    LabeledGraph(const LabeledGraph& o)
        : vectors_(o.vectors_), params_(o.params_), ids_(o.ids_), epochs_(o.epochs_), adj_(o.adj_),
          local_(o.local_) {}
    LabeledGraph& operator=(const LabeledGraph& o) {
        if (this != &o) *this = LabeledGraph(o);
        return *this;
    }
    LabeledGraph(LabeledGraph&&) noexcept = default;
    LabeledGraph& operator=(LabeledGraph&&) noexcept = default;

    /// Inserts object `id` at epoch `x`: search with pool ef_construction over
    /// edges live at x, RNG-prune to m, link both ways with label (x, open),
    /// then re-prune any neighbor whose live degree exceeds m. A pruned edge
    /// gets its end set to x-1, or is dropped when it was created at x.
    void insert(ObjectId id, Epoch x, VisitedSet& visited) {
        if (x < 1) throw invalid_input("LabeledGraph::insert: epoch must be >= 1");
        if (id >= vectors_->size()) {
            throw invalid_input("LabeledGraph::insert: object " + std::to_string(id) + " has no vector");
        }
        if (local_.count(id)) {
            throw invalid_input("LabeledGraph::insert: object " + std::to_string(id) + " already present");
        }
        if (!epochs_.empty() && x < epochs_.back()) {
            throw invalid_input("LabeledGraph::insert: epochs must be nondecreasing");
        }

        const VectorView v = (*vectors_)[id];
        std::vector<Neighbor> chosen;
        if (!ids_.empty()) {
            visited.reset(vectors_->size());
            auto res = knn_search(
                [&](ObjectId u, std::vector<ObjectId>& out) { live_neighbors(local_.at(u), x, out); },
                [&](ObjectId u) { return vectors_->distance(u, v); }, ids_.front(),
                params_.ef_construction, params_.ef_construction, visited);
            chosen = rng_prune(std::move(res.items), params_.m,
                               [&](ObjectId a, ObjectId b) { return vectors_->distance(a, b); });
        }

        const auto self = static_cast<std::uint32_t>(ids_.size());
        ids_.push_back(id);
        epochs_.push_back(x);
        adj_.emplace_back();
        local_.emplace(id, self);

        adj_[self].reserve(chosen.size());
        for (const Neighbor& c : chosen) adj_[self].push_back(Edge{c.id, EdgeLabel{x, EdgeLabel::open}});

        for (const Neighbor& c : chosen) {
            const std::uint32_t u = local_.at(c.id);
            adj_[u].push_back(Edge{id, EdgeLabel{x, EdgeLabel::open}});
            if (live_degree(u, x) > params_.m) reprune(u, x);
        }
    }

    void insert(ObjectId id, Epoch x) {
        if (!scratch_) scratch_ = std::make_unique<VisitedSet>();
        insert(id, x, *scratch_);
    }

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    const GraphParams& params() const noexcept { return params_; }
    const VectorSet& vectors() const noexcept { return *vectors_; }

    /// First inserted object; it also has the smallest epoch.
    ObjectId entry_point() const {
        if (ids_.empty()) throw invalid_state("LabeledGraph: empty graph has no entry point");
        return ids_.front();
    }

    ObjectId id_at(std::uint32_t local) const noexcept { return ids_[local]; }
    Epoch epoch_at(std::uint32_t local) const noexcept { return epochs_[local]; }
    std::span<const Edge> edges(std::uint32_t local) const noexcept { return adj_[local]; }
    const std::vector<ObjectId>& ids() const noexcept { return ids_; }
    const std::vector<Epoch>& epochs() const noexcept { return epochs_; }

    std::optional<std::uint32_t> local_of(ObjectId id) const {
        auto it = local_.find(id);
        if (it == local_.end()) return std::nullopt;
        return it->second;
    }

    /// Number of nodes inserted at epochs <= x.
    std::size_t size_at(Epoch x) const noexcept {
        return static_cast<std::size_t>(std::upper_bound(epochs_.begin(), epochs_.end(), x) - epochs_.begin());
    }

    void live_neighbors(std::uint32_t local, Epoch x, std::vector<ObjectId>& out) const {
        for (const Edge& e : adj_[local]) {
            if (e.label.live_at(x)) out.push_back(e.to);
        }
    }

    std::size_t live_degree(std::uint32_t local, Epoch x) const noexcept {
        std::size_t d = 0;
        for (const Edge& e : adj_[local]) d += e.label.live_at(x) ? 1 : 0;
        return d;
    }

    /// The plain graph as it stood after epoch x.
    Adjacency induced(Epoch x) const {
        Adjacency g;
        for (std::uint32_t u = 0; u < ids_.size(); ++u) {
            if (epochs_[u] > x) break;
            auto& list = g[ids_[u]];
            live_neighbors(u, x, list);
            std::sort(list.begin(), list.end());
        }
        return g;
    }

    /// Label validity, degree cap at every epoch, edge endpoints present by
    /// the edge's first epoch.
    void check_invariants() const {
        std::vector<std::pair<Epoch, int>> events;
        for (std::uint32_t u = 0; u < ids_.size(); ++u) {
            events.clear();
            for (const Edge& e : adj_[u]) {
                if (e.label.b < 1 || e.label.b > e.label.e) {
                    throw invalid_state("LabeledGraph: invalid label on edge " + std::to_string(ids_[u]) +
                                        "->" + std::to_string(e.to));
                }
                auto w = local_.find(e.to);
                if (w == local_.end() || epochs_[w->second] > e.label.b || epochs_[u] > e.label.b) {
                    throw invalid_state("LabeledGraph: edge " + std::to_string(ids_[u]) + "->" +
                                        std::to_string(e.to) + " predates an endpoint");
                }
                events.emplace_back(e.label.b, +1);
                if (e.label.e != EdgeLabel::open) events.emplace_back(e.label.e + 1, -1);
            }
            // Ends sort before starts at the same epoch.
            std::sort(events.begin(), events.end());
            long live = 0;
            for (const auto& [x, delta] : events) {
                live += delta;
                if (live > static_cast<long>(params_.m)) {
                    throw invalid_state("LabeledGraph: node " + std::to_string(ids_[u]) +
                                        " exceeds the degree limit at epoch " + std::to_string(x));
                }
            }
        }
    }

    /// Rebuilds a graph from serialized parts; validates the result.
    static LabeledGraph restore(const VectorSet& vectors, GraphParams params, std::vector<ObjectId> ids,
                                std::vector<Epoch> epochs, std::vector<std::vector<Edge>> adj) {
        if (ids.size() != epochs.size() || ids.size() != adj.size()) {
            throw invalid_input("LabeledGraph::restore: inconsistent part sizes");
        }
        LabeledGraph g(vectors, params);
        g.ids_ = std::move(ids);
        g.epochs_ = std::move(epochs);
        g.adj_ = std::move(adj);
        for (std::uint32_t u = 0; u < g.ids_.size(); ++u) {
            if (g.ids_[u] >= vectors.size()) throw invalid_input("LabeledGraph::restore: id out of range");
            if (u > 0 && g.epochs_[u] < g.epochs_[u - 1]) {
                throw invalid_input("LabeledGraph::restore: epochs out of order");
            }
            if (!g.local_.emplace(g.ids_[u], u).second) {
                throw invalid_input("LabeledGraph::restore: duplicate id");
            }
        }
        g.check_invariants();
        return g;
    }

private:
    void reprune(std::uint32_t u, Epoch x) {
        const ObjectId uid = ids_[u];
        std::vector<Neighbor> live;
        for (const Edge& e : adj_[u]) {
            if (e.label.live_at(x)) live.push_back(Neighbor{e.to, vectors_->distance(uid, e.to)});
        }
        auto kept = rng_prune(std::move(live), params_.m,
                              [&](ObjectId a, ObjectId b) { return vectors_->distance(a, b); });
        std::vector<ObjectId> keep_ids;
        keep_ids.reserve(kept.size());
        for (const auto& k : kept) keep_ids.push_back(k.id);
        std::sort(keep_ids.begin(), keep_ids.end());

        auto& list = adj_[u];
        std::size_t w = 0;
        for (std::size_t r = 0; r < list.size(); ++r) {
            Edge e = list[r];
            if (e.label.live_at(x) && !std::binary_search(keep_ids.begin(), keep_ids.end(), e.to)) {
                if (e.label.b == x) continue;  // live range would be empty
                e.label.e = x - 1;
            }
            list[w++] = e;
        }
        list.resize(w);
    }

    const VectorSet* vectors_;
    GraphParams params_;
    std::vector<ObjectId> ids_;
    std::vector<Epoch> epochs_;
    std::vector<std::vector<Edge>> adj_;
    std::unordered_map<ObjectId, std::uint32_t> local_;
    std::unique_ptr<VisitedSet> scratch_;
};

}  // namespace mstg
