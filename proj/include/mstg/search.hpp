#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mstg/core.hpp"
#include "mstg/index.hpp"
#include "mstg/labeled_graph.hpp"
#include "mstg/predicate.hpp"

namespace mstg {

struct SearchParams {
    std::size_t k = 10;
    std::size_t L = 64;          // pool width
    std::size_t merge_cap = 0;   // merged out-degree cap; 0 means the index's m
    // Also draw (filtered) neighbors from the partially overlapping ancestors
    // of the covering nodes, and seed the search from every covering node.
    bool ancestor_layers = true;
};

/// The index variants built over one dataset.
class IndexSet {
public:
    IndexSet() = default;

    /// Builds the requested variants over `data`; the attribute domain is the
    /// set of all interval endpoints.
    static IndexSet build(std::shared_ptr<const Dataset> data, GraphParams params, std::span<const Variant> variants) {
        if (!data) throw invalid_input("IndexSet::build: null dataset");
        data->validate();
        AttrDomain domain = AttrDomain::from_intervals(data->ranges);
        if (domain.empty()) throw invalid_input("IndexSet::build: dataset has no objects");
        IndexSet set;
        for (Variant v : variants) {
            if (set.get(v)) continue;
            set.add(MstgIndex::construct(data, domain, params, v));
        }
        return set;
    }

    void add(MstgIndex index) {
        if (!indexes_.empty() && index.dataset_ptr() != front().dataset_ptr()) {
            throw invalid_input("IndexSet::add: all variants must share one dataset");
        }
        if (!indexes_.empty() && !(index.domain() == front().domain() && index.params() == front().params())) {
            throw invalid_input("IndexSet::add: all variants must share domain and parameters");
        }
        auto& slot = slots_[static_cast<std::size_t>(index.variant())];
        if (slot) throw invalid_input("IndexSet::add: variant already present");
        indexes_.push_back(std::make_unique<MstgIndex>(std::move(index)));
        slot = indexes_.back().get();
    }

    const MstgIndex* get(Variant v) const noexcept { return slots_[static_cast<std::size_t>(v)]; }

    std::vector<Variant> available() const {
        std::vector<Variant> out;
        for (Variant v : all_variants) {
            if (get(v)) out.push_back(v);
        }
        return out;
    }

    bool empty() const noexcept { return indexes_.empty(); }
    const Dataset& dataset() const { return front().dataset(); }
    const AttrDomain& domain() const { return front().domain(); }
    const GraphParams& params() const { return front().params(); }

private:
    const MstgIndex& front() const {
        if (indexes_.empty()) throw invalid_state("IndexSet: no index built");
        return *indexes_.front();
    }

    std::vector<std::unique_ptr<MstgIndex>> indexes_;
    std::array<const MstgIndex*, 3> slots_{};
};

/// Per-query scratch: memoized distances, the distance counter, and visited
/// tags. One context per thread.
class QueryContext {
public:
    /// Called with the id of every distance actually computed.
    std::function<void(ObjectId)> on_distance;

    void begin(const VectorSet& vectors, VectorView query) {
        if (query.size() != vectors.dim()) {
            throw invalid_input("query vector has dimensionality " + std::to_string(query.size()) + ", index has " +
                                std::to_string(vectors.dim()));
        }
        vectors_ = &vectors;
        query_ = query;
        if (stamp_.size() < vectors.size()) {
            stamp_.resize(vectors.size(), 0);
            memo_.resize(vectors.size(), 0.0f);
        }
        if (++current_ == 0) {
            std::fill(stamp_.begin(), stamp_.end(), 0);
            current_ = 1;
        }
        computations_ = 0;
    }

    float distance(ObjectId id) {
        if (stamp_[id] == current_) return memo_[id];
        stamp_[id] = current_;
        ++computations_;
        if (on_distance) on_distance(id);
        return memo_[id] = vectors_->distance(id, query_);
    }

    std::size_t distance_computations() const noexcept { return computations_; }
    VisitedSet& visited() noexcept { return visited_; }

private:
    const VectorSet* vectors_ = nullptr;
    VectorView query_;
    std::vector<float> memo_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t current_ = 0;
    std::size_t computations_ = 0;
    VisitedSet visited_;
};

/// Virtual union of the graphs of several tree nodes at one version. Only
/// objects of the queried version whose key lies in the query range are ever
/// yielded.
class MergedProvider {
public:
    MergedProvider(const MstgIndex& index, Rank version, RankRange range, std::vector<NodeRef> involved,
                   std::size_t cap)
        : index_(&index), epoch_(index.cursor().epoch_of(version)), range_(range), involved_(std::move(involved)),
          cap_(cap) {
        if (cap_ == 0) throw invalid_input("MergedProvider: cap must be positive");
    }

    bool is_member(ObjectId id) const noexcept {
        return index_->object_epoch(id) <= epoch_ && range_.contains(index_->key_rank(id));
    }

    /// u's live neighbor lists from the involved nodes in root-most-first
    /// order, members only, duplicates dropped, truncated to the cap.
    void neighbors(ObjectId u, std::vector<ObjectId>& out) const {
        if (!is_member(u)) {
            throw invalid_state("MergedProvider: object " + std::to_string(u) + " is not a member");
        }
        const Rank key = index_->key_rank(u);
        for (const NodeRef& node : involved_) {
            if (!node.range.contains(key)) continue;
            const auto& g = index_->graph(node.skeleton);
            for (const auto& e : g.edges(index_->slot(u, node.depth))) {
                if (!e.label.live_at(epoch_) || !is_member(e.to)) continue;
                if (std::find(out.begin(), out.end(), e.to) != out.end()) continue;
                out.push_back(e.to);
                if (out.size() >= cap_) return;
            }
        }
    }

    std::vector<ObjectId> merged_neighbors(ObjectId u) const {
        std::vector<ObjectId> out;
        neighbors(u, out);
        return out;
    }

    /// Entry points of the covering nodes, root-most first.
    std::vector<ObjectId> entry_points(bool all) const {
        std::vector<ObjectId> out;
        for (const NodeRef& node : involved_) {
            if (!node.covered || node.size == 0) continue;
            const ObjectId ep = index_->graph(node.skeleton).entry_point();
            if (!is_member(ep)) throw invalid_state("MergedProvider: entry point is not a member");
            out.push_back(ep);
            if (!all) break;
        }
        return out;
    }

    const std::vector<NodeRef>& involved() const noexcept { return involved_; }

private:
    const MstgIndex* index_;
    Epoch epoch_;
    RankRange range_;
    std::vector<NodeRef> involved_;
    std::size_t cap_;
};

inline void check_search_params(const SearchParams& p) {
    if (p.k == 0 || p.L < p.k) {
        throw invalid_input("search: require 1 <= k <= L (k=" + std::to_string(p.k) + ", L=" + std::to_string(p.L) + ")");
    }
}

/// Runs one sub-plan against its index variant; `ctx` must have begun the
/// query. Results ascend by distance.
inline SearchResult execute_sub_plan(const IndexSet& indexes, const SubPlan& sub, const SearchParams& params,
                                     QueryContext& ctx) {
    check_search_params(params);
    const MstgIndex* index = indexes.get(sub.variant);
    if (!index) {
        throw unsupported_predicate("index variant " + std::string(to_string(sub.variant)) + " was not built");
    }
    auto involved = index->decompose(sub.version, sub.tree_range, params.ancestor_layers);
    const std::size_t cap = params.merge_cap ? params.merge_cap : index->params().m;
    MergedProvider provider(*index, sub.version, sub.tree_range, std::move(involved), cap);
    const auto entries = provider.entry_points(params.ancestor_layers);
    if (entries.empty()) return SearchResult{{}, true};

    ctx.visited().reset(index->dataset().size());
    return knn_search([&](ObjectId u, std::vector<ObjectId>& out) { provider.neighbors(u, out); },
                      [&](ObjectId id) { return ctx.distance(id); }, std::span<const ObjectId>(entries), params.k,
                      params.L, ctx.visited());
}

struct RRResult {
    std::vector<Neighbor> items;  // ascending, unique ids, at most k
    bool partial = false;         // found < k
    QueryPlan plan;
    std::size_t distance_computations = 0;
};

/// Answers a range-range filtered k-ANN query: plans it, runs each sub-plan
/// with a shared distance memo, then merges by id.
inline RRResult rrann_search(const IndexSet& indexes, const RRPredicate& pred, VectorView query, Interval range,
                             const SearchParams& params, QueryContext& ctx) {
    check_search_params(params);
    RRResult out;
    const auto available = indexes.available();
    out.plan = plan_query(pred, range, indexes.domain(), available);
    ctx.begin(indexes.dataset().vectors, query);

    std::vector<Neighbor> merged;
    for (const auto& sub : out.plan.sub_plans) {
        auto r = execute_sub_plan(indexes, sub, params, ctx);
        merged.insert(merged.end(), r.items.begin(), r.items.end());
    }
    std::sort(merged.begin(), merged.end());
    std::vector<ObjectId> seen;
    for (const Neighbor& n : merged) {
        if (out.items.size() >= params.k) break;
        if (std::find(seen.begin(), seen.end(), n.id) != seen.end()) continue;
        seen.push_back(n.id);
        out.items.push_back(n);
    }
    out.partial = out.items.size() < params.k;
    out.distance_computations = ctx.distance_computations();
    return out;
}

}  // namespace mstg
