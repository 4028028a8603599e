#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mstg/core.hpp"
#include "mstg/labeled_graph.hpp"

namespace mstg {

/// The three index orientations.
///   T   : versions by ascending l, tree keyed on r; version x holds {l <= a_x}
///   Tp  : versions by descending r, tree keyed on l; version x holds {r >= a_x}
///   Tpp : versions by descending l, tree keyed on r; version x holds {l >= a_x}
enum class Variant : std::uint8_t { T = 0, Tp = 1, Tpp = 2 };

inline constexpr std::array<Variant, 3> all_variants = {Variant::T, Variant::Tp, Variant::Tpp};

inline std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::T: return "T";
        case Variant::Tp: return "T'";
        case Variant::Tpp: return "T''";
    }
    return "?";
}

inline Variant parse_variant(std::string_view s) {
    if (s == "T" || s == "t") return Variant::T;
    if (s == "T'" || s == "Tp" || s == "tp") return Variant::Tp;
    if (s == "T''" || s == "Tpp" || s == "tpp") return Variant::Tpp;
    throw invalid_input("unknown index variant '" + std::string(s) + "' (expected T, Tp or Tpp)");
}

struct RankRange {
    Rank lo = 1;
    Rank hi = 0;

    bool empty() const noexcept { return lo > hi; }
    bool contains(Rank r) const noexcept { return lo <= r && r <= hi; }
    Rank length() const noexcept { return empty() ? 0 : hi - lo + 1; }
    friend bool operator==(const RankRange&, const RankRange&) = default;
};

/// Translates public version ranks into insertion epochs. Ascending variants
/// use the rank itself; descending ones count from the top of the domain, so
/// labels stay "live iff b <= epoch <= e" in both cases.
class VersionCursor {
public:
    VersionCursor() = default;
    VersionCursor(bool descending, Rank domain_size) : descending_(descending), n_(domain_size) {}

    Epoch epoch_of(Rank version) const noexcept { return descending_ ? n_ + 1 - version : version; }
    Rank version_of(Epoch epoch) const noexcept { return descending_ ? n_ + 1 - epoch : epoch; }
    bool descending() const noexcept { return descending_; }

private:
    bool descending_ = false;
    Rank n_ = 0;
};

struct SkeletonNode {
    RankRange range;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t depth = 0;

    bool leaf() const noexcept { return left < 0; }
};

/// Segment tree over ranks [1, n]; node [l, r] splits at floor((l + r) / 2).
/// Node 0 is the root; children always follow their parent.
inline std::vector<SkeletonNode> build_skeleton(Rank domain_size) {
    if (domain_size < 1) throw invalid_input("build_skeleton: empty attribute domain");
    std::vector<SkeletonNode> nodes;
    nodes.reserve(static_cast<std::size_t>(2 * domain_size - 1));
    auto build = [&](auto&& self, Rank lo, Rank hi, std::int32_t depth) -> std::int32_t {
        const auto idx = static_cast<std::int32_t>(nodes.size());
        nodes.push_back(SkeletonNode{{lo, hi}, -1, -1, depth});
        if (lo < hi) {
            const Rank mid = lo + (hi - lo) / 2;
            const auto l = self(self, lo, mid, depth + 1);
            const auto r = self(self, mid + 1, hi, depth + 1);
            nodes[static_cast<std::size_t>(idx)].left = l;
            nodes[static_cast<std::size_t>(idx)].right = r;
        }
        return idx;
    };
    build(build, 1, domain_size, 0);
    return nodes;
}

/// ceil(log2(n)) for n >= 1.
inline int ceil_log2(Rank n) noexcept {
    int k = 0;
    while ((Rank{1} << k) < n) ++k;
    return k;
}

/// Root-to-leaf ranges that contain rank `key`.
inline std::vector<RankRange> insertion_path(Rank domain_size, Rank key) {
    if (domain_size < 1 || key < 1 || key > domain_size) {
        throw invalid_input("insertion_path: rank " + std::to_string(key) + " outside [1, " +
                            std::to_string(domain_size) + "]");
    }
    std::vector<RankRange> path;
    Rank lo = 1, hi = domain_size;
    while (true) {
        path.push_back({lo, hi});
        if (lo == hi) break;
        const Rank mid = lo + (hi - lo) / 2;
        if (key <= mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return path;
}

namespace detail {

struct RangeHit {
    RankRange range;
    std::int32_t depth;
};

inline void order_root_most_first(std::vector<RangeHit>& hits) {
    std::stable_sort(hits.begin(), hits.end(), [](const RangeHit& a, const RangeHit& b) {
        return a.depth < b.depth || (a.depth == b.depth && a.range.lo < b.range.lo);
    });
}

}  // namespace detail

/// Minimal set of disjoint tree ranges whose union is [lo, hi], ordered by
/// depth (root-most first) and left to right within a depth.
inline std::vector<RankRange> decompose_range(Rank domain_size, Rank lo, Rank hi) {
    if (domain_size < 1 || lo < 1 || hi > domain_size || lo > hi) {
        throw invalid_input("decompose_range: invalid rank range [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "] for domain size " + std::to_string(domain_size));
    }
    std::vector<detail::RangeHit> hits;
    auto rec = [&](auto&& self, Rank l, Rank r, std::int32_t depth) -> void {
        if (r < lo || l > hi) return;
        if (lo <= l && r <= hi) {
            hits.push_back({{l, r}, depth});
            return;
        }
        const Rank mid = l + (r - l) / 2;
        self(self, l, mid, depth + 1);
        self(self, mid + 1, r, depth + 1);
    };
    rec(rec, 1, domain_size, 0);
    detail::order_root_most_first(hits);
    std::vector<RankRange> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(h.range);
    return out;
}

/// One persistent version of a tree node. Children are shared between
/// versions; an insertion copies only the nodes on its root-to-leaf path.
struct TreeNode {
    std::int32_t skeleton = 0;  // position in the skeleton; identifies range and graph
    std::int32_t left = -1;
    std::int32_t right = -1;
    Epoch epoch = 0;            // epoch at which this version was created
    std::uint32_t size = 0;     // objects below this node in this version
};

/// A tree node as seen from one version, as returned by range decomposition.
struct NodeRef {
    std::int32_t skeleton = 0;
    RankRange range;
    std::int32_t depth = 0;
    std::uint32_t size = 0;
    bool covered = false;  // range lies inside the query range (false: partial ancestor)
};

struct BuildStats {
    std::vector<std::uint32_t> nodes_created;  // per insertion, in processing order
    std::size_t graph_insertions = 0;
};

/// A segment tree over one attribute orientation whose every node owns a
/// labeled proximity graph. The final tree plus edge labels encode all |A|
/// versions of the index.
class MstgIndex {
public:
    static MstgIndex construct(std::shared_ptr<const Dataset> data, AttrDomain domain, GraphParams params,
                               Variant variant) {
        MstgIndex idx(std::move(data), std::move(domain), params, variant);
        idx.assign_keys();
        idx.build_tree_and_graphs(true);
        return idx;
    }

    /// Reassembles an index from serialized graphs; the persistent tree and
    /// slot tables are recomputed from the dataset.
    static MstgIndex restore(std::shared_ptr<const Dataset> data, AttrDomain domain, GraphParams params,
                             Variant variant, std::vector<LabeledGraph> graphs) {
        MstgIndex idx(std::move(data), std::move(domain), params, variant);
        if (graphs.size() != idx.skeleton_.size()) {
            throw invalid_input("MstgIndex::restore: graph count does not match the tree");
        }
        for (const auto& g : graphs) {
            if (&g.vectors() != &idx.data_->vectors) {
                throw invalid_input("MstgIndex::restore: graphs must reference the dataset's vectors");
            }
        }
        idx.graphs_ = std::move(graphs);
        idx.assign_keys();
        idx.build_tree_and_graphs(false);
        return idx;
    }

    MstgIndex(MstgIndex&&) noexcept = default;
    MstgIndex& operator=(MstgIndex&&) noexcept = default;
    MstgIndex(const MstgIndex&) = delete;
    MstgIndex& operator=(const MstgIndex&) = delete;

    Variant variant() const noexcept { return variant_; }
    const AttrDomain& domain() const noexcept { return domain_; }
    const GraphParams& params() const noexcept { return params_; }
    const Dataset& dataset() const noexcept { return *data_; }
    const std::shared_ptr<const Dataset>& dataset_ptr() const noexcept { return data_; }
    const VersionCursor& cursor() const noexcept { return cursor_; }
    Rank version_count() const noexcept { return domain_.size(); }
    const BuildStats& stats() const noexcept { return stats_; }

    const std::vector<SkeletonNode>& skeleton() const noexcept { return skeleton_; }
    const LabeledGraph& graph(std::int32_t skeleton_id) const { return graphs_.at(static_cast<std::size_t>(skeleton_id)); }
    const std::vector<LabeledGraph>& graphs() const noexcept { return graphs_; }

    /// Rank of the attribute the tree is keyed on (r for T/Tpp, l for Tp).
    Rank key_rank(ObjectId id) const noexcept { return key_[id]; }
    Epoch object_epoch(ObjectId id) const noexcept { return epoch_[id]; }

    /// Version containing exactly the objects a query endpoint admits:
    /// T floors the value, Tp and Tpp ceil it.
    std::optional<Rank> locate_version(double value) const noexcept {
        return variant_ == Variant::T ? domain_.rank_floor(value) : domain_.rank_ceil(value);
    }

    /// Whether `id` is present at `version` with its key inside `range`.
    bool member(ObjectId id, Rank version, RankRange range) const noexcept {
        return epoch_[id] <= cursor_.epoch_of(version) && range.contains(key_[id]);
    }

    const TreeNode& root_at(Rank version) const {
        check_version(version);
        return nodes_[static_cast<std::size_t>(roots_[static_cast<std::size_t>(cursor_.epoch_of(version))])];
    }

    /// Objects held by a tree node at a version, ascending by id.
    std::vector<ObjectId> members(std::int32_t skeleton_id, Rank version) const {
        check_version(version);
        const auto& g = graph(skeleton_id);
        const Epoch e = cursor_.epoch_of(version);
        std::vector<ObjectId> out(g.ids().begin(), g.ids().begin() + static_cast<std::ptrdiff_t>(g.size_at(e)));
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Disjoint covering nodes of `range` in the tree of `version`, root-most
    /// first. Nodes that are empty at that version are omitted. With
    /// `with_ancestors`, the partially overlapping nodes visited on the way
    /// down are returned too (flag `covered` = false).
    std::vector<NodeRef> decompose(Rank version, RankRange range, bool with_ancestors = false) const {
        check_version(version);
        const Rank n = domain_.size();
        if (range.lo < 1 || range.hi > n || range.empty()) {
            throw invalid_input("MstgIndex::decompose: invalid rank range [" + std::to_string(range.lo) + ", " +
                                std::to_string(range.hi) + "]");
        }
        std::vector<NodeRef> out;
        auto rec = [&](auto&& self, std::int32_t node) -> void {
            if (node < 0) return;
            const TreeNode& t = nodes_[static_cast<std::size_t>(node)];
            if (t.size == 0) return;
            const SkeletonNode& s = skeleton_[static_cast<std::size_t>(t.skeleton)];
            if (s.range.hi < range.lo || s.range.lo > range.hi) return;
            const bool covered = range.lo <= s.range.lo && s.range.hi <= range.hi;
            if (covered || with_ancestors) out.push_back(NodeRef{t.skeleton, s.range, s.depth, t.size, covered});
            if (covered) return;
            self(self, t.left);
            self(self, t.right);
        };
        rec(rec, roots_[static_cast<std::size_t>(cursor_.epoch_of(version))]);
        std::stable_sort(out.begin(), out.end(), [](const NodeRef& a, const NodeRef& b) {
            return a.depth < b.depth || (a.depth == b.depth && a.range.lo < b.range.lo);
        });
        return out;
    }

    /// Position of `id` inside the graph of its tree node at `depth`.
    std::uint32_t slot(ObjectId id, std::int32_t depth) const noexcept {
        return slots_[static_cast<std::size_t>(id) * levels_ + static_cast<std::size_t>(depth)];
    }

    std::size_t tree_node_versions() const noexcept { return nodes_.size(); }
    const TreeNode& tree_node(std::int32_t i) const { return nodes_.at(static_cast<std::size_t>(i)); }

private:
    MstgIndex(std::shared_ptr<const Dataset> data, AttrDomain domain, GraphParams params, Variant variant)
        : data_(std::move(data)), domain_(std::move(domain)), params_(params), variant_(variant) {
        if (!data_) throw invalid_input("MstgIndex: null dataset");
        data_->validate();
        if (params_.m < 1 || params_.ef_construction < 1) {
            throw invalid_input("MstgIndex: m and ef_construction must be >= 1");
        }
        skeleton_ = build_skeleton(domain_.size());
        cursor_ = VersionCursor(variant_ != Variant::T, domain_.size());
        std::int32_t max_depth = 0;
        for (const auto& s : skeleton_) max_depth = std::max(max_depth, s.depth);
        levels_ = static_cast<std::size_t>(max_depth) + 1;
    }

    void check_version(Rank version) const {
        if (version < 1 || version > domain_.size()) {
            throw invalid_input("MstgIndex: version " + std::to_string(version) + " outside [1, " +
                                std::to_string(domain_.size()) + "]");
        }
    }

    void assign_keys() {
        const auto& ranges = data_->ranges;
        const Rank n = domain_.size();
        key_.resize(ranges.size());
        epoch_.resize(ranges.size());
        for (std::size_t i = 0; i < ranges.size(); ++i) {
            auto lo = domain_.rank_floor(ranges[i].lo);
            auto hi = domain_.rank_floor(ranges[i].hi);
            if (!lo || !hi || domain_.value(*lo) != ranges[i].lo || domain_.value(*hi) != ranges[i].hi) {
                throw invalid_input("MstgIndex: range of object " + std::to_string(i) +
                                    " is not inside the attribute domain");
            }
            switch (variant_) {
                case Variant::T:
                    key_[i] = *hi;
                    epoch_[i] = *lo;
                    break;
                case Variant::Tp:
                    key_[i] = *lo;
                    epoch_[i] = n + 1 - *hi;
                    break;
                case Variant::Tpp:
                    key_[i] = *hi;
                    epoch_[i] = n + 1 - *lo;
                    break;
            }
        }
    }

    std::int32_t copy_path(std::int32_t node, Rank key, Epoch epoch, std::uint32_t& created) {
        TreeNode t = nodes_[static_cast<std::size_t>(node)];
        const SkeletonNode& s = skeleton_[static_cast<std::size_t>(t.skeleton)];
        t.epoch = epoch;
        t.size += 1;
        if (!s.leaf()) {
            const Rank mid = s.range.lo + (s.range.hi - s.range.lo) / 2;
            if (key <= mid) {
                t.left = copy_path(t.left, key, epoch, created);
            } else {
                t.right = copy_path(t.right, key, epoch, created);
            }
        }
        nodes_.push_back(t);
        ++created;
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    // Sorts objects by (epoch, id), path-copies the tree for each insertion
    // and, when `insert_graphs`, feeds each path node's graph.
    void build_tree_and_graphs(bool insert_graphs) {
        const std::size_t n_obj = data_->size();
        const Rank n = domain_.size();

        // Version-0 tree: one empty node version per skeleton node.
        nodes_.clear();
        nodes_.reserve(skeleton_.size() + n_obj * levels_);
        for (std::size_t i = 0; i < skeleton_.size(); ++i) {
            const auto& s = skeleton_[i];
            nodes_.push_back(TreeNode{static_cast<std::int32_t>(i), s.left, s.right, 0, 0});
        }
        if (insert_graphs) {
            graphs_.clear();
            graphs_.reserve(skeleton_.size());
            for (std::size_t i = 0; i < skeleton_.size(); ++i) graphs_.emplace_back(data_->vectors, params_);
        }

        std::vector<ObjectId> order(n_obj);
        std::iota(order.begin(), order.end(), ObjectId{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](ObjectId a, ObjectId b) { return epoch_[a] < epoch_[b]; });

        slots_.assign(n_obj * levels_, 0);
        roots_.assign(static_cast<std::size_t>(n) + 1, 0);
        stats_ = BuildStats{};
        stats_.nodes_created.reserve(n_obj);

        VisitedSet visited;
        std::int32_t root = 0;
        Epoch current = 0;
        for (ObjectId id : order) {
            const Epoch e = epoch_[id];
            while (current < e) roots_[static_cast<std::size_t>(current++)] = root;
            std::uint32_t created = 0;
            root = copy_path(root, key_[id], e, created);
            stats_.nodes_created.push_back(created);

            std::int32_t s = 0;
            while (true) {
                const SkeletonNode& sk = skeleton_[static_cast<std::size_t>(s)];
                auto& g = graphs_[static_cast<std::size_t>(s)];
                if (insert_graphs) {
                    g.insert(id, e, visited);
                    ++stats_.graph_insertions;
                }
                auto local = g.local_of(id);
                if (!local) {
                    throw invalid_input("MstgIndex: object " + std::to_string(id) +
                                        " missing from the graph of its tree node");
                }
                slots_[static_cast<std::size_t>(id) * levels_ + static_cast<std::size_t>(sk.depth)] = *local;
                if (sk.leaf()) break;
                s = key_[id] <= skeleton_[static_cast<std::size_t>(sk.left)].range.hi ? sk.left : sk.right;
            }
        }
        while (current <= n) roots_[static_cast<std::size_t>(current++)] = root;

        if (!insert_graphs) {
            for (std::size_t i = 0; i < graphs_.size(); ++i) {
                const auto& ids = graphs_[i].ids();
                const auto& range = skeleton_[i].range;
                for (std::size_t j = 0; j < ids.size(); ++j) {
                    if (ids[j] >= n_obj || !range.contains(key_[ids[j]]) || graphs_[i].epochs()[j] != epoch_[ids[j]]) {
                        throw invalid_input("MstgIndex::restore: graph contents disagree with the dataset");
                    }
                }
            }
        }
    }

    std::shared_ptr<const Dataset> data_;
    AttrDomain domain_;
    GraphParams params_;
    Variant variant_;
    VersionCursor cursor_;

    std::vector<SkeletonNode> skeleton_;
    std::vector<LabeledGraph> graphs_;  // one per skeleton node
    std::vector<TreeNode> nodes_;       // persistent node versions
    std::vector<std::int32_t> roots_;   // root node version per epoch 0..|A|

    std::vector<Rank> key_;
    std::vector<Epoch> epoch_;
    std::vector<std::uint32_t> slots_;
    std::size_t levels_ = 1;
    BuildStats stats_;
};

}  // namespace mstg
