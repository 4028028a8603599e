#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mstg/core.hpp"
#include "mstg/index.hpp"

namespace mstg {

/// Atomic range-range conditions between an object [l, r] and a query [lq, rq].
enum class Atom : std::uint8_t {
    left_overlap = 1,   // c1: l <= lq <= r <= rq
    contained = 2,      // c2: l <= lq <= rq <= r   (query inside object)
    right_overlap = 4,  // c3: lq <= l <= rq <= r
    containing = 8,     // c4: lq <= l <= r <= rq   (object inside query)
    before = 16,        // object ends before the query starts: r < lq
    after = 32,         // object starts after the query ends: l > rq
};

/// Raised when a predicate cannot be served by the indexes at hand.
class unsupported_predicate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Disjunction of atoms.
class RRPredicate {
public:
    static constexpr std::uint8_t atoms_mask = 0x0f;
    static constexpr std::uint8_t disjoint_mask = 0x30;

    RRPredicate() = default;
    explicit RRPredicate(std::uint8_t mask) : mask_(mask) {
        if (mask_ == 0 || (mask_ & ~(atoms_mask | disjoint_mask)) != 0) {
            throw invalid_input("RRPredicate: invalid atom mask " + std::to_string(mask));
        }
    }
    RRPredicate(std::initializer_list<Atom> atoms) {
        for (Atom a : atoms) mask_ |= static_cast<std::uint8_t>(a);
        if (mask_ == 0) throw invalid_input("RRPredicate: empty predicate");
    }

    static RRPredicate intersects() { return RRPredicate(atoms_mask); }

    std::uint8_t mask() const noexcept { return mask_; }
    bool has(Atom a) const noexcept { return (mask_ & static_cast<std::uint8_t>(a)) != 0; }

    RRPredicate operator|(RRPredicate o) const { return RRPredicate(static_cast<std::uint8_t>(mask_ | o.mask_)); }
    friend bool operator==(const RRPredicate&, const RRPredicate&) = default;

    std::string to_string() const {
        static constexpr std::array<const char*, 6> names = {"c1", "c2", "c3", "c4", "before", "after"};
        std::string s;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (mask_ & (1u << i)) {
                if (!s.empty()) s += ',';
                s += names[i];
            }
        }
        return s;
    }

private:
    std::uint8_t mask_ = 0;
};

/// Reference semantics of a predicate.
inline bool eval_predicate(const RRPredicate& pred, Interval obj, Interval q) noexcept {
    const double l = obj.lo, r = obj.hi, lq = q.lo, rq = q.hi;
    if (pred.has(Atom::left_overlap) && l <= lq && lq <= r && r <= rq) return true;
    if (pred.has(Atom::contained) && l <= lq && lq <= rq && rq <= r) return true;
    if (pred.has(Atom::right_overlap) && lq <= l && l <= rq && rq <= r) return true;
    if (pred.has(Atom::containing) && lq <= l && l <= r && r <= rq) return true;
    if (pred.has(Atom::before) && r < lq) return true;
    if (pred.has(Atom::after) && l > rq) return true;
    return false;
}

/// Allen base relation "query REL object" reduced to the atom it specializes.
inline RRPredicate map_allen_relation(std::string_view rel) {
    if (rel == "m" || rel == "o") return {Atom::right_overlap};
    if (rel == "mi" || rel == "oi") return {Atom::left_overlap};
    if (rel == "s" || rel == "d" || rel == "f" || rel == "=") return {Atom::contained};
    if (rel == "si" || rel == "di" || rel == "fi") return {Atom::containing};
    if (rel == "<") return {Atom::after};
    if (rel == ">") return {Atom::before};
    throw invalid_input("unknown Allen relation '" + std::string(rel) + "'");
}

/// Parses the textual predicate syntax: comma-joined terms, each one of
/// c1..c4, overlap-left, contained, overlap-right, containing, intersects,
/// before, after, or an Allen relation name.
inline RRPredicate parse_predicate(std::string_view text) {
    std::uint8_t mask = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view tok = text.substr(start, end - start);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        if (tok.empty()) throw invalid_input("predicate: empty term in '" + std::string(text) + "'");
        if (tok == "c1" || tok == "overlap-left") {
            mask |= static_cast<std::uint8_t>(Atom::left_overlap);
        } else if (tok == "c2" || tok == "contained") {
            mask |= static_cast<std::uint8_t>(Atom::contained);
        } else if (tok == "c3" || tok == "overlap-right") {
            mask |= static_cast<std::uint8_t>(Atom::right_overlap);
        } else if (tok == "c4" || tok == "containing") {
            mask |= static_cast<std::uint8_t>(Atom::containing);
        } else if (tok == "intersects") {
            mask |= RRPredicate::atoms_mask;
        } else if (tok == "before") {
            mask |= static_cast<std::uint8_t>(Atom::before);
        } else if (tok == "after") {
            mask |= static_cast<std::uint8_t>(Atom::after);
        } else {
            mask |= map_allen_relation(tok).mask();
        }
        start = end + 1;
    }
    return RRPredicate(mask);
}

/// One index search: objects present in `variant` at `version` whose tree
/// key rank lies in `tree_range`.
struct SubPlan {
    Variant variant = Variant::T;
    Rank version = 1;
    RankRange tree_range;
    std::uint8_t atoms = 0;  // the atom group this search answers

    /// The selection condition evaluated directly on an object's ranks.
    bool selects(const AttrDomain& domain, Interval obj) const {
        const Rank l = domain.rank_of(obj.lo);
        const Rank r = domain.rank_of(obj.hi);
        switch (variant) {
            case Variant::T: return l <= version && tree_range.contains(r);
            case Variant::Tp: return r >= version && tree_range.contains(l);
            case Variant::Tpp: return l >= version && tree_range.contains(r);
        }
        return false;
    }

    friend bool operator==(const SubPlan&, const SubPlan&) = default;
};

struct QueryPlan {
    std::vector<SubPlan> sub_plans;  // at most two
    bool empty() const noexcept { return sub_plans.empty(); }
};

namespace detail {

/// Splits a predicate into groups that each collapse onto one index search.
inline std::vector<std::uint8_t> plan_groups(const RRPredicate& pred) {
    const std::uint8_t atoms = pred.mask() & RRPredicate::atoms_mask;
    const std::uint8_t disjoint = pred.mask() & RRPredicate::disjoint_mask;
    if (atoms != 0 && disjoint != 0) {
        throw unsupported_predicate("predicate '" + pred.to_string() +
                                    "': before/after cannot be combined with c1..c4");
    }
    if (disjoint != 0) {
        std::vector<std::uint8_t> g;
        if (disjoint & static_cast<std::uint8_t>(Atom::before)) g.push_back(static_cast<std::uint8_t>(Atom::before));
        if (disjoint & static_cast<std::uint8_t>(Atom::after)) g.push_back(static_cast<std::uint8_t>(Atom::after));
        return g;
    }
    switch (atoms) {
        case 1: case 2: case 4: case 8: case 3: case 6: case 12: return {atoms};
        case 5: return {1, 4};
        case 9: return {1, 8};
        case 10: return {2, 8};
        case 7: return {3, 4};
        case 14: return {6, 8};
        case 13: return {1, 12};
        case 11: return {3, 8};
        case 15: return {3, 12};
        default: break;
    }
    throw invalid_input("predicate: invalid atom set");
}

inline Variant group_variant(std::uint8_t group) {
    switch (group) {
        case 1: case 2: case 3: case 6: case 16: return Variant::T;
        case 4: case 12: return Variant::Tp;
        case 8: case 32: return Variant::Tpp;
        default: break;
    }
    throw invalid_input("predicate: invalid atom group");
}

}  // namespace detail

/// Index variants a predicate needs, in T, Tp, Tpp order.
inline std::vector<Variant> required_variants(const RRPredicate& pred) {
    std::array<bool, 3> need{};
    for (auto g : detail::plan_groups(pred)) need[static_cast<std::size_t>(detail::group_variant(g))] = true;
    std::vector<Variant> out;
    for (Variant v : all_variants) {
        if (need[static_cast<std::size_t>(v)]) out.push_back(v);
    }
    return out;
}

/// Reduces a predicate and query interval to at most two index searches whose
/// selections together equal the predicate's qualifying set. Off-grid query
/// endpoints are snapped in the direction that keeps each inequality exact.
inline QueryPlan plan_query(const RRPredicate& pred, Interval query, const AttrDomain& domain,
                            std::span<const Variant> available) {
    if (!(query.lo <= query.hi)) throw invalid_input("plan_query: query interval has lo > hi");
    if (domain.empty()) throw invalid_input("plan_query: empty attribute domain");

    const auto groups = detail::plan_groups(pred);
    for (auto g : groups) {
        const Variant v = detail::group_variant(g);
        if (std::find(available.begin(), available.end(), v) == available.end()) {
            throw unsupported_predicate("predicate '" + pred.to_string() + "' needs index variant " +
                                        std::string(to_string(v)) + ", which was not built");
        }
    }

    const Rank n = domain.size();
    const double lq = query.lo, rq = query.hi;
    auto floor = [&](double v) { return domain.rank_floor(v); };
    auto ceil = [&](double v) { return domain.rank_ceil(v); };

    QueryPlan plan;
    for (auto g : groups) {
        std::optional<Rank> version;
        std::optional<Rank> lo, hi;
        switch (g) {
            case 2:  // l <= lq, r >= rq
                version = floor(lq);
                lo = ceil(rq);
                hi = n;
                break;
            case 1:  // l <= lq, lq <= r <= rq
                version = floor(lq);
                lo = ceil(lq);
                hi = floor(rq);
                break;
            case 4:  // r >= rq, lq <= l <= rq
                version = ceil(rq);
                lo = ceil(lq);
                hi = floor(rq);
                break;
            case 8:  // l >= lq, r <= rq
                version = ceil(lq);
                lo = 1;
                hi = floor(rq);
                break;
            case 3:  // l <= lq, r >= lq
                version = floor(lq);
                lo = ceil(lq);
                hi = n;
                break;
            case 6:  // l <= rq, r >= rq
                version = floor(rq);
                lo = ceil(rq);
                hi = n;
                break;
            case 12:  // r >= lq, lq <= l <= rq
                version = ceil(lq);
                lo = ceil(lq);
                hi = floor(rq);
                break;
            case 16:  // r < lq (so l < lq too)
                version = domain.rank_below(lq);
                lo = 1;
                hi = domain.rank_below(lq);
                break;
            case 32:  // l > rq
                version = domain.rank_above(rq);
                lo = 1;
                hi = n;
                break;
            default: throw invalid_input("plan_query: invalid atom group");
        }
        if (!version || !lo || !hi || *lo > *hi) continue;
        plan.sub_plans.push_back(SubPlan{detail::group_variant(g), *version, RankRange{*lo, *hi}, g});
    }
    return plan;
}

}  // namespace mstg
