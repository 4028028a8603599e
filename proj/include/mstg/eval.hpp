#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mstg/core.hpp"
#include "mstg/labeled_graph.hpp"
#include "mstg/predicate.hpp"
#include "mstg/search.hpp"

namespace mstg {

// ---------------------------------------------------------------------------
// Ground truth and baselines

/// Exact top-k of the objects satisfying `pred`, ascending by (dist, id).
inline std::vector<Neighbor> brute_force_knn(const Dataset& data, const RRPredicate& pred, VectorView q,
                                             Interval range, std::size_t k) {
    if (q.size() != data.vectors.dim() && data.size() > 0) {
        throw invalid_input("brute_force_knn: query dimensionality mismatch");
    }
    std::vector<Neighbor> all;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!eval_predicate(pred, data.ranges[i], range)) continue;
        all.push_back(Neighbor{static_cast<ObjectId>(i), data.vectors.distance(i, q)});
    }
    const std::size_t take = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end());
    all.resize(take);
    return all;
}

struct BaselineResult {
    std::vector<Neighbor> items;
    bool partial = false;
    std::size_t distance_computations = 0;
    std::size_t final_k = 0;  // last k' tried by post-filtering
};

/// Filter first, then scan: exact, and identical to brute_force_knn.
inline BaselineResult prefilter_baseline(const Dataset& data, const RRPredicate& pred, VectorView q,
                                         Interval range, std::size_t k) {
    BaselineResult out;
    out.items = brute_force_knn(data, pred, q, range, k);
    for (const auto& r : data.ranges) out.distance_computations += eval_predicate(pred, r, range) ? 1 : 0;
    out.partial = out.items.size() < k;
    out.final_k = k;
    return out;
}

/// Predicate-agnostic graph over every object, used by post-filtering.
inline LabeledGraph build_full_graph(const Dataset& data, GraphParams params) {
    LabeledGraph g(data.vectors, params);
    VisitedSet visited;
    for (std::size_t i = 0; i < data.size(); ++i) g.insert(static_cast<ObjectId>(i), 1, visited);
    return g;
}

/// k'-ANN on the full graph followed by filtering; k' starts at k and doubles
/// until k results survive or k' reaches n. The pool width of each round is
/// max(L, k'). Distances are memoized across rounds.
inline BaselineResult postfilter_baseline(const LabeledGraph& graph, const Dataset& data, const RRPredicate& pred,
                                          VectorView q, Interval range, std::size_t k, std::size_t L,
                                          QueryContext& ctx) {
    if (k == 0) throw invalid_input("postfilter_baseline: k must be positive");
    BaselineResult out;
    ctx.begin(data.vectors, q);
    const std::size_t n = graph.size();
    if (n == 0) {
        out.partial = true;
        return out;
    }
    auto neighbors = [&](ObjectId u, std::vector<ObjectId>& adj) { graph.live_neighbors(*graph.local_of(u), 1, adj); };
    auto dist = [&](ObjectId id) { return ctx.distance(id); };
    std::size_t kp = std::min(k, n);
    while (true) {
        ctx.visited().reset(data.size());
        auto res = knn_search(neighbors, dist, graph.entry_point(), kp, std::max(L, kp), ctx.visited());
        out.items.clear();
        for (const auto& c : res.items) {
            if (eval_predicate(pred, data.ranges[c.id], range)) out.items.push_back(c);
        }
        out.final_k = kp;
        if (out.items.size() >= k || kp >= n) break;
        kp = std::min(kp * 2, n);
    }
    if (out.items.size() > k) out.items.resize(k);
    out.partial = out.items.size() < k;
    out.distance_computations = ctx.distance_computations();
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

/// |result ∩ truth| / |truth| over the first k of each list.
inline double recall_at_k(std::span<const ObjectId> result, std::span<const ObjectId> truth, std::size_t k) {
    const std::size_t nt = std::min(k, truth.size());
    const std::size_t nr = std::min(k, result.size());
    if (nt == 0) return nr == 0 ? 1.0 : 0.0;
    std::vector<ObjectId> t(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(nt));
    std::sort(t.begin(), t.end());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < nr; ++i) hit += std::binary_search(t.begin(), t.end(), result[i]) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(nt);
}

inline double recall_at_k(std::span<const Neighbor> result, std::span<const Neighbor> truth, std::size_t k) {
    std::vector<ObjectId> r, t;
    for (const auto& n : result) r.push_back(n.id);
    for (const auto& n : truth) t.push_back(n.id);
    return recall_at_k(std::span<const ObjectId>(r), std::span<const ObjectId>(t), k);
}

struct RdeResult {
    double value = 0.0;
    std::size_t terms = 0;          // terms that entered the mean
    std::size_t zero_excluded = 0;  // zero truth distance but nonzero result distance
    bool partial = false;           // result shorter than truth
};

/// Mean of result/truth distance ratios over the first k positions, minus one.
/// 0/0 counts as ratio 1; x/0 with x > 0 is left out of the mean.
inline RdeResult rde(std::span<const float> result, std::span<const float> truth, std::size_t k) {
    RdeResult out;
    const std::size_t nt = std::min(k, truth.size());
    const std::size_t n = std::min(nt, result.size());
    out.partial = result.size() < nt;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (truth[i] == 0.0f) {
            if (result[i] == 0.0f) {
                sum += 1.0;
                ++out.terms;
            } else {
                ++out.zero_excluded;
            }
            continue;
        }
        sum += static_cast<double>(result[i]) / static_cast<double>(truth[i]);
        ++out.terms;
    }
    out.value = out.terms == 0 ? 0.0 : sum / static_cast<double>(out.terms) - 1.0;
    return out;
}

inline RdeResult rde(std::span<const Neighbor> result, std::span<const Neighbor> truth, std::size_t k) {
    std::vector<float> r, t;
    for (const auto& n : result) r.push_back(n.dist);
    for (const auto& n : truth) t.push_back(n.dist);
    return rde(std::span<const float>(r), std::span<const float>(t), k);
}

// ---------------------------------------------------------------------------
// Workload generation

enum class Distribution { uniform, long_tail, normal, poisson, zipf };

inline Distribution parse_distribution(std::string_view s) {
    if (s == "uniform") return Distribution::uniform;
    if (s == "long-tail" || s == "longtail" || s == "long_tail") return Distribution::long_tail;
    if (s == "normal") return Distribution::normal;
    if (s == "poisson") return Distribution::poisson;
    if (s == "zipf") return Distribution::zipf;
    throw invalid_input("unknown distribution '" + std::string(s) + "'");
}

inline std::string_view to_string(Distribution d) noexcept {
    switch (d) {
        case Distribution::uniform: return "uniform";
        case Distribution::long_tail: return "long-tail";
        case Distribution::normal: return "normal";
        case Distribution::poisson: return "poisson";
        case Distribution::zipf: return "zipf";
    }
    return "?";
}

/// n intervals whose endpoints are two i.i.d. integer draws from [lo, hi),
/// sorted. Shapes over a span S = hi - lo: normal(lo + S/2, 0.15 S) clipped,
/// poisson(S/2), zipf(s = 1.1) over S buckets, pareto(alpha = 2) scaled by
/// S/10 and clipped.
inline std::vector<Interval> gen_attributes(std::size_t n, Distribution dist, double lo, double hi,
                                            std::uint64_t seed) {
    if (n == 0) throw invalid_input("gen_attributes: n must be >= 1");
    if (!(std::floor(hi) - std::ceil(lo) >= 1.0)) throw invalid_input("gen_attributes: bounds hold no integer value");
    const double base = std::ceil(lo);
    const double top = std::ceil(hi) - 1.0;  // largest integer < hi
    const double span = top - base + 1.0;
    std::mt19937_64 rng(seed);
    auto clip = [&](double v) { return std::clamp(std::floor(v), base, top); };

    std::optional<std::discrete_distribution<std::int64_t>> zipf;
    if (dist == Distribution::zipf) {
        const auto buckets = static_cast<std::size_t>(span);
        std::vector<double> w(buckets);
        for (std::size_t i = 0; i < buckets; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), 1.1);
        zipf.emplace(w.begin(), w.end());
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(base + span / 2.0, 0.15 * span);
    std::poisson_distribution<std::int64_t> poisson(span / 2.0);

    auto draw = [&]() -> double {
        switch (dist) {
            case Distribution::uniform: return clip(base + unit(rng) * span);
            case Distribution::normal: return clip(normal(rng));
            case Distribution::poisson: return clip(base + static_cast<double>(poisson(rng)));
            case Distribution::zipf: return clip(base + static_cast<double>((*zipf)(rng)));
            case Distribution::long_tail: {
                const double u = 1.0 - unit(rng);  // (0, 1]
                return clip(base + (std::pow(u, -0.5) - 1.0) * span / 10.0);
            }
        }
        return base;
    };

    std::vector<Interval> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = draw();
        const double b = draw();
        out.push_back(Interval{std::min(a, b), std::max(a, b)});
    }
    return out;
}

struct Query {
    std::vector<float> vector;
    Interval range;
    RRPredicate pred;
    double selectivity = 0.0;  // realized, exact
};

struct Workload {
    std::vector<Query> queries;
    double target_selectivity = 1.0;
    std::uint64_t seed = 0;
    std::string vector_source;  // "query-file" or "jittered-data"
};

inline std::size_t count_qualifying(const Dataset& data, const RRPredicate& pred, Interval range) {
    std::size_t c = 0;
    for (const auto& r : data.ranges) c += eval_predicate(pred, r, range) ? 1 : 0;
    return c;
}

/// Queries whose realized selectivity (exact count) lies within +-10% of the
/// target. Each query anchors at a random attribute value and widens
/// rightwards, leftwards or symmetrically, bisecting the width until the count
/// lands in the band. Query vectors cycle through `query_vectors` when given,
/// otherwise they are data vectors with Gaussian jitter of `jitter` sigma.
inline Workload gen_queries(const Dataset& data, const RRPredicate& pred, double selectivity, std::size_t count,
                            std::uint64_t seed, const VectorSet* query_vectors = nullptr, double jitter = 0.01) {
    if (!(selectivity > 0.0 && selectivity <= 1.0)) throw invalid_input("gen_queries: selectivity must be in (0, 1]");
    if (data.size() == 0) throw invalid_input("gen_queries: empty dataset");
    if (query_vectors && query_vectors->dim() != data.vectors.dim()) {
        throw invalid_input("gen_queries: query vectors have the wrong dimensionality");
    }
    Workload w;
    w.target_selectivity = selectivity;
    w.seed = seed;
    w.vector_source = (query_vectors && !query_vectors->empty()) ? "query-file" : "jittered-data";

    double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
    for (const auto& r : data.ranges) {
        dmin = std::min(dmin, r.lo);
        dmax = std::max(dmax, r.hi);
    }
    const double n = static_cast<double>(data.size());
    const double target = selectivity * n;
    auto in_band = [&](std::size_t c) { return std::abs(static_cast<double>(c) - target) <= 0.1 * target; };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<float> gauss(0.0f, static_cast<float>(jitter));
    constexpr int max_tries = 1000;

    for (std::size_t qi = 0; qi < count; ++qi) {
        std::optional<Interval> found;
        std::size_t best_seen = 0;

        if (selectivity >= 1.0) {
            const Interval full{dmin, dmax};
            const auto c = count_qualifying(data, pred, full);
            best_seen = c;
            if (in_band(c)) found = full;
        }
        for (int attempt = 0; !found && attempt < max_tries; ++attempt) {
            const double a = dmin + unit(rng) * (dmax - dmin);
            const int mode = static_cast<int>(unit(rng) * 3.0);
            const double wmax = dmax - dmin;
            auto make = [&](double width) {
                switch (mode) {
                    case 0: return Interval{a, a + width};
                    case 1: return Interval{a - width, a};
                    default: return Interval{a - width / 2.0, a + width / 2.0};
                }
            };
            const auto c0 = count_qualifying(data, pred, make(0.0));
            best_seen = std::max(best_seen, c0);
            if (in_band(c0)) {
                found = make(0.0);
                break;
            }
            const auto c1 = count_qualifying(data, pred, make(wmax));
            best_seen = std::max(best_seen, c1);
            if (in_band(c1)) {
                found = make(wmax);
                break;
            }
            const bool low0 = static_cast<double>(c0) < target;
            if (low0 == (static_cast<double>(c1) < target)) continue;
            double wlo = 0.0, whi = wmax;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (wlo + whi);
                const auto c = count_qualifying(data, pred, make(mid));
                best_seen = std::max(best_seen, c);
                if (in_band(c)) {
                    found = make(mid);
                    break;
                }
                if ((static_cast<double>(c) < target) == low0) {
                    wlo = mid;
                } else {
                    whi = mid;
                }
            }
        }
        if (!found) {
            throw invalid_input("gen_queries: selectivity " + std::to_string(selectivity) + " unreachable for '" +
                                pred.to_string() + "'; max achievable seen " +
                                std::to_string(static_cast<double>(best_seen) / n));
        }

        Query q;
        q.range = *found;
        q.pred = pred;
        q.selectivity = static_cast<double>(count_qualifying(data, pred, *found)) / n;
        if (query_vectors && !query_vectors->empty()) {
            const auto v = (*query_vectors)[qi % query_vectors->size()];
            q.vector.assign(v.begin(), v.end());
        } else {
            const auto pick = static_cast<std::size_t>(unit(rng) * n) % data.size();
            const auto v = data.vectors[pick];
            q.vector.assign(v.begin(), v.end());
            for (auto& x : q.vector) x += gauss(rng);
        }
        w.queries.push_back(std::move(q));
    }
    return w;
}

/// Exact answers for every query of a workload.
inline std::vector<std::vector<Neighbor>> ground_truth(const Dataset& data, const Workload& w, std::size_t k) {
    std::vector<std::vector<Neighbor>> out;
    out.reserve(w.queries.size());
    for (const auto& q : w.queries) out.push_back(brute_force_knn(data, q.pred, q.vector, q.range, k));
    return out;
}

// ---------------------------------------------------------------------------
// Benchmark points

struct BenchPoint {
    std::string method;
    std::size_t L = 0;
    std::size_t k = 0;
    std::size_t queries = 0;
    double recall = 0.0;
    double rde = 0.0;
    double qps = 0.0;
    double mean_distance_computations = 0.0;
    std::size_t partial_results = 0;
    std::size_t rde_zero_excluded = 0;
};

struct MethodOutput {
    std::vector<Neighbor> items;
    std::size_t distance_computations = 0;
    bool partial = false;
};

/// Runs `search(query)` over the workload single-threaded. Only the search
/// calls are timed; metrics are computed afterwards from the retained results.
template <class SearchFn>
BenchPoint measure(std::string method, std::size_t L, std::size_t k, const Workload& w,
                   const std::vector<std::vector<Neighbor>>& truth, SearchFn&& search) {
    if (truth.size() != w.queries.size()) throw invalid_input("measure: ground truth does not match the workload");
    std::vector<MethodOutput> results;
    results.reserve(w.queries.size());
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& q : w.queries) results.push_back(search(q));
    const auto t1 = std::chrono::steady_clock::now();

    BenchPoint p;
    p.method = std::move(method);
    p.L = L;
    p.k = k;
    p.queries = w.queries.size();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    p.qps = secs > 0.0 ? static_cast<double>(p.queries) / secs : 0.0;
    double recall_sum = 0.0, rde_sum = 0.0, dist_sum = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        recall_sum += recall_at_k(std::span<const Neighbor>(results[i].items), std::span<const Neighbor>(truth[i]), k);
        const auto r = rde(std::span<const Neighbor>(results[i].items), std::span<const Neighbor>(truth[i]), k);
        rde_sum += r.value;
        p.rde_zero_excluded += r.zero_excluded;
        dist_sum += static_cast<double>(results[i].distance_computations);
        p.partial_results += results[i].partial ? 1 : 0;
    }
    if (!results.empty()) {
        const double nq = static_cast<double>(results.size());
        p.recall = recall_sum / nq;
        p.rde = rde_sum / nq;
        p.mean_distance_computations = dist_sum / nq;
    }
    return p;
}

}  // namespace mstg
