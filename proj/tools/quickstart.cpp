// Builds a small index, runs one query per predicate family and checks the
// answers against a brute-force scan.
#include <iostream>
#include <random>

#include "mstg/mstg.hpp"

using namespace mstg;

int main() {
    const std::size_t n = 5000, dim = 16;
    std::mt19937_64 rng(7);
    std::normal_distribution<float> g(0.0f, 1.0f);

    auto data = std::make_shared<Dataset>();
    std::vector<float> flat(n * dim);
    for (auto& x : flat) x = g(rng);
    data->vectors = VectorSet(dim, std::move(flat));
    data->ranges = gen_attributes(n, Distribution::uniform, 0, 1000, 7);

    const std::vector<Variant> variants{Variant::T, Variant::Tp, Variant::Tpp};
    const auto index = IndexSet::build(data, GraphParams{12, 64}, variants);

    SearchParams params;
    params.k = 10;
    params.L = 64;
    QueryContext ctx;

    const Interval range{300, 600};
    const std::vector<std::string> predicates{"intersects", "contained", "containing", "overlap-left,overlap-right",
                                              "before,after"};
    double worst = 1.0;
    for (const auto& text : predicates) {
        const auto pred = parse_predicate(text);
        std::vector<float> q(dim);
        for (auto& x : q) x = g(rng);
        const auto r = rrann_search(index, pred, q, range, params, ctx);
        const auto truth = brute_force_knn(*data, pred, q, range, params.k);
        for (const auto& item : r.items) {
            if (!eval_predicate(pred, data->ranges[item.id], range)) {
                std::cerr << "object " << item.id << " violates " << text << '\n';
                return 1;
            }
        }
        const double rec = recall_at_k(std::span<const Neighbor>(r.items), std::span<const Neighbor>(truth), params.k);
        worst = std::min(worst, rec);
        std::cout << pred.to_string() << ": " << r.items.size() << " results, recall " << rec << ", "
                  << r.distance_computations << " distances, " << r.plan.sub_plans.size() << " sub-plans\n";
    }
    return worst >= 0.5 ? 0 : 1;
}
