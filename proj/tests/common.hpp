#pragma once

#include <memory>
#include <random>
#include <vector>

#include "mstg/core.hpp"

namespace testutil {

inline mstg::VectorSet random_vectors(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> data(n * d);
    for (auto& x : data) x = g(rng);
    return mstg::VectorSet(d, std::move(data));
}

// n objects with integer endpoints drawn uniformly from [0, values).
inline std::shared_ptr<mstg::Dataset> random_dataset(std::size_t n, std::size_t d, int values, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto ds = std::make_shared<mstg::Dataset>();
    ds->vectors = random_vectors(n, d, rng);
    std::uniform_int_distribution<int> u(0, values - 1);
    for (std::size_t i = 0; i < n; ++i) {
        int a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        ds->ranges.push_back({double(a), double(b)});
    }
    return ds;
}

inline std::vector<float> random_query(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> q(d);
    for (auto& x : q) x = g(rng);
    return q;
}

}  // namespace testutil
