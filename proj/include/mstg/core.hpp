#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstg {

using ObjectId = std::uint32_t;
using Rank = std::int32_t;    // 1-based position in the attribute domain
using Epoch = std::int32_t;   // insertion step inside one index variant

/// Raised for malformed arguments, out-of-domain values and bad dimensions.
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a search reaches a state that only a bug can produce.
class invalid_state : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

using VectorView = std::span<const float>;

/// Euclidean distance with double accumulation. Four partial sums keep the
/// loop pipelined while staying bit-for-bit deterministic.
inline float l2_distance_unchecked(const float* a, const float* b, std::size_t dim) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= dim; j += 4) {
        const double d0 = double(a[j]) - double(b[j]);
        const double d1 = double(a[j + 1]) - double(b[j + 1]);
        const double d2 = double(a[j + 2]) - double(b[j + 2]);
        const double d3 = double(a[j + 3]) - double(b[j + 3]);
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; j < dim; ++j) {
        const double d = double(a[j]) - double(b[j]);
        s0 += d * d;
    }
    return static_cast<float>(std::sqrt((s0 + s1) + (s2 + s3)));
}

inline float l2_distance(VectorView u, VectorView v) {
    if (u.size() != v.size()) {
        throw invalid_input("l2_distance: dimensionality mismatch (" + std::to_string(u.size()) +
                            " vs " + std::to_string(v.size()) + ")");
    }
    return l2_distance_unchecked(u.data(), v.data(), u.size());
}

/// Row-major storage for n vectors of a shared dimensionality.
class VectorSet {
public:
    VectorSet() = default;
    explicit VectorSet(std::size_t dim) : dim_(dim) {}
    VectorSet(std::size_t dim, std::vector<float> data) : dim_(dim), data_(std::move(data)) {
        if (dim_ == 0 && !data_.empty()) throw invalid_input("VectorSet: zero dimensionality");
        if (dim_ != 0 && data_.size() % dim_ != 0) {
            throw invalid_input("VectorSet: data length is not a multiple of the dimensionality");
        }
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!std::isfinite(data_[i])) {
                throw invalid_input("VectorSet: non-finite component in vector " +
                                    std::to_string(i / dim_));
            }
        }
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const noexcept { return size() == 0; }

    VectorView operator[](std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }
    const float* row(std::size_t i) const noexcept { return data_.data() + i * dim_; }

    void push_back(VectorView v) {
        if (dim_ == 0) dim_ = v.size();
        if (v.size() != dim_) {
            throw invalid_input("VectorSet: expected dimensionality " + std::to_string(dim_) + ", got " +
                                std::to_string(v.size()));
        }
        for (float x : v) {
            if (!std::isfinite(x)) throw invalid_input("VectorSet: non-finite component");
        }
        data_.insert(data_.end(), v.begin(), v.end());
    }

    const std::vector<float>& data() const noexcept { return data_; }

    float distance(std::size_t i, std::size_t j) const noexcept {
        return l2_distance_unchecked(row(i), row(j), dim_);
    }
    float distance(std::size_t i, VectorView q) const noexcept {
        return l2_distance_unchecked(row(i), q.data(), dim_);
    }

private:
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool valid() const noexcept { return lo <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Objects are addressed by position: object i owns vectors[i] and ranges[i].
struct Dataset {
    VectorSet vectors;
    std::vector<Interval> ranges;

    std::size_t size() const noexcept { return ranges.size(); }

    void validate() const {
        if (vectors.size() != ranges.size()) {
            throw invalid_input("Dataset: " + std::to_string(vectors.size()) + " vectors but " +
                                std::to_string(ranges.size()) + " intervals");
        }
        for (std::size_t i = 0; i < ranges.size(); ++i) {
            if (!(ranges[i].lo <= ranges[i].hi)) {
                throw invalid_input("Dataset: object " + std::to_string(i) + " has lo > hi");
            }
        }
    }
};

/// Sorted distinct attribute values a_1 < ... < a_N addressed by 1-based rank.
class AttrDomain {
public:
    AttrDomain() = default;

    explicit AttrDomain(std::vector<double> values) : values_(std::move(values)) {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) throw invalid_input("AttrDomain: non-finite value");
            if (i > 0 && !(values_[i - 1] < values_[i])) {
                throw invalid_input("AttrDomain: values must be strictly ascending");
            }
        }
    }

    /// Domain made of every endpoint that occurs in `ranges`.
    static AttrDomain from_intervals(std::span<const Interval> ranges) {
        std::vector<double> v;
        v.reserve(ranges.size() * 2);
        for (const auto& r : ranges) {
            v.push_back(r.lo);
            v.push_back(r.hi);
        }
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return AttrDomain(std::move(v));
    }

    Rank size() const noexcept { return static_cast<Rank>(values_.size()); }
    bool empty() const noexcept { return values_.empty(); }
    double value(Rank x) const { return values_.at(static_cast<std::size_t>(x - 1)); }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Largest x with a_x <= v.
    std::optional<Rank> rank_floor(double v) const noexcept {
        auto it = std::upper_bound(values_.begin(), values_.end(), v);
        if (it == values_.begin()) return std::nullopt;
        return static_cast<Rank>(it - values_.begin());
    }

    /// Smallest x with a_x >= v.
    std::optional<Rank> rank_ceil(double v) const noexcept {
        auto it = std::lower_bound(values_.begin(), values_.end(), v);
        if (it == values_.end()) return std::nullopt;
        return static_cast<Rank>(it - values_.begin()) + 1;
    }

    /// Largest x with a_x < v.
    std::optional<Rank> rank_below(double v) const noexcept {
        auto it = std::lower_bound(values_.begin(), values_.end(), v);
        if (it == values_.begin()) return std::nullopt;
        return static_cast<Rank>(it - values_.begin());
    }

    /// Smallest x with a_x > v.
    std::optional<Rank> rank_above(double v) const noexcept {
        auto it = std::upper_bound(values_.begin(), values_.end(), v);
        if (it == values_.end()) return std::nullopt;
        return static_cast<Rank>(it - values_.begin()) + 1;
    }

    /// Rank of a value that must be a member.
    Rank rank_of(double v) const {
        auto r = rank_floor(v);
        if (!r || values_[static_cast<std::size_t>(*r - 1)] != v) {
            throw invalid_input("AttrDomain: value " + std::to_string(v) + " is not in the domain");
        }
        return *r;
    }

    friend bool operator==(const AttrDomain&, const AttrDomain&) = default;

private:
    std::vector<double> values_;
};

/// (distance, id) pair ordered by distance, ties by ascending id.
struct Neighbor {
    ObjectId id = 0;
    float dist = 0.0f;

    friend bool operator<(const Neighbor& a, const Neighbor& b) noexcept {
        return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
    }
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

}  // namespace mstg
