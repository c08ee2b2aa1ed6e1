#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"
#include "varicurate/parallel.hpp"

namespace varicurate {

/// Cosine similarity accumulated in double and clamped to [-1, 1].
///
/// Computed as dot / sqrt(|a|^2 |b|^2) with all three sums taken in the same
/// order, so cosine(a, a) is exactly 1 for any nonzero a.
template <typename T, typename U>
double cosine(std::span<const T> a, std::span<const U> b) {
    if (a.size() != b.size()) {
        fail(ErrorKind::Parameter, "cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                       std::to_string(b.size()) + ")");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]);
        const double y = static_cast<double>(b[i]);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) fail(ErrorKind::Data, "degenerate embedding: cosine of a zero vector");
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

inline double cosine(std::span<const float> a, std::span<const float> b) { return cosine<float, float>(a, b); }

/// Symmetric n x n matrix of pairwise cosine similarities.
class KernelMatrix {
public:
    KernelMatrix() = default;
    explicit KernelMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

/// Cosine kernel over unit-normalized rows. Upper triangle is computed and
/// mirrored, so the result is exactly symmetric.
inline KernelMatrix pairwise_kernel(const EmbeddingSet& set) {
    require_normalized(set, "pairwise_kernel");
    const std::size_t n = set.size();
    KernelMatrix k(n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) k(i, j) = cosine(set.row(i), set.row(j));
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) k(i, j) = k(j, i);
    }
    return k;
}

struct NeighborList {
    std::size_t query_index = 0;
    std::vector<std::size_t> neighbor_indices;
    std::vector<double> similarities;  // non-increasing
};

namespace detail {

inline NeighborList top_k_with_norms(const EmbeddingSet& set, std::span<const double> inv_norms, std::size_t query,
                                     std::size_t k) {
    const std::size_t n = set.size();
    const std::size_t d = set.dim();
    auto q = set.row(query);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        if (j == query) continue;
        auto r = set.row(j);
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += static_cast<double>(q[c]) * static_cast<double>(r[c]);
        scored.emplace_back(std::clamp(dot * inv_norms[query] * inv_norms[j], -1.0, 1.0), j);
    }
    auto better = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
    NeighborList out;
    out.query_index = query;
    out.neighbor_indices.reserve(k);
    out.similarities.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.similarities.push_back(scored[i].first);
        out.neighbor_indices.push_back(scored[i].second);
    }
    return out;
}

inline std::vector<double> inverse_norms(const EmbeddingSet& set) {
    std::vector<double> inv(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double norm = std::sqrt(squared_norm(set.row(i)));
        if (norm == 0.0) fail(ErrorKind::Data, "degenerate embedding: sample '" + set.sample_ids()[i] + "' is the zero vector");
        inv[i] = 1.0 / norm;
    }
    return inv;
}

inline void check_k(const EmbeddingSet& set, std::size_t k) {
    if (k < 1 || set.size() == 0 || k > set.size() - 1) {
        fail(ErrorKind::Parameter, "k = " + std::to_string(k) + " must lie in [1, N-1] with N = " +
                                       std::to_string(set.size()));
    }
}

}  // namespace detail

/// Exact k most cosine-similar rows to row `query_index`, excluding the query
/// itself. Ties go to the lower row index.
inline NeighborList top_k(const EmbeddingSet& set, std::size_t query_index, std::size_t k) {
    detail::check_k(set, k);
    require(query_index < set.size(), ErrorKind::Parameter, "query index out of range");
    auto inv = detail::inverse_norms(set);
    return detail::top_k_with_norms(set, inv, query_index, k);
}

/// top_k for every row, in row order.
inline std::vector<NeighborList> all_top_k(const EmbeddingSet& set, std::size_t k) {
    detail::check_k(set, k);
    auto inv = detail::inverse_norms(set);
    std::vector<NeighborList> out(set.size());
    parallel_for(set.size(), [&](std::size_t i) { out[i] = detail::top_k_with_norms(set, inv, i, k); });
    return out;
}

}  // namespace varicurate
