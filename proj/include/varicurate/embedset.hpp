#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "varicurate/error.hpp"

namespace varicurate {

/// Unit-norm tolerance used when an operation requires normalized rows.
/// Rows are stored as 32-bit reals, so this is looser than the 1e-6 that
/// normalize() itself guarantees.
inline constexpr double kUnitNormTolerance = 1e-5;

/// N x d row-major matrix of face embeddings with per-row sample ids and
/// (optionally) identity ids. Immutable once constructed.
class EmbeddingSet {
public:
    EmbeddingSet() : dim_(1) {}

    /// Validates shape, finiteness and sample-id uniqueness. An identity list
    /// whose entries are all empty is stored as "no identities".
    EmbeddingSet(std::size_t dim, std::vector<float> data, std::vector<std::string> sample_ids,
                 std::vector<std::string> identity_ids = {})
        : dim_(dim), data_(std::move(data)), sample_ids_(std::move(sample_ids)),
          identity_ids_(std::move(identity_ids)) {
        require(dim_ >= 1, ErrorKind::Parameter, "embedding dimension must be at least 1");
        require(data_.size() == sample_ids_.size() * dim_, ErrorKind::Parameter,
                "payload has " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(sample_ids_.size()) + " x " + std::to_string(dim_));
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!std::isfinite(data_[i])) {
                fail(ErrorKind::Data, "non-finite value in row of sample '" + sample_ids_[i / dim_] + "'");
            }
        }
        index_.reserve(sample_ids_.size());
        for (std::size_t i = 0; i < sample_ids_.size(); ++i) {
            if (!index_.emplace(sample_ids_[i], i).second) {
                fail(ErrorKind::Data, "duplicate sample_id '" + sample_ids_[i] + "'");
            }
        }
        if (!identity_ids_.empty()) {
            require(identity_ids_.size() == sample_ids_.size(), ErrorKind::Parameter,
                    "identity_ids must be empty or have one entry per sample");
            bool any = false;
            for (const auto& id : identity_ids_) any = any || !id.empty();
            if (!any) identity_ids_.clear();
        }
    }

    std::size_t size() const noexcept { return sample_ids_.size(); }
    bool empty() const noexcept { return sample_ids_.empty(); }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    const std::vector<float>& data() const noexcept { return data_; }
    const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
    const std::vector<std::string>& identity_ids() const noexcept { return identity_ids_; }
    bool has_identities() const noexcept { return !identity_ids_.empty(); }

    /// Identity of sample i; a sample without one is its own identity.
    const std::string& identity_of(std::size_t i) const {
        if (identity_ids_.empty() || identity_ids_[i].empty()) return sample_ids_[i];
        return identity_ids_[i];
    }

    /// Row position by sample id, or npos.
    std::size_t find(const std::string& sample_id) const {
        auto it = index_.find(sample_id);
        return it == index_.end() ? npos : it->second;
    }

    /// Subset of rows in the given order.
    EmbeddingSet select(std::span<const std::size_t> rows) const {
        std::vector<float> data;
        std::vector<std::string> ids;
        std::vector<std::string> idents;
        data.reserve(rows.size() * dim_);
        for (std::size_t r : rows) {
            auto src = row(r);
            data.insert(data.end(), src.begin(), src.end());
            ids.push_back(sample_ids_[r]);
            if (has_identities()) idents.push_back(identity_ids_[r]);
        }
        return EmbeddingSet(dim_, std::move(data), std::move(ids), std::move(idents));
    }

    bool operator==(const EmbeddingSet& other) const {
        if (dim_ != other.dim_ || sample_ids_ != other.sample_ids_ || identity_ids_ != other.identity_ids_) {
            return false;
        }
        // bitwise, so that -0.0 != 0.0 and round-trips are checked exactly
        return data_.size() == other.data_.size() &&
               std::equal(data_.begin(), data_.end(), other.data_.begin(),
                          [](float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); });
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t dim_;
    std::vector<float> data_;
    std::vector<std::string> sample_ids_;
    std::vector<std::string> identity_ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Squared Euclidean norm accumulated in double.
inline double squared_norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
    return acc;
}

/// True when every row has unit norm within kUnitNormTolerance.
inline bool is_normalized(const EmbeddingSet& set, double tolerance = kUnitNormTolerance) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (std::abs(std::sqrt(squared_norm(set.row(i))) - 1.0) > tolerance) return false;
    }
    return true;
}

inline void require_normalized(const EmbeddingSet& set, const char* what) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double norm = std::sqrt(squared_norm(set.row(i)));
        if (std::abs(norm - 1.0) > kUnitNormTolerance) {
            fail(ErrorKind::Parameter, std::string(what) + " requires unit-normalized rows; sample '" +
                                           set.sample_ids()[i] + "' has norm " + std::to_string(norm));
        }
    }
}

/// Rescales every row to unit Euclidean norm.
inline EmbeddingSet normalize(const EmbeddingSet& set) {
    std::vector<float> out(set.data().size());
    const std::size_t d = set.dim();
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto src = set.row(i);
        const double norm = std::sqrt(squared_norm(src));
        if (norm == 0.0) fail(ErrorKind::Data, "degenerate embedding: sample '" + set.sample_ids()[i] + "' is the zero vector");
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = static_cast<float>(static_cast<double>(src[j]) / norm);
    }
    return EmbeddingSet(d, std::move(out), set.sample_ids(), set.identity_ids());
}

/// Per-identity unit-normalized mean embeddings, sorted by identity id.
struct MeanEmbeddingTable {
    std::size_t dim = 1;
    std::vector<std::string> identity_ids;
    std::vector<float> means;  // M x dim, row-major
    std::vector<std::size_t> counts;

    std::size_t size() const noexcept { return identity_ids.size(); }
    std::span<const float> mean(std::size_t i) const { return {means.data() + i * dim, dim}; }

    std::size_t find(const std::string& identity) const {
        auto it = std::lower_bound(identity_ids.begin(), identity_ids.end(), identity);
        if (it == identity_ids.end() || *it != identity) return EmbeddingSet::npos;
        return static_cast<std::size_t>(it - identity_ids.begin());
    }

    /// The means as an embedding set (identity ids become sample ids), e.g. for
    /// dumping to .femb for external projection tools.
    EmbeddingSet as_embedding_set() const { return EmbeddingSet(dim, means, identity_ids); }
};

/// Mean embedding per identity, renormalized to unit length. Rows must already
/// be unit-normalized, so the mean is taken over directions. A singleton
/// identity's mean is its sample, bit for bit.
inline MeanEmbeddingTable mean_by_identity(const EmbeddingSet& set) {
    require_normalized(set, "mean_by_identity");
    const std::size_t d = set.dim();

    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < set.size(); ++i) groups[set.identity_of(i)].push_back(i);

    MeanEmbeddingTable table;
    table.dim = d;
    table.identity_ids.reserve(groups.size());
    table.means.reserve(groups.size() * d);
    table.counts.reserve(groups.size());

    std::vector<std::string> degenerate;
    std::vector<double> acc(d);
    for (auto& [identity, rows] : groups) {
        table.identity_ids.push_back(identity);
        table.counts.push_back(rows.size());
        if (rows.size() == 1) {
            auto src = set.row(rows.front());
            table.means.insert(table.means.end(), src.begin(), src.end());
            continue;
        }
        // Sum in sample-id order so the result does not depend on row order.
        std::sort(rows.begin(), rows.end(),
                  [&](std::size_t a, std::size_t b) { return set.sample_ids()[a] < set.sample_ids()[b]; });
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t r : rows) {
            auto src = set.row(r);
            for (std::size_t j = 0; j < d; ++j) acc[j] += src[j];
        }
        double norm2 = 0.0;
        for (double& x : acc) {
            x /= static_cast<double>(rows.size());
            norm2 += x * x;
        }
        const double norm = std::sqrt(norm2);
        if (norm < 1e-8) {
            degenerate.push_back(identity);
            table.means.insert(table.means.end(), d, 0.0f);
            continue;
        }
        for (double x : acc) table.means.push_back(static_cast<float>(x / norm));
    }
    if (!degenerate.empty()) {
        std::string list;
        for (const auto& id : degenerate) list += (list.empty() ? "" : ", ") + id;
        fail(ErrorKind::Data, "degenerate mean embedding (norm < 1e-8) for identities: " + list);
    }
    return table;
}

}  // namespace varicurate
