#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "varicurate/curation.hpp"
#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"
#include "varicurate/labels.hpp"
#include "varicurate/parallel.hpp"
#include "varicurate/simkernel.hpp"

namespace varicurate {

/// Fixed-width histogram; bin i covers [edges[i], edges[i+1]), the last bin
/// also includes its right edge.
struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;

    static Histogram uniform(double low, double high, std::size_t bins) {
        require(bins >= 1 && low < high, ErrorKind::Parameter, "histogram needs at least one bin over a non-empty range");
        Histogram h;
        h.edges.resize(bins + 1);
        for (std::size_t i = 0; i <= bins; ++i) {
            h.edges[i] = low + (high - low) * static_cast<double>(i) / static_cast<double>(bins);
        }
        h.edges.back() = high;
        h.counts.assign(bins, 0);
        return h;
    }

    /// Bin of x, or nullopt outside [low, high].
    std::optional<std::size_t> bin_of(double x) const {
        const std::size_t bins = counts.size();
        if (!(x >= edges.front() && x <= edges.back())) return std::nullopt;
        const double width = (edges.back() - edges.front()) / static_cast<double>(bins);
        auto i = static_cast<std::size_t>(std::clamp((x - edges.front()) / width, 0.0, static_cast<double>(bins - 1)));
        // settle against the stored edges so binning agrees with them exactly
        while (i > 0 && x < edges[i]) --i;
        while (i + 1 < bins && x >= edges[i + 1]) ++i;
        return i;
    }

    void add(double x) {
        if (auto i = bin_of(x)) ++counts[*i];
    }

    std::size_t total() const {
        std::size_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

inline constexpr std::size_t kDsHistogramBins = 50;

struct AuditReport {
    std::array<std::size_t, 8> cell_counts{};  // race-major, see cell_index()
    std::optional<double> interclass_mean_cosine;  // absent with fewer than 2 identities
    Histogram ds_histogram;
    double noise_fraction = 0.0;
    double collapse_fraction = 0.0;
    std::size_t scored_samples = 0;
    std::size_t identity_count = 0;
};

/// Mean off-diagonal cosine between identity means (absent for M < 2).
inline std::optional<double> interclass_mean_cosine(const MeanEmbeddingTable& means) {
    const std::size_t m = means.size();
    if (m < 2) return std::nullopt;
    std::vector<double> row_sums(m, 0.0);
    parallel_for(m, [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t j = i + 1; j < m; ++j) acc += cosine(means.mean(i), means.mean(j));
        row_sums[i] = acc;
    });
    double total = 0.0;
    for (double s : row_sums) total += s;
    return total / (static_cast<double>(m) * static_cast<double>(m - 1) / 2.0);
}

/// Demographic balance, interclass similarity and divergence-score
/// distribution of a dataset. Every sample in `set` needs race, gender and
/// divergence_score in `labels`.
inline AuditReport audit_dataset(const EmbeddingSet& set, const LabelTable& labels, const MeanEmbeddingTable& means,
                                 const DivergenceConfig& cfg = {}) {
    AuditReport report;
    report.ds_histogram = Histogram::uniform(-1.0, 1.0, kDsHistogramBins);
    std::string missing;
    std::size_t noise = 0;
    std::size_t collapse = 0;
    for (const auto& id : set.sample_ids()) {
        const LabelRow* row = labels.find(id);
        if (row == nullptr || !row->race || !row->gender || !row->divergence_score) {
            missing += (missing.empty() ? "" : ", ") + id;
            continue;
        }
        ++report.cell_counts[cell_index(*row->race, *row->gender)];
        const double ds = *row->divergence_score;
        report.ds_histogram.add(ds);
        if (ds < cfg.noise_floor) ++noise;
        if (ds > cfg.collapse_ceiling) ++collapse;
        ++report.scored_samples;
    }
    if (!missing.empty()) fail(ErrorKind::Data, "missing race, gender or divergence_score for samples: " + missing);
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (means.find(set.identity_of(i)) == EmbeddingSet::npos) {
            fail(ErrorKind::Data, "identity '" + set.identity_of(i) + "' has no mean embedding");
        }
    }
    if (report.scored_samples > 0) {
        report.noise_fraction = static_cast<double>(noise) / static_cast<double>(report.scored_samples);
        report.collapse_fraction = static_cast<double>(collapse) / static_cast<double>(report.scored_samples);
    }
    report.identity_count = means.size();
    report.interclass_mean_cosine = interclass_mean_cosine(means);
    return report;
}

struct LeakageReport {
    std::vector<std::string> identity_ids;
    std::vector<double> per_identity_max_similarity;
    std::vector<std::string> nearest_reference;  // sample id attaining the max
    double threshold = 0.3;

    /// Probe identities whose maximum similarity strictly exceeds `t`.
    std::size_t exceed_count(double t) const {
        return static_cast<std::size_t>(std::count_if(per_identity_max_similarity.begin(), per_identity_max_similarity.end(),
                                                      [t](double s) { return s > t; }));
    }
    std::size_t exceed_count() const { return exceed_count(threshold); }
};

/// For each probe identity, the highest cosine similarity to any reference row.
inline LeakageReport leakage_check(const MeanEmbeddingTable& probe, const EmbeddingSet& reference,
                                   double threshold = kIdentityThreshold) {
    if (probe.size() > 0 && reference.size() > 0 && probe.dim != reference.dim()) {
        fail(ErrorKind::Parameter, "probe dimension " + std::to_string(probe.dim) + " does not match reference dimension " +
                                       std::to_string(reference.dim()));
    }
    require(reference.size() > 0 || probe.size() == 0, ErrorKind::Parameter, "leakage check needs a non-empty reference set");
    LeakageReport report;
    report.threshold = threshold;
    report.identity_ids = probe.identity_ids;
    report.per_identity_max_similarity.assign(probe.size(), -1.0);
    report.nearest_reference.assign(probe.size(), std::string());
    parallel_for(probe.size(), [&](std::size_t i) {
        double best = -2.0;
        std::size_t arg = 0;
        for (std::size_t j = 0; j < reference.size(); ++j) {
            const double s = cosine(probe.mean(i), reference.row(j));
            if (s > best) {
                best = s;
                arg = j;
            }
        }
        report.per_identity_max_similarity[i] = best;
        report.nearest_reference[i] = reference.sample_ids()[arg];
    });
    return report;
}

}  // namespace varicurate
