#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"
#include "varicurate/labels.hpp"
#include "varicurate/simkernel.hpp"

namespace varicurate {

enum class TieRule {
    KeepOriginal,  ///< a tied vote leaves the sample's own label in place
    BankOrder,     ///< a tied vote picks the earliest label in vocabulary order
};

struct FrcConfig {
    std::size_t k = 50;
    std::vector<Attribute> attributes{Attribute::Race, Attribute::Gender};
    TieRule tie_rule = TieRule::KeepOriginal;

    void validate() const {
        require(k >= 1, ErrorKind::Parameter, "FRC k must be at least 1");
        require(!attributes.empty(), ErrorKind::Parameter, "FRC needs at least one attribute");
        for (auto a : attributes) {
            require(a != Attribute::Age, ErrorKind::Parameter, "FRC refines categorical attributes only (race, gender)");
        }
    }
};

struct LabelChange {
    std::string sample_id;
    Attribute attribute;
    std::string old_label;  // empty when the sample had no label
    std::string new_label;

    bool operator==(const LabelChange&) const = default;
};

struct RefinementReport {
    std::map<Attribute, std::size_t> changed_count;
    std::vector<LabelChange> change_log;  // sorted by (sample_id, attribute)
};

struct RefinementResult {
    LabelTable labels;
    RefinementReport report;
};

namespace detail {

/// Label rows re-ordered to match the embedding rows.
inline std::vector<const LabelRow*> align_labels(const EmbeddingSet& set, const LabelTable& labels) {
    if (labels.size() != set.size()) {
        fail(ErrorKind::Data, "alignment error: " + std::to_string(set.size()) + " embeddings but " +
                                  std::to_string(labels.size()) + " label rows");
    }
    std::vector<const LabelRow*> aligned(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        aligned[i] = labels.find(set.sample_ids()[i]);
        if (aligned[i] == nullptr) {
            fail(ErrorKind::Data, "alignment error: no label row for sample '" + set.sample_ids()[i] + "'");
        }
    }
    return aligned;
}

/// Most frequent value among the neighbors; nullopt signals a tie.
inline std::optional<std::size_t> vote(std::span<const std::size_t> neighbors,
                                       const std::vector<std::optional<std::size_t>>& values, std::size_t categories,
                                       std::vector<std::size_t>* tied) {
    std::vector<std::size_t> counts(categories, 0);
    for (std::size_t j : neighbors) ++counts[*values[j]];
    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    tied->clear();
    for (std::size_t c = 0; c < categories; ++c) {
        if (counts[c] == top) tied->push_back(c);
    }
    if (tied->size() == 1) return tied->front();
    return std::nullopt;
}

}  // namespace detail

/// Face Recognition Consistency: replaces each configured label with the most
/// frequent label among the sample's top-k cosine neighbors (query excluded).
/// Single pass; the output keeps the row order of `labels` with source
/// clip_frc.
inline RefinementResult refine(const EmbeddingSet& set, const LabelTable& labels, const FrcConfig& cfg) {
    cfg.validate();
    require_normalized(set, "FRC refine");
    if (set.size() == 0) {
        require(labels.empty(), ErrorKind::Data, "alignment error: labels for an empty embedding set");
        return {LabelTable(), RefinementReport{}};
    }
    if (cfg.k >= set.size()) {
        fail(ErrorKind::Parameter, "FRC k = " + std::to_string(cfg.k) + " must be below N = " + std::to_string(set.size()));
    }
    auto aligned = detail::align_labels(set, labels);
    auto neighbors = all_top_k(set, cfg.k);

    std::map<std::string, LabelRow> refined;
    for (const auto* row : aligned) {
        LabelRow copy = *row;
        copy.source = LabelSource::ClipFrc;
        refined.emplace(copy.sample_id, std::move(copy));
    }

    RefinementReport report;
    for (Attribute attribute : cfg.attributes) {
        std::vector<std::optional<std::size_t>> values(set.size());
        for (std::size_t i = 0; i < set.size(); ++i) values[i] = categorical(*aligned[i], attribute);

        std::vector<bool> missing_flag(set.size(), false);
        for (const auto& list : neighbors) {
            for (std::size_t j : list.neighbor_indices) {
                if (!values[j]) missing_flag[j] = true;
            }
        }
        std::string missing;
        for (std::size_t j = 0; j < set.size(); ++j) {
            if (missing_flag[j]) missing += (missing.empty() ? "" : ", ") + set.sample_ids()[j];
        }
        if (!missing.empty()) {
            fail(ErrorKind::Data, "missing " + std::string(to_string(attribute)) + " labels on neighbors: " + missing);
        }

        const std::size_t categories = category_count(attribute);
        std::size_t changed = 0;
        std::vector<std::size_t> tied;
        for (std::size_t i = 0; i < set.size(); ++i) {
            auto winner = detail::vote(neighbors[i].neighbor_indices, values, categories, &tied);
            const auto original = values[i];
            std::optional<std::size_t> chosen = winner;
            if (!chosen) {
                chosen = (cfg.tie_rule == TieRule::KeepOriginal && original) ? original : tied.front();
            }
            if (chosen != original) {
                auto& row = refined.at(set.sample_ids()[i]);
                set_categorical(row, attribute, *chosen);
                report.change_log.push_back({set.sample_ids()[i], attribute,
                                             original ? categorical_name(attribute, *original) : std::string(),
                                             categorical_name(attribute, *chosen)});
                ++changed;
            }
        }
        report.changed_count[attribute] = changed;
    }
    std::sort(report.change_log.begin(), report.change_log.end(), [](const auto& a, const auto& b) {
        return std::tie(a.sample_id, a.attribute) < std::tie(b.sample_id, b.attribute);
    });

    std::vector<LabelRow> out;
    out.reserve(labels.size());
    for (const auto& row : labels.rows()) out.push_back(std::move(refined.at(row.sample_id)));
    return {LabelTable(std::move(out)), std::move(report)};
}

/// Stage-1 demographic consistency: sample ids (in embedding order) whose
/// FRC-refined label differs from the generation-time intent on any
/// configured attribute. The refined labels come from `observed` (e.g. CLIP
/// predictions) when given, otherwise from voting over `intended` itself.
inline std::vector<std::string> demographic_consistency_filter(const EmbeddingSet& set, const LabelTable& intended,
                                                               const FrcConfig& cfg,
                                                               const LabelTable* observed = nullptr) {
    auto refined = refine(set, observed != nullptr ? *observed : intended, cfg).labels;
    auto aligned = detail::align_labels(set, intended);
    std::vector<std::string> removed;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& want = *aligned[i];
        const auto& got = refined.at(want.sample_id);
        for (Attribute attribute : cfg.attributes) {
            auto target = categorical(want, attribute);
            if (!target) fail(ErrorKind::Data, "sample '" + want.sample_id + "' has no intended " + std::string(to_string(attribute)));
            if (categorical(got, attribute) != target) {
                removed.push_back(want.sample_id);
                break;
            }
        }
    }
    return removed;
}

}  // namespace varicurate
