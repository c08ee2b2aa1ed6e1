#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"
#include "varicurate/labels.hpp"
#include "varicurate/parallel.hpp"
#include "varicurate/rng.hpp"
#include "varicurate/simkernel.hpp"

namespace varicurate {

inline constexpr double kQualityThreshold = 0.7;
inline constexpr double kIdentityThreshold = 0.3;

struct DivergenceConfig {
    double low = 0.5;
    double high = 0.8;
    double noise_floor = 0.3;
    double collapse_ceiling = 0.9;

    void validate() const {
        require(-1.0 <= low && low < high && high <= 1.0, ErrorKind::Parameter,
                "divergence range must satisfy -1 <= low < high <= 1");
        require(noise_floor < low, ErrorKind::Parameter, "noise floor must lie below the divergence range");
    }
};

enum class FilterStage { Stage1Quality, Stage1Demographic, Stage2Identity, DsNoise };

constexpr std::string_view to_string(FilterStage stage) {
    switch (stage) {
        case FilterStage::Stage1Quality: return "stage1_quality";
        case FilterStage::Stage1Demographic: return "stage1_demographic";
        case FilterStage::Stage2Identity: return "stage2_identity";
        case FilterStage::DsNoise: return "ds_noise";
    }
    return "unknown";
}

/// Partition of the input sample ids into kept and removed, input order preserved.
struct FilterReport {
    FilterStage stage = FilterStage::Stage1Quality;
    std::vector<std::string> kept;
    std::vector<std::string> removed;
    double threshold = 0.0;
};

/// Divergence score of every sample: cosine between the sample and its
/// identity's mean embedding. Rows follow the set order; source = computed.
inline LabelTable divergence_scores(const EmbeddingSet& set, const MeanEmbeddingTable& means) {
    require_normalized(set, "divergence_scores");
    require(set.empty() || means.dim == set.dim(), ErrorKind::Parameter, "mean table dimension does not match embeddings");
    std::vector<std::size_t> mean_row(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        mean_row[i] = means.find(set.identity_of(i));
        if (mean_row[i] == EmbeddingSet::npos) {
            fail(ErrorKind::Data, "identity '" + set.identity_of(i) + "' of sample '" + set.sample_ids()[i] +
                                      "' has no mean embedding");
        }
    }
    std::vector<LabelRow> rows(set.size());
    parallel_for(set.size(), [&](std::size_t i) {
        rows[i].sample_id = set.sample_ids()[i];
        rows[i].divergence_score = cosine(set.row(i), means.mean(mean_row[i]));
        rows[i].source = LabelSource::Computed;
    });
    return LabelTable(std::move(rows));
}

/// Keeps samples whose quality score is at least the threshold.
inline FilterReport stage1_quality_filter(const LabelTable& labels, double threshold = kQualityThreshold) {
    FilterReport report{FilterStage::Stage1Quality, {}, {}, threshold};
    for (const auto& row : labels.rows()) {
        if (!row.quality_score) fail(ErrorKind::Data, "sample '" + row.sample_id + "' has no quality_score");
        (*row.quality_score >= threshold ? report.kept : report.removed).push_back(row.sample_id);
    }
    return report;
}

/// Wraps the FRC demographic-consistency removal list as a filter report
/// over the samples of `set`.
inline FilterReport demographic_report(const EmbeddingSet& set, const std::vector<std::string>& removed) {
    FilterReport report{FilterStage::Stage1Demographic, {}, {}, 0.0};
    std::unordered_map<std::string_view, bool> drop;
    for (const auto& id : removed) drop[id] = true;
    for (const auto& id : set.sample_ids()) (drop.count(id) != 0 ? report.removed : report.kept).push_back(id);
    return report;
}

namespace detail {

template <typename Lookup>
FilterReport identity_filter(const EmbeddingSet& generated, double threshold, Lookup&& base_row) {
    require_normalized(generated, "stage2_identity_filter");
    FilterReport report{FilterStage::Stage2Identity, {}, {}, threshold};
    std::vector<char> keep(generated.size(), 0);
    std::vector<std::span<const float>> bases(generated.size());
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const auto& identity = generated.identity_of(i);
        auto row = base_row(identity);
        if (!row) fail(ErrorKind::Data, "identity '" + identity + "' of sample '" + generated.sample_ids()[i] + "' has no base embedding");
        bases[i] = *row;
    }
    parallel_for(generated.size(), [&](std::size_t i) { keep[i] = cosine(generated.row(i), bases[i]) >= threshold; });
    for (std::size_t i = 0; i < generated.size(); ++i) (keep[i] ? report.kept : report.removed).push_back(generated.sample_ids()[i]);
    return report;
}

}  // namespace detail

/// Stage-2 identity preservation against per-identity base embeddings given
/// as a set of stage-1 images (keyed by identity, falling back to sample id).
inline FilterReport stage2_identity_filter(const EmbeddingSet& base, const EmbeddingSet& generated,
                                           double threshold = kIdentityThreshold) {
    require(base.dim() == generated.dim() || generated.empty(), ErrorKind::Parameter, "base and generated dimensions differ");
    std::unordered_map<std::string, std::size_t> by_identity;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (!by_identity.emplace(base.identity_of(i), i).second) {
            fail(ErrorKind::Data, "identity '" + base.identity_of(i) + "' has more than one base embedding");
        }
    }
    return detail::identity_filter(generated, threshold, [&](const std::string& id) -> std::optional<std::span<const float>> {
        auto it = by_identity.find(id);
        if (it == by_identity.end()) return std::nullopt;
        return base.row(it->second);
    });
}

/// Stage-2 identity preservation against identity mean embeddings.
inline FilterReport stage2_identity_filter(const MeanEmbeddingTable& base, const EmbeddingSet& generated,
                                           double threshold = kIdentityThreshold) {
    require(base.dim == generated.dim() || generated.empty(), ErrorKind::Parameter, "base and generated dimensions differ");
    return detail::identity_filter(generated, threshold, [&](const std::string& id) -> std::optional<std::span<const float>> {
        auto r = base.find(id);
        if (r == EmbeddingSet::npos) return std::nullopt;
        return base.mean(r);
    });
}

/// Flags samples whose divergence score falls below the noise floor.
inline FilterReport ds_noise_detect(const LabelTable& labels, const DivergenceConfig& cfg = {}) {
    FilterReport report{FilterStage::DsNoise, {}, {}, cfg.noise_floor};
    for (const auto& row : labels.rows()) {
        if (!row.divergence_score) fail(ErrorKind::Data, "sample '" + row.sample_id + "' has no divergence_score");
        (*row.divergence_score < cfg.noise_floor ? report.removed : report.kept).push_back(row.sample_id);
    }
    return report;
}

struct PlanCell {
    Race race;
    Gender gender;
    std::size_t id_count;
};

/// Balanced generation plan: identities spread evenly over the 8 race x gender
/// cells, with independent uniform age and divergence-score conditions per
/// image. Identity j (0-based, cell-major) owns images
/// [j * images_per_id, (j + 1) * images_per_id).
struct CurationPlan {
    std::vector<PlanCell> cells;
    std::size_t images_per_id = 0;
    std::vector<double> age_draws;
    std::vector<double> ds_draws;
    std::uint64_t seed = 0;
    DivergenceConfig config;

    std::size_t identity_count() const {
        std::size_t n = 0;
        for (const auto& c : cells) n += c.id_count;
        return n;
    }
    std::size_t image_count() const { return age_draws.size(); }

    const PlanCell& cell_of_identity(std::size_t identity) const {
        for (const auto& c : cells) {
            if (identity < c.id_count) return c;
            identity -= c.id_count;
        }
        fail(ErrorKind::Parameter, "identity index out of range");
    }

    std::string identity_name(std::size_t identity) const {
        const auto& c = cell_of_identity(identity);
        std::string index = std::to_string(identity);
        if (index.size() < 6) index.insert(0, 6 - index.size(), '0');
        return std::string(to_string(c.race)) + "_" + std::string(to_string(c.gender)) + "_" + index;
    }
};

inline CurationPlan make_plan(std::size_t ids_per_cell, std::size_t images_per_id, const DivergenceConfig& cfg,
                              std::uint64_t seed) {
    cfg.validate();
    require(ids_per_cell >= 1 && images_per_id >= 1, ErrorKind::Parameter, "plan needs positive identity and image counts");
    CurationPlan plan;
    plan.images_per_id = images_per_id;
    plan.seed = seed;
    plan.config = cfg;
    for (Race r : kAllRaces) {
        for (Gender g : kAllGenders) plan.cells.push_back({r, g, ids_per_cell});
    }
    const std::size_t images = plan.identity_count() * images_per_id;
    plan.age_draws.resize(images);
    plan.ds_draws.resize(images);
    Rng rng(seed);
    for (std::size_t i = 0; i < images; ++i) {
        plan.age_draws[i] = rng.uniform();
        plan.ds_draws[i] = rng.uniform(cfg.low, cfg.high);
    }
    return plan;
}

/// One JSON object per planned image, one per line.
inline std::string encode_plan_jsonl(const CurationPlan& plan) {
    std::string out;
    out.reserve(plan.image_count() * 110);
    for (std::size_t i = 0; i < plan.image_count(); ++i) {
        const std::size_t identity = i / plan.images_per_id;
        const auto& cell = plan.cell_of_identity(identity);
        out += "{\"identity\":\"" + plan.identity_name(identity) + "\",\"race\":\"";
        out += to_string(cell.race);
        out += "\",\"gender\":\"";
        out += to_string(cell.gender);
        out += "\",\"image\":" + std::to_string(i % plan.images_per_id) + ",\"age\":" + format_real(plan.age_draws[i]) +
               ",\"ds\":" + format_real(plan.ds_draws[i]) + "}\n";
    }
    return out;
}

}  // namespace varicurate
