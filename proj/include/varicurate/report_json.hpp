#pragma once

#include <string>

#include <json.hpp>

#include "varicurate/audit.hpp"
#include "varicurate/curation.hpp"
#include "varicurate/frc.hpp"
#include "varicurate/guidance.hpp"
#include "varicurate/vendi.hpp"

namespace varicurate {

inline nlohmann::json to_json(const FilterReport& r) {
    return {{"stage", to_string(r.stage)},
            {"threshold", r.threshold},
            {"kept_count", r.kept.size()},
            {"removed_count", r.removed.size()},
            {"kept", r.kept},
            {"removed", r.removed}};
}

inline nlohmann::json to_json(const Histogram& h) { return {{"edges", h.edges}, {"counts", h.counts}}; }

inline nlohmann::json to_json(const AuditReport& r) {
    nlohmann::json cells = nlohmann::json::object();
    for (Race race : kAllRaces) {
        for (Gender gender : kAllGenders) {
            cells[std::string(to_string(race)) + "_" + std::string(to_string(gender))] = r.cell_counts[cell_index(race, gender)];
        }
    }
    nlohmann::json out{{"cell_counts", cells},
                       {"scored_samples", r.scored_samples},
                       {"identity_count", r.identity_count},
                       {"ds_histogram", to_json(r.ds_histogram)},
                       {"noise_fraction", r.noise_fraction},
                       {"collapse_fraction", r.collapse_fraction}};
    out["interclass_mean_cosine"] = r.interclass_mean_cosine ? nlohmann::json(*r.interclass_mean_cosine) : nlohmann::json();
    return out;
}

inline nlohmann::json to_json(const LeakageReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < r.identity_ids.size(); ++i) {
        rows.push_back({{"identity", r.identity_ids[i]},
                        {"max_similarity", r.per_identity_max_similarity[i]},
                        {"nearest_reference", r.nearest_reference[i]}});
    }
    return {{"threshold", r.threshold}, {"exceed_count", r.exceed_count()}, {"identities", rows}};
}

inline nlohmann::json to_json(const RefinementReport& r) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [attribute, n] : r.changed_count) counts[std::string(to_string(attribute))] = n;
    return {{"changed_count", counts}, {"changes", r.change_log.size()}};
}

inline std::string encode_histogram_csv(const Histogram& h) {
    std::string out = "bin_left,bin_right,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out += format_real(h.edges[i]) + "," + format_real(h.edges[i + 1]) + "," + std::to_string(h.counts[i]) + "\n";
    }
    return out;
}

inline std::string encode_change_log_csv(const RefinementReport& r) {
    std::string out = "sample_id,attribute,old_label,new_label\n";
    for (const auto& c : r.change_log) {
        out += c.sample_id + "," + std::string(to_string(c.attribute)) + "," + c.old_label + "," + c.new_label + "\n";
    }
    return out;
}

}  // namespace varicurate
