#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "varicurate/audit.hpp"
#include "varicurate/curation.hpp"
#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"
#include "varicurate/frc.hpp"
#include "varicurate/guidance.hpp"
#include "varicurate/io.hpp"
#include "varicurate/labels.hpp"
#include "varicurate/parallel.hpp"
#include "varicurate/report_json.hpp"
#include "varicurate/vendi.hpp"
#include "varicurate/zslabel.hpp"

namespace varicurate::cli {

/// Process exit codes, one per error kind.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kDataError = 2,
    kParameterError = 3,
    kFormatError = 4,
    kNumericError = 5,
    kIoError = 6,
};

constexpr int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Data: return kDataError;
        case ErrorKind::Parameter: return kParameterError;
        case ErrorKind::Format: return kFormatError;
        case ErrorKind::Numeric: return kNumericError;
        case ErrorKind::Io: return kIoError;
    }
    return kInternal;
}

struct CommandResult {
    int exit_code = kOk;
    std::vector<std::string> output_paths;
};

namespace detail {

using nlohmann::json;

/// Files are staged in memory and written only after the command succeeded.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;

    void add(const std::string& path, std::string bytes) {
        if (!path.empty()) files.emplace_back(path, std::move(bytes));
    }
    std::vector<std::string> commit() const {
        std::vector<std::string> paths;
        for (const auto& [path, bytes] : files) {
            atomic_write(path, bytes);
            paths.push_back(path);
        }
        return paths;
    }
};

inline std::vector<Attribute> parse_attributes(const std::string& text) {
    std::vector<Attribute> out;
    for (auto part : split(text, ',')) {
        auto a = parse_attribute(part);
        if (!a || *a == Attribute::Age) fail(ErrorKind::Parameter, "unknown FRC attribute '" + std::string(part) + "'");
        out.push_back(*a);
    }
    return out;
}

inline TieRule parse_tie_rule(const std::string& text) {
    if (text == "keep_original") return TieRule::KeepOriginal;
    if (text == "bank_order") return TieRule::BankOrder;
    fail(ErrorKind::Parameter, "unknown tie rule '" + text + "'");
}

inline SamplerKind parse_sampler(const std::string& text) {
    if (text == "deterministic") return SamplerKind::Deterministic;
    if (text == "ancestral") return SamplerKind::Ancestral;
    fail(ErrorKind::Parameter, "unknown sampler '" + text + "'");
}

/// sample_id,quality_score CSV.
inline std::unordered_map<std::string, double> load_quality(const std::string& path) {
    auto text = read_file(path);
    auto lines = lines_of(text);
    if (lines.empty() || lines.front() != "sample_id,quality_score") {
        fail(ErrorKind::Format, "quality CSV must start with header 'sample_id,quality_score'");
    }
    std::unordered_map<std::string, double> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto fields = split(lines[i], ',');
        auto value = fields.size() == 2 ? parse_real(fields[1]) : std::nullopt;
        if (!value) fail(ErrorKind::Format, "quality CSV line " + std::to_string(i + 1) + " is malformed");
        out[std::string(fields[0])] = *value;
    }
    return out;
}

/// Whitespace- or comma-separated numeric matrix, optionally led by id columns.
inline EmbeddingSet parse_matrix(std::string_view text, bool id_column, bool identity_column) {
    std::vector<float> data;
    std::vector<std::string> ids;
    std::vector<std::string> identities;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    for (auto line : lines_of(text)) {
        ++line_no;
        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == ',')) ++pos;
            if (pos >= line.size()) break;
            std::size_t end = pos;
            while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != ',') ++end;
            fields.push_back(line.substr(pos, end - pos));
            pos = end;
        }
        if (fields.empty() || fields.front().starts_with('#')) continue;
        std::size_t first = 0;
        if (id_column) ids.emplace_back(fields[first++]);
        if (identity_column) {
            if (first >= fields.size()) fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": missing identity column");
            identities.emplace_back(fields[first++]);
        }
        const std::size_t width = fields.size() - first;
        if (width == 0) fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": no numeric values");
        if (dim == 0) dim = width;
        if (width != dim) {
            fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": expected " + std::to_string(dim) + " values, got " +
                                        std::to_string(width));
        }
        for (std::size_t f = first; f < fields.size(); ++f) {
            auto v = parse_real(fields[f]);
            if (!v) fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": not a number '" + std::string(fields[f]) + "'");
            data.push_back(static_cast<float>(*v));
        }
        if (!id_column) {
            std::string id = std::to_string(ids.size());
            ids.push_back("s" + std::string(id.size() < 6 ? 6 - id.size() : 0, '0') + id);
        }
    }
    return EmbeddingSet(dim == 0 ? 1 : dim, std::move(data), std::move(ids), std::move(identities));
}

/// Labels for audit: demographics looked up by sample id, then by identity
/// id; divergence scores from a separate table when given.
inline LabelTable merge_audit_labels(const EmbeddingSet& set, const LabelTable& demographics, const LabelTable* ds) {
    std::vector<LabelRow> rows;
    rows.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        LabelRow row;
        row.sample_id = set.sample_ids()[i];
        const LabelRow* demo = demographics.find(row.sample_id);
        if (demo == nullptr) demo = demographics.find(set.identity_of(i));
        if (demo != nullptr) {
            row.race = demo->race;
            row.gender = demo->gender;
            row.divergence_score = demo->divergence_score;
            row.source = demo->source;
        }
        if (ds != nullptr) {
            if (const LabelRow* d = ds->find(row.sample_id)) row.divergence_score = d->divergence_score;
        }
        rows.push_back(std::move(row));
    }
    return LabelTable(std::move(rows));
}

inline std::string encode_vendi_csv(const VendiResult& r, const EmbeddingSet& set) {
    std::string out = "record,row,col,value\n";
    out += "score,,," + format_real(r.score) + "\n";
    for (std::size_t i = 0; i < r.normalized_eigenvalues.size(); ++i) {
        out += "eigenvalue," + std::to_string(i) + ",," + format_real(r.normalized_eigenvalues[i]) + "\n";
    }
    if (r.gradient) {
        for (Eigen::Index i = 0; i < r.gradient->rows(); ++i) {
            for (Eigen::Index j = 0; j < r.gradient->cols(); ++j) {
                out += "gradient," + set.sample_ids()[static_cast<std::size_t>(i)] + "," + std::to_string(j) + "," +
                       format_real((*r.gradient)(i, j)) + "\n";
            }
        }
    }
    return out;
}

}  // namespace detail

/// Parses and executes one subcommand. Prints exactly one JSON summary line to
/// `out`; diagnostics go to `err`. Outputs are written atomically, and only
/// when the command succeeds.
inline CommandResult run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using detail::json;
    CLI::App app{"varicurate: embedding-space curation for synthetic face datasets", "varicurate"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker thread cap (default: VARICURATE_THREADS or 1)");

    detail::Outputs outputs;
    json summary;

    // label
    std::string images_path, flips_path, quality_path, out_path;
    std::vector<std::string> bank_paths;
    auto* label = app.add_subcommand("label", "Zero-shot demographic labels from CLIP-style embeddings");
    label->add_option("--images", images_path, "Image embeddings (.femb)")->required();
    label->add_option("--flips", flips_path, "Flipped-image embeddings (.femb)")->required();
    label->add_option("--prompt-bank", bank_paths, "Prompt bank .femb, one per attribute")->required();
    label->add_option("--quality", quality_path, "Optional sample_id,quality_score CSV to merge");
    label->add_option("--out", out_path, "Output label CSV")->required();

    // frc
    std::string embeddings_path, labels_path, attributes = "race,gender", tie_rule = "keep_original", report_path;
    std::size_t k = 50;
    auto* frc = app.add_subcommand("frc", "Refine labels by top-k face-embedding consistency");
    frc->add_option("--embeddings", embeddings_path)->required();
    frc->add_option("--labels", labels_path)->required();
    frc->add_option("--k", k, "Neighbors per vote")->capture_default_str();
    frc->add_option("--attributes", attributes, "Comma-separated: race,gender")->capture_default_str();
    frc->add_option("--tie-rule", tie_rule, "keep_original | bank_order")->capture_default_str();
    frc->add_option("--out", out_path, "Refined label CSV")->required();
    frc->add_option("--report", report_path, "Change log CSV");

    // vendi
    bool with_grad = false;
    auto* vendi = app.add_subcommand("vendi", "Vendi score of an embedding batch");
    vendi->add_option("--embeddings", embeddings_path)->required();
    vendi->add_flag("--grad", with_grad, "Also emit d(-VS)/d(embeddings)");
    vendi->add_option("--out", out_path, "CSV with score, spectrum and gradient");

    // guide
    std::size_t components = 4, dim = 16, steps = 50, batch = 64, seeds = 1, self_recurrence = 0;
    double scale = 0.0, radius = 3.0, variance = 0.5;
    std::uint64_t seed = 0;
    std::string sampler = "ancestral";
    auto* guide = app.add_subcommand("guide", "Vendi-guided sampling in the Gaussian-mixture sandbox");
    guide->add_option("--components", components)->capture_default_str();
    guide->add_option("--dim", dim)->capture_default_str();
    guide->add_option("--steps", steps)->capture_default_str();
    guide->add_option("--scale", scale)->capture_default_str();
    guide->add_option("--batch", batch)->capture_default_str();
    guide->add_option("--seeds", seeds, "Number of seeds, starting at --seed")->capture_default_str();
    guide->add_option("--seed", seed)->capture_default_str();
    guide->add_option("--sampler", sampler, "ancestral | deterministic")->capture_default_str();
    guide->add_option("--self-recurrence", self_recurrence)->capture_default_str();
    guide->add_option("--radius", radius, "Component distance from the origin")->capture_default_str();
    guide->add_option("--variance", variance, "Component variance")->capture_default_str();
    guide->add_option("--out", out_path, "Trajectory CSV");

    // ds
    std::string means_path, means_out;
    auto* ds = app.add_subcommand("ds", "Divergence scores against identity mean embeddings");
    ds->add_option("--embeddings", embeddings_path)->required();
    ds->add_option("--means", means_path, "Precomputed identity means (.femb); default: computed from --embeddings");
    ds->add_option("--out", out_path, "Label CSV with divergence_score")->required();
    ds->add_option("--means-out", means_out, "Write identity means (.femb)");

    // filter
    std::string stage, observed_path, base_path;
    std::optional<double> threshold;
    auto* filter = app.add_subcommand("filter", "Stage-1/stage-2 and DS-noise filters");
    filter->add_option("--stage", stage, "1q | 1d | 2id | ds")->required()->check(CLI::IsMember({"1q", "1d", "2id", "ds"}));
    filter->add_option("--labels", labels_path, "Labels (1q: quality, 1d: intended, ds: divergence)");
    filter->add_option("--embeddings", embeddings_path, "Embeddings (1d: face embeddings, 2id: generated)");
    filter->add_option("--observed", observed_path, "1d: observed (e.g. CLIP) labels to refine");
    filter->add_option("--base", base_path, "2id: stage-1 base embeddings (.femb)");
    filter->add_option("--threshold", threshold, "1q: 0.7, 2id: 0.3, ds: noise floor 0.3");
    filter->add_option("--k", k)->capture_default_str();
    filter->add_option("--attributes", attributes)->capture_default_str();
    filter->add_option("--out", out_path, "Filter report JSON");

    // plan
    std::size_t ids_per_cell = 0, images_per_id = 0;
    std::string plan_out = "plan.jsonl";
    double ds_low = 0.5, ds_high = 0.8;
    auto* plan = app.add_subcommand("plan", "Balanced generation plan with sampled age and DS conditions");
    plan->add_option("--ids-per-cell", ids_per_cell)->required();
    plan->add_option("--images-per-id", images_per_id)->required();
    plan->add_option("--ds-low", ds_low)->capture_default_str();
    plan->add_option("--ds-high", ds_high)->capture_default_str();
    plan->add_option("--seed", seed)->capture_default_str();
    plan->add_option("--out", plan_out, "Plan JSONL")->capture_default_str();

    // audit
    std::string ds_path, hist_out;
    double noise_floor = 0.3, collapse_ceiling = 0.9;
    auto* audit = app.add_subcommand("audit", "Dataset balance, interclass similarity and DS histogram");
    audit->add_option("--embeddings", embeddings_path)->required();
    audit->add_option("--labels", labels_path, "Race/gender by sample id or identity id")->required();
    audit->add_option("--ds", ds_path, "Divergence-score CSV (default: from --labels)");
    audit->add_option("--noise-floor", noise_floor)->capture_default_str();
    audit->add_option("--collapse-ceiling", collapse_ceiling)->capture_default_str();
    audit->add_option("--out", out_path, "Report JSON");
    audit->add_option("--hist-out", hist_out, "DS histogram CSV");
    audit->add_option("--means-out", means_out, "Identity means (.femb) for external projection");

    // leak
    std::string probe_path, reference_path;
    auto* leak = app.add_subcommand("leak", "Maximum similarity of each probe identity to a reference set");
    leak->add_option("--probe", probe_path, "Probe embeddings; means taken per identity")->required();
    leak->add_option("--reference", reference_path)->required();
    leak->add_option("--threshold", threshold, "Exceedance threshold (default 0.3)");
    leak->add_option("--out", out_path, "Report JSON");
    leak->add_option("--hist-out", hist_out, "Histogram CSV of maximum similarities");

    // convert
    std::string input_path;
    bool id_column = false, identity_column = false, normalize_rows = false;
    auto* convert = app.add_subcommand("convert", "Numeric text matrix to .femb");
    convert->add_option("--input", input_path)->required();
    convert->add_option("--out", out_path)->required();
    convert->add_flag("--id-column", id_column, "First field of each line is the sample id");
    convert->add_flag("--identity-column", identity_column, "Next field is the identity id");
    convert->add_flag("--normalize", normalize_rows, "Normalize rows to unit length");

    std::string command = args.empty() ? std::string() : args.front();
    auto emit_error = [&](int code, const std::string& kind, const std::string& message) {
        err << "varicurate: " << message << "\n";
        json line{{"command", command}, {"status", "error"}, {"exit_code", code}, {"error", kind}, {"message", message}};
        out << line.dump() << "\n";
        return CommandResult{code, {}};
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        err << app.help();
        return {kOk, {}};
    } catch (const CLI::CallForAllHelp&) {
        err << app.help("", CLI::AppFormatMode::All);
        return {kOk, {}};
    } catch (const CLI::ParseError& e) {
        return emit_error(kParameterError, "parameter", e.what());
    }
    if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
    if (threads > 0) set_thread_count(threads);

    try {
        summary = json{{"command", command}, {"status", "ok"}, {"exit_code", 0}};
        if (label->parsed()) {
            auto images = load_embeddings(images_path);
            auto flips = load_embeddings(flips_path);
            std::vector<PromptBank> banks;
            for (const auto& path : bank_paths) banks.push_back(PromptBank::from_embeddings(load_embeddings(path)));
            auto table = label_dataset(images, flips, banks);
            if (!quality_path.empty()) {
                auto quality = detail::load_quality(quality_path);
                auto rows = table.rows();
                for (auto& row : rows) {
                    auto it = quality.find(row.sample_id);
                    if (it != quality.end()) row.quality_score = it->second;
                }
                table = LabelTable(std::move(rows));
            }
            outputs.add(out_path, encode_labels(table));
            summary["rows"] = table.size();
            summary["banks"] = banks.size();
        } else if (frc->parsed()) {
            FrcConfig cfg{k, detail::parse_attributes(attributes), detail::parse_tie_rule(tie_rule)};
            auto result = refine(load_embeddings(embeddings_path), load_labels(labels_path), cfg);
            outputs.add(out_path, encode_labels(result.labels));
            outputs.add(report_path, encode_change_log_csv(result.report));
            summary["rows"] = result.labels.size();
            summary["refinement"] = to_json(result.report);
        } else if (vendi->parsed()) {
            auto set = load_embeddings(embeddings_path);
            auto result = with_grad ? vendi_loss_grad(set) : vendi_score(set);
            outputs.add(out_path, detail::encode_vendi_csv(result, set));
            summary["n"] = set.size();
            summary["score"] = result.score;
            summary["loss"] = result.loss;
            summary["degenerate_spectrum"] = result.degenerate_spectrum;
        } else if (guide->parsed()) {
            require(seeds >= 1, ErrorKind::Parameter, "--seeds must be positive");
            auto schedule = NoiseSchedule::linear(steps);
            auto model = MixtureModel::well_separated(components, dim, radius, variance);
            auto embed = EmbedMap::sphere();
            std::string csv = "seed,step,vendi,mean_pairwise_cosine\n";
            json per_seed = json::array();
            double mean_cos = 0.0;
            for (std::size_t s = 0; s < seeds; ++s) {
                GuidanceConfig cfg;
                cfg.scale = scale;
                cfg.batch_size = batch;
                cfg.self_recurrence = self_recurrence;
                cfg.sampler = detail::parse_sampler(sampler);
                cfg.seed = seed + s;
                auto traj = guided_sample(schedule, model, embed, cfg);
                auto report = diversity_report(traj);
                for (std::size_t i = 0; i < traj.denoised_vendi.size(); ++i) {
                    csv += std::to_string(cfg.seed) + "," + std::to_string(steps - i) + "," + format_real(traj.denoised_vendi[i]) +
                           "," + format_real(traj.denoised_cosine[i]) + "\n";
                }
                csv += std::to_string(cfg.seed) + ",0," + format_real(report.final_vendi) + "," +
                       format_real(report.mean_pairwise_cosine) + "\n";
                per_seed.push_back({{"seed", cfg.seed}, {"final_vendi", report.final_vendi}, {"mean_pairwise_cosine", report.mean_pairwise_cosine}});
                mean_cos += report.mean_pairwise_cosine;
            }
            outputs.add(out_path, csv);
            summary["scale"] = scale;
            summary["mean_pairwise_cosine"] = mean_cos / static_cast<double>(seeds);
            summary["seeds"] = per_seed;
        } else if (ds->parsed()) {
            auto set = load_embeddings(embeddings_path);
            MeanEmbeddingTable means;
            if (means_path.empty()) {
                means = mean_by_identity(set);
            } else {
                auto m = load_embeddings(means_path);
                require_normalized(m, "identity means");
                std::vector<std::size_t> order(m.size());
                std::iota(order.begin(), order.end(), 0);
                std::sort(order.begin(), order.end(), [&](auto a, auto b) { return m.sample_ids()[a] < m.sample_ids()[b]; });
                auto sorted = m.select(order);
                means.dim = sorted.dim();
                means.identity_ids = sorted.sample_ids();
                means.means = sorted.data();
                means.counts.assign(sorted.size(), 0);
            }
            auto table = divergence_scores(set, means);
            outputs.add(out_path, encode_labels(table));
            if (!means_out.empty()) outputs.add(means_out, encode_embeddings(means.as_embedding_set()));
            summary["rows"] = table.size();
            summary["identities"] = means.size();
        } else if (filter->parsed()) {
            FilterReport report;
            if (stage == "1q") {
                require(!labels_path.empty(), ErrorKind::Parameter, "filter --stage 1q needs --labels");
                report = stage1_quality_filter(load_labels(labels_path), threshold.value_or(kQualityThreshold));
            } else if (stage == "1d") {
                require(!labels_path.empty() && !embeddings_path.empty(), ErrorKind::Parameter,
                        "filter --stage 1d needs --embeddings and --labels");
                auto set = load_embeddings(embeddings_path);
                auto intended = load_labels(labels_path);
                FrcConfig cfg{k, detail::parse_attributes(attributes), TieRule::KeepOriginal};
                std::vector<std::string> removed;
                if (observed_path.empty()) {
                    removed = demographic_consistency_filter(set, intended, cfg);
                } else {
                    auto observed = load_labels(observed_path);
                    removed = demographic_consistency_filter(set, intended, cfg, &observed);
                }
                report = demographic_report(set, removed);
            } else if (stage == "2id") {
                require(!base_path.empty() && !embeddings_path.empty(), ErrorKind::Parameter,
                        "filter --stage 2id needs --base and --embeddings");
                report = stage2_identity_filter(load_embeddings(base_path), load_embeddings(embeddings_path),
                                                threshold.value_or(kIdentityThreshold));
            } else {
                require(!labels_path.empty(), ErrorKind::Parameter, "filter --stage ds needs --labels");
                DivergenceConfig cfg;
                if (threshold) cfg.noise_floor = *threshold;
                report = ds_noise_detect(load_labels(labels_path), cfg);
            }
            outputs.add(out_path, to_json(report).dump(2) + "\n");
            summary["stage"] = to_string(report.stage);
            summary["threshold"] = report.threshold;
            summary["kept"] = report.kept.size();
            summary["removed"] = report.removed.size();
        } else if (plan->parsed()) {
            DivergenceConfig cfg;
            cfg.low = ds_low;
            cfg.high = ds_high;
            cfg.noise_floor = std::min(cfg.noise_floor, ds_low - 1e-9);
            auto p = make_plan(ids_per_cell, images_per_id, cfg, seed);
            outputs.add(plan_out, encode_plan_jsonl(p));
            summary["identities"] = p.identity_count();
            summary["images"] = p.image_count();
        } else if (audit->parsed()) {
            auto set = load_embeddings(embeddings_path);
            auto demographics = load_labels(labels_path);
            std::optional<LabelTable> ds_table;
            if (!ds_path.empty()) ds_table = load_labels(ds_path);
            auto labels = detail::merge_audit_labels(set, demographics, ds_table ? &*ds_table : nullptr);
            auto means = mean_by_identity(set);
            DivergenceConfig cfg;
            cfg.noise_floor = noise_floor;
            cfg.collapse_ceiling = collapse_ceiling;
            auto report = audit_dataset(set, labels, means, cfg);
            auto report_json = to_json(report);
            outputs.add(out_path, report_json.dump(2) + "\n");
            outputs.add(hist_out, encode_histogram_csv(report.ds_histogram));
            if (!means_out.empty()) outputs.add(means_out, encode_embeddings(means.as_embedding_set()));
            summary["cell_counts"] = report_json["cell_counts"];
            summary["interclass_mean_cosine"] = report_json["interclass_mean_cosine"];
            summary["noise_fraction"] = report.noise_fraction;
            summary["collapse_fraction"] = report.collapse_fraction;
        } else if (leak->parsed()) {
            auto probe = load_embeddings(probe_path);
            auto reference = load_embeddings(reference_path);
            auto report = leakage_check(mean_by_identity(probe), reference, threshold.value_or(kIdentityThreshold));
            outputs.add(out_path, to_json(report).dump(2) + "\n");
            if (!hist_out.empty()) {
                auto h = Histogram::uniform(-1.0, 1.0, kDsHistogramBins);
                for (double s : report.per_identity_max_similarity) h.add(s);
                outputs.add(hist_out, encode_histogram_csv(h));
            }
            summary["identities"] = report.identity_ids.size();
            summary["threshold"] = report.threshold;
            summary["exceed_count"] = report.exceed_count();
        } else if (convert->parsed()) {
            auto set = detail::parse_matrix(read_file(input_path), id_column, identity_column);
            if (normalize_rows) set = normalize(set);
            outputs.add(out_path, encode_embeddings(set));
            summary["rows"] = set.size();
            summary["dim"] = set.dim();
        }
        summary["outputs"] = outputs.commit();
    } catch (const Error& e) {
        return emit_error(exit_code_for(e.kind()), std::string(to_string(e.kind())), e.what());
    } catch (const std::exception& e) {
        return emit_error(kInternal, "internal", e.what());
    }
    out << summary.dump() << "\n";
    return {kOk, summary["outputs"].get<std::vector<std::string>>()};
}

}  // namespace varicurate::cli
