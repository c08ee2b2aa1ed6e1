#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"
#include "varicurate/labels.hpp"
#include "varicurate/simkernel.hpp"

namespace varicurate {

/// Canonical label vocabulary of each prompt bank ("A photo of a <label> face").
inline std::vector<std::string> canonical_labels(Attribute attribute) {
    switch (attribute) {
        case Attribute::Race: return {"Caucasian", "Asian", "Indian", "African"};
        case Attribute::Gender: return {"Male", "Female"};
        case Attribute::Age: return {"Young", "Old"};
    }
    return {};
}

/// Text embeddings for one attribute's prompts. Rows may come in any order;
/// the row order is the tie-breaking order for classification.
class PromptBank {
public:
    PromptBank(Attribute attribute, std::vector<std::string> labels, EmbeddingSet text_embeddings)
        : attribute_(attribute), labels_(std::move(labels)), text_(normalize(text_embeddings)) {
        require(labels_.size() >= 2, ErrorKind::Parameter, "a prompt bank needs at least two labels");
        require(labels_.size() == text_.size(), ErrorKind::Parameter, "one text embedding per label required");
        auto expected = canonical_labels(attribute_);
        std::set<std::string> given(labels_.begin(), labels_.end());
        if (given.size() != labels_.size() || given != std::set<std::string>(expected.begin(), expected.end())) {
            std::string want;
            for (const auto& l : expected) want += (want.empty() ? "" : ", ") + l;
            fail(ErrorKind::Data, std::string(to_string(attribute_)) + " bank labels must be exactly {" + want + "}");
        }
    }

    /// Bank from a .femb whose sample ids are the labels; the attribute is
    /// inferred from the label vocabulary.
    static PromptBank from_embeddings(const EmbeddingSet& set) {
        std::set<std::string> given(set.sample_ids().begin(), set.sample_ids().end());
        for (auto attribute : {Attribute::Race, Attribute::Gender, Attribute::Age}) {
            auto expected = canonical_labels(attribute);
            if (given == std::set<std::string>(expected.begin(), expected.end())) {
                return PromptBank(attribute, set.sample_ids(), set);
            }
        }
        fail(ErrorKind::Data, "prompt bank labels do not match the race, gender or age vocabulary");
    }

    Attribute attribute() const noexcept { return attribute_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const EmbeddingSet& text_embeddings() const noexcept { return text_; }
    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return text_.dim(); }

    std::size_t index_of(const std::string& label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        require(it != labels_.end(), ErrorKind::Parameter, "label '" + label + "' not in bank");
        return static_cast<std::size_t>(it - labels_.begin());
    }

private:
    Attribute attribute_;
    std::vector<std::string> labels_;
    EmbeddingSet text_;
};

struct SoftLabel {
    std::vector<double> probabilities;  // bank order
    std::string argmax_label;
    double margin = 0.0;  // top-1 minus top-2 probability
};

namespace detail {

inline void softmax_accumulate(std::span<const double> logits, std::span<double> acc, double weight) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    std::vector<double> e(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(logits[i] - top);
        total += e[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i) acc[i] += weight * e[i] / total;
}

}  // namespace detail

/// Flip-averaged softmax over raw cosine similarities (no temperature).
/// Ties in the argmax go to the earlier bank label.
inline SoftLabel classify(std::span<const float> image, std::span<const float> flipped, const PromptBank& bank) {
    const std::size_t labels = bank.size();
    require(image.size() == bank.dim() && flipped.size() == bank.dim(), ErrorKind::Parameter,
            "classify: image and text embeddings differ in dimension");
    SoftLabel out;
    out.probabilities.assign(labels, 0.0);
    std::vector<double> sims(labels);
    for (auto view : {image, flipped}) {
        for (std::size_t i = 0; i < labels; ++i) sims[i] = cosine(view, bank.text_embeddings().row(i));
        detail::softmax_accumulate(sims, out.probabilities, 0.5);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < labels; ++i) {
        if (out.probabilities[i] > out.probabilities[best]) best = i;
    }
    double second = -1.0;
    for (std::size_t i = 0; i < labels; ++i) {
        if (i != best) second = std::max(second, out.probabilities[i]);
    }
    out.argmax_label = bank.labels()[best];
    out.margin = out.probabilities[best] - second;
    return out;
}

/// Continuous age score: flip-averaged probability of "Old".
inline double age_score(std::span<const float> image, std::span<const float> flipped, const PromptBank& age_bank) {
    require(age_bank.attribute() == Attribute::Age, ErrorKind::Parameter, "age_score needs the age prompt bank");
    auto soft = classify(image, flipped, age_bank);
    return std::clamp(soft.probabilities[age_bank.index_of("Old")], 0.0, 1.0);
}

/// Race, gender and age labels for every image. Flips are matched by sample
/// id; output rows follow the order of `images`.
inline LabelTable label_dataset(const EmbeddingSet& images, const EmbeddingSet& flips,
                                std::span<const PromptBank> banks) {
    if (images.size() != flips.size()) {
        fail(ErrorKind::Data, "alignment error: " + std::to_string(images.size()) + " images but " +
                                  std::to_string(flips.size()) + " flipped images");
    }
    std::vector<std::size_t> flip_row(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        flip_row[i] = flips.find(images.sample_ids()[i]);
        if (flip_row[i] == EmbeddingSet::npos) {
            fail(ErrorKind::Data, "alignment error: no flipped embedding for sample '" + images.sample_ids()[i] + "'");
        }
    }
    std::vector<LabelRow> rows(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
        LabelRow& row = rows[i];
        row.sample_id = images.sample_ids()[i];
        row.source = LabelSource::Clip;
        for (const auto& bank : banks) {
            auto soft = classify(images.row(i), flips.row(flip_row[i]), bank);
            switch (bank.attribute()) {
                case Attribute::Race: row.race = parse_race(soft.argmax_label); break;
                case Attribute::Gender: row.gender = parse_gender(soft.argmax_label); break;
                case Attribute::Age:
                    row.age_score = std::clamp(soft.probabilities[bank.index_of("Old")], 0.0, 1.0);
                    break;
            }
        }
    });
    return LabelTable(std::move(rows));
}

/// Per-class accuracy of predicted labels against reference labels, for
/// comparing labelers (e.g. CLIP vs CLIP-FRC vs an external predictor).
struct AccuracyReport {
    Attribute attribute = Attribute::Race;
    std::vector<std::size_t> correct;  // per reference class
    std::vector<std::size_t> total;
    double overall = 0.0;
};

inline AccuracyReport label_accuracy(const LabelTable& predicted, const LabelTable& reference, Attribute attribute) {
    AccuracyReport report;
    report.attribute = attribute;
    report.correct.assign(category_count(attribute), 0);
    report.total.assign(category_count(attribute), 0);
    std::size_t hits = 0;
    std::size_t seen = 0;
    for (const auto& ref : reference.rows()) {
        auto truth = categorical(ref, attribute);
        if (!truth) continue;
        const LabelRow* pred = predicted.find(ref.sample_id);
        if (pred == nullptr) fail(ErrorKind::Data, "no prediction for sample '" + ref.sample_id + "'");
        auto guess = categorical(*pred, attribute);
        ++report.total[*truth];
        ++seen;
        if (guess && *guess == *truth) {
            ++report.correct[*truth];
            ++hits;
        }
    }
    report.overall = seen == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(seen);
    return report;
}

}  // namespace varicurate
