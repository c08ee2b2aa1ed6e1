#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "varicurate/error.hpp"

namespace varicurate {

enum class Race { Caucasian, Asian, Indian, African };
enum class Gender { Male, Female };
enum class LabelSource { Clip, ClipFrc, External, Computed };
enum class Attribute { Race, Gender, Age };

inline constexpr std::array<Race, 4> kAllRaces{Race::Caucasian, Race::Asian, Race::Indian, Race::African};
inline constexpr std::array<Gender, 2> kAllGenders{Gender::Male, Gender::Female};

constexpr std::string_view to_string(Race r) {
    constexpr std::array<std::string_view, 4> names{"Caucasian", "Asian", "Indian", "African"};
    return names[static_cast<std::size_t>(r)];
}
constexpr std::string_view to_string(Gender g) { return g == Gender::Male ? "Male" : "Female"; }
constexpr std::string_view to_string(LabelSource s) {
    constexpr std::array<std::string_view, 4> names{"clip", "clip_frc", "external", "computed"};
    return names[static_cast<std::size_t>(s)];
}
constexpr std::string_view to_string(Attribute a) {
    constexpr std::array<std::string_view, 3> names{"race", "gender", "age"};
    return names[static_cast<std::size_t>(a)];
}

inline std::optional<Race> parse_race(std::string_view s) {
    for (Race r : kAllRaces) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}
inline std::optional<Gender> parse_gender(std::string_view s) {
    for (Gender g : kAllGenders) {
        if (to_string(g) == s) return g;
    }
    return std::nullopt;
}
inline std::optional<LabelSource> parse_source(std::string_view s) {
    for (auto src : {LabelSource::Clip, LabelSource::ClipFrc, LabelSource::External, LabelSource::Computed}) {
        if (to_string(src) == s) return src;
    }
    return std::nullopt;
}
inline std::optional<Attribute> parse_attribute(std::string_view s) {
    for (auto a : {Attribute::Race, Attribute::Gender, Attribute::Age}) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

/// Index of a race/gender pair in the 8-cell demographic grid (race-major).
constexpr std::size_t cell_index(Race r, Gender g) {
    return static_cast<std::size_t>(r) * 2 + static_cast<std::size_t>(g);
}

struct LabelRow {
    std::string sample_id;
    std::optional<Race> race;
    std::optional<Gender> gender;
    std::optional<double> age_score;         // [0, 1]
    std::optional<double> quality_score;     // [0, 1]
    std::optional<double> divergence_score;  // [-1, 1]
    LabelSource source = LabelSource::External;

    bool operator==(const LabelRow&) const = default;
};

/// Per-sample labels. Row order is preserved through every operation.
class LabelTable {
public:
    LabelTable() = default;

    explicit LabelTable(std::vector<LabelRow> rows) : rows_(std::move(rows)) {
        index_.reserve(rows_.size());
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const auto& row = rows_[i];
            if (!index_.emplace(row.sample_id, i).second) {
                fail(ErrorKind::Data, "duplicate sample_id '" + row.sample_id + "' in label table");
            }
            check_range(row, row.age_score, 0.0, 1.0, "age_score");
            check_range(row, row.quality_score, 0.0, 1.0, "quality_score");
            check_range(row, row.divergence_score, -1.0, 1.0, "divergence_score");
        }
    }

    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    const std::vector<LabelRow>& rows() const noexcept { return rows_; }
    const LabelRow& operator[](std::size_t i) const { return rows_[i]; }

    const LabelRow* find(const std::string& sample_id) const {
        auto it = index_.find(sample_id);
        return it == index_.end() ? nullptr : &rows_[it->second];
    }

    const LabelRow& at(const std::string& sample_id) const {
        const LabelRow* row = find(sample_id);
        if (row == nullptr) fail(ErrorKind::Data, "no label row for sample '" + sample_id + "'");
        return *row;
    }

    bool operator==(const LabelTable& other) const { return rows_ == other.rows_; }

private:
    static void check_range(const LabelRow& row, const std::optional<double>& value, double low, double high,
                            const char* field) {
        if (!value) return;
        if (!(*value >= low && *value <= high)) {
            fail(ErrorKind::Data, std::string(field) + " of sample '" + row.sample_id + "' is " +
                                      std::to_string(*value) + ", outside [" + std::to_string(low) + ", " +
                                      std::to_string(high) + "]");
        }
    }

    std::vector<LabelRow> rows_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Attribute value of a row as an ordinal (race or gender), if present.
inline std::optional<std::size_t> categorical(const LabelRow& row, Attribute attribute) {
    switch (attribute) {
        case Attribute::Race:
            if (row.race) return static_cast<std::size_t>(*row.race);
            return std::nullopt;
        case Attribute::Gender:
            if (row.gender) return static_cast<std::size_t>(*row.gender);
            return std::nullopt;
        case Attribute::Age:
            break;
    }
    fail(ErrorKind::Parameter, "age is continuous, not categorical");
}

inline std::string categorical_name(Attribute attribute, std::size_t value) {
    if (attribute == Attribute::Race) return std::string(to_string(static_cast<Race>(value)));
    return std::string(to_string(static_cast<Gender>(value)));
}

inline void set_categorical(LabelRow& row, Attribute attribute, std::size_t value) {
    if (attribute == Attribute::Race) {
        row.race = static_cast<Race>(value);
    } else if (attribute == Attribute::Gender) {
        row.gender = static_cast<Gender>(value);
    } else {
        fail(ErrorKind::Parameter, "age is continuous, not categorical");
    }
}

inline std::size_t category_count(Attribute attribute) {
    return attribute == Attribute::Race ? kAllRaces.size() : kAllGenders.size();
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_real(double value) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    (void)ec;
    return std::string(buf.data(), ptr);
}

inline std::optional<double> parse_real(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

}  // namespace varicurate
