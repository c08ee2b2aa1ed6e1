#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"
#include "varicurate/labels.hpp"

namespace varicurate {

// .femb layout (all integers and reals little-endian):
//   0..3   magic "FEMB"
//   4..7   u32 version = 1
//   8..15  u64 N
//   16..23 u64 d
//   N*d    f32 payload, row-major
//   N      sample ids, u16 byte length + UTF-8 bytes
//   N      identity ids, u16 byte length + UTF-8 bytes (length 0 = absent)
inline constexpr std::array<char, 4> kFembMagic{'F', 'E', 'M', 'B'};
inline constexpr std::uint32_t kFembVersion = 1;
inline constexpr std::size_t kFembHeaderSize = 24;

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}
inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

/// Bounds-checked little-endian cursor over a byte buffer.
class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t uint(std::size_t width, const char* what) {
        need(width, what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += width;
        return v;
    }

    std::string_view take(std::size_t n, const char* what) {
        need(n, what);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            fail(ErrorKind::Format, std::string("truncated file while reading ") + what);
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorKind::Io, "read failed for '" + path.string() + "'");
    return bytes;
}

/// Writes bytes to a sibling temp file, then renames it over the target, so
/// readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::Io, "cannot rename temp file onto '" + path.string() + "'");
    }
}

/// Serializes to the .femb byte layout. Deterministic for identical input.
inline std::string encode_embeddings(const EmbeddingSet& set) {
    const std::size_t n = set.size();
    std::string out;
    out.reserve(kFembHeaderSize + n * set.dim() * 4 + n * 16);
    out.append(kFembMagic.data(), kFembMagic.size());
    detail::put_u32(out, kFembVersion);
    detail::put_u64(out, n);
    detail::put_u64(out, set.dim());
    for (float x : set.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(x));
    auto put_string = [&](const std::string& s, const char* what) {
        if (s.size() > 0xffff) fail(ErrorKind::Format, std::string(what) + " longer than 65535 bytes: '" + s.substr(0, 32) + "...'");
        detail::put_u16(out, static_cast<std::uint16_t>(s.size()));
        out.append(s);
    };
    for (const auto& id : set.sample_ids()) put_string(id, "sample_id");
    for (std::size_t i = 0; i < n; ++i) {
        if (set.has_identities()) {
            put_string(set.identity_ids()[i], "identity_id");
        } else {
            detail::put_u16(out, 0);
        }
    }
    return out;
}

inline EmbeddingSet decode_embeddings(std::string_view bytes) {
    detail::ByteReader in(bytes);
    auto magic = in.take(4, "magic");
    if (std::memcmp(magic.data(), kFembMagic.data(), 4) != 0) fail(ErrorKind::Format, "bad magic, not a .femb file");
    const auto version = in.uint(4, "version");
    if (version != kFembVersion) fail(ErrorKind::Format, "unsupported .femb version " + std::to_string(version));
    const auto n = in.uint(8, "row count");
    const auto d = in.uint(8, "dimension");
    if (d == 0) fail(ErrorKind::Format, "dimension must be positive");
    // Every row needs at least 4*d payload bytes plus two u16 lengths.
    if (n > 0 && (d > in.remaining() / 4 || n > in.remaining() / (4 * d + 4))) {
        fail(ErrorKind::Format, "header declares " + std::to_string(n) + " rows of dimension " + std::to_string(d) +
                                    " but the file is too short");
    }
    std::vector<float> data(static_cast<std::size_t>(n * d));
    for (auto& x : data) x = std::bit_cast<float>(static_cast<std::uint32_t>(in.uint(4, "payload")));
    std::vector<std::string> sample_ids(n);
    for (auto& id : sample_ids) {
        const auto len = in.uint(2, "sample_id length");
        id = std::string(in.take(len, "sample_id"));
    }
    std::vector<std::string> identity_ids(n);
    for (auto& id : identity_ids) {
        const auto len = in.uint(2, "identity_id length");
        id = std::string(in.take(len, "identity_id"));
    }
    if (in.remaining() != 0) fail(ErrorKind::Format, std::to_string(in.remaining()) + " trailing bytes after last record");
    return EmbeddingSet(static_cast<std::size_t>(d), std::move(data), std::move(sample_ids), std::move(identity_ids));
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path) { return decode_embeddings(read_file(path)); }

inline void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    atomic_write(path, encode_embeddings(set));
}

// ---------------------------------------------------------------------------
// Label table CSV

inline constexpr std::string_view kLabelCsvHeader =
    "sample_id,race,gender,age_score,quality_score,divergence_score,source";

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return lines;
}

inline std::string encode_labels(const LabelTable& table) {
    std::string out(kLabelCsvHeader);
    out += '\n';
    auto real = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
    for (const auto& row : table.rows()) {
        if (row.sample_id.find_first_of(",\n\r") != std::string::npos) {
            fail(ErrorKind::Format, "sample_id '" + row.sample_id + "' cannot be written to CSV");
        }
        out += row.sample_id;
        out += ',';
        if (row.race) out += to_string(*row.race);
        out += ',';
        if (row.gender) out += to_string(*row.gender);
        out += ',' + real(row.age_score) + ',' + real(row.quality_score) + ',' + real(row.divergence_score) + ',';
        out += to_string(row.source);
        out += '\n';
    }
    return out;
}

inline LabelTable decode_labels(std::string_view text) {
    auto lines = lines_of(text);
    if (lines.empty() || lines.front() != kLabelCsvHeader) {
        fail(ErrorKind::Format, "label CSV must start with header '" + std::string(kLabelCsvHeader) + "'");
    }
    std::vector<LabelRow> rows;
    rows.reserve(lines.size() - 1);
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto where = "label CSV line " + std::to_string(ln + 1) + ": ";
        auto fields = split(lines[ln], ',');
        if (fields.size() != 7) fail(ErrorKind::Format, where + "expected 7 fields, got " + std::to_string(fields.size()));
        LabelRow row;
        row.sample_id = std::string(fields[0]);
        if (row.sample_id.empty()) fail(ErrorKind::Format, where + "empty sample_id");
        if (!fields[1].empty()) {
            row.race = parse_race(fields[1]);
            if (!row.race) fail(ErrorKind::Format, where + "unknown race '" + std::string(fields[1]) + "'");
        }
        if (!fields[2].empty()) {
            row.gender = parse_gender(fields[2]);
            if (!row.gender) fail(ErrorKind::Format, where + "unknown gender '" + std::string(fields[2]) + "'");
        }
        auto real = [&](std::string_view f, const char* name) -> std::optional<double> {
            if (f.empty()) return std::nullopt;
            auto v = parse_real(f);
            if (!v) fail(ErrorKind::Format, where + "unparseable " + name + " '" + std::string(f) + "'");
            return v;
        };
        row.age_score = real(fields[3], "age_score");
        row.quality_score = real(fields[4], "quality_score");
        row.divergence_score = real(fields[5], "divergence_score");
        auto source = parse_source(fields[6]);
        if (!source) fail(ErrorKind::Format, where + "unknown source '" + std::string(fields[6]) + "'");
        row.source = *source;
        rows.push_back(std::move(row));
    }
    return LabelTable(std::move(rows));
}

inline LabelTable load_labels(const std::filesystem::path& path) { return decode_labels(read_file(path)); }

inline void save_labels(const LabelTable& table, const std::filesystem::path& path) {
    atomic_write(path, encode_labels(table));
}

}  // namespace varicurate
