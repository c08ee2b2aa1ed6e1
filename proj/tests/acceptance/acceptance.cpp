// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support/oracles.hpp"
#include "support/planted.hpp"
#include "varicurate/cli.hpp"
#include "varicurate/varicurate.hpp"

using namespace varicurate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

fs::path g_tmp;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------- 1

Outcome vendi_exactness() {
    std::mt19937_64 gen(1001);
    double worst_identical = 0, worst_orthonormal = 0;
    for (int n = 2; n <= 16; ++n) {
        const int d = n + 3;
        Eigen::RowVectorXd v = Eigen::RowVectorXd::NullaryExpr(d, [&] { return std::normal_distribution<double>()(gen); });
        Matrix same = v.replicate(n, 1);
        worst_identical = std::max(worst_identical, std::abs(vendi_score(same).score - 1.0));
        Matrix g = Matrix::NullaryExpr(d, d, [&] { return std::normal_distribution<double>()(gen); });
        Eigen::HouseholderQR<Matrix> qr(g);
        Matrix q = qr.householderQ();
        Matrix rows = q.leftCols(n).transpose();
        worst_orthonormal = std::max(worst_orthonormal, std::abs(vendi_score(rows).score - n));
    }
    Matrix pair(2, 2);
    pair << 1, 0, 0.5, std::sqrt(0.75);
    const double closed = std::exp(-(0.75 * std::log(0.75) + 0.25 * std::log(0.25)));
    const double got = vendi_score(pair).score;
    Outcome o;
    o.pass = worst_identical <= 1e-8 && worst_orthonormal <= 1e-8 && std::abs(got - closed) <= 1e-5 &&
             std::abs(got - 1.75477) <= 1e-5;
    o.detail = "max |VS-1| " + fmt("%.2e", worst_identical) + ", max |VS-n| " + fmt("%.2e", worst_orthonormal) +
               ", cos0.5 pair " + fmt("%.6f", got) + " (closed form " + fmt("%.6f", closed) + ")";
    return o;
}

// ---------------------------------------------------------------- 2

/// Fourth-order central difference of -VS in long double.
Matrix fd5(const Matrix& rows, double h = 1e-4) {
    Matrix g(rows.rows(), rows.cols());
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
        auto at = [&](double delta) {
            Matrix m = rows;
            m.data()[i] += delta;
            return oracle::vendi(m);
        };
        const long double d = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * static_cast<long double>(h));
        g.data()[i] = static_cast<double>(-d);
    }
    return g;
}

Outcome gradient_fidelity() {
    std::mt19937_64 gen(1002);
    std::uniform_int_distribution<int> n_dist(2, 8), d_dist(2, 16);
    std::normal_distribution<double> normal;
    int batches = 0, skipped = 0;
    double worst = 0;
    while (batches < 100) {
        const int n = n_dist(gen), d = d_dist(gen);
        Matrix m = Matrix::NullaryExpr(n, d, [&] { return normal(gen); });
        auto r = vendi_loss_grad(m);
        if (r.degenerate_spectrum) {
            ++skipped;
            continue;
        }
        Matrix fd = fd5(m);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double a = r.gradient->data()[i], b = fd.data()[i];
            worst = std::max(worst, std::abs(a - b) / std::abs(b));
        }
        ++batches;
    }
    return {worst < 1e-5, "100 batches (" + std::to_string(skipped) + " degenerate draws skipped), max elementwise relative error " +
                              fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 3

Outcome guidance_trend() {
    const auto schedule = NoiseSchedule::linear(50);
    const auto model = MixtureModel::well_separated(4, 16, 3.0, 0.5);
    const auto embed = EmbedMap::sphere();
    int decreasing = 0;
    bool bitwise = true;
    double mean[3] = {0, 0, 0};
    const double scales[3] = {0.0, 1.0, 10.0};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        double cos[3];
        for (int s = 0; s < 3; ++s) {
            GuidanceConfig cfg;
            cfg.scale = scales[s];
            cfg.batch_size = 64;
            cfg.sampler = SamplerKind::Ancestral;
            cfg.seed = seed;
            auto traj = guided_sample(schedule, model, embed, cfg);
            cos[s] = mean_pairwise_cosine(traj.final_embeddings);
            mean[s] += cos[s] / 20;
            if (s == 0) {
                auto plain = sample_unguided(schedule, model, embed, SamplerKind::Ancestral, 64, seed);
                for (std::size_t t = 0; t < traj.latents.size(); ++t) {
                    const auto& a = traj.latents[t];
                    const auto& b = plain.latents[t];
                    bitwise = bitwise && a.size() == b.size() &&
                              std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
                }
                bitwise = bitwise && std::memcmp(traj.final_embeddings.data(), plain.final_embeddings.data(),
                                                 sizeof(double) * static_cast<std::size_t>(plain.final_embeddings.size())) == 0;
            }
        }
        decreasing += cos[0] > cos[1] && cos[1] > cos[2];
    }
    return {decreasing >= 18 && bitwise,
            std::to_string(decreasing) + "/20 seeds strictly decreasing; mean cosine " + fmt("%.4f", mean[0]) + " -> " +
                fmt("%.4f", mean[1]) + " -> " + fmt("%.4f", mean[2]) + "; s=0 bitwise equal to unguided: " +
                (bitwise ? "yes" : "no")};
}

// ---------------------------------------------------------------- 4

Outcome frc_recovery() {
    std::mt19937_64 gen(1004);
    std::size_t corrupted = 0, restored = 0;
    for (int trial = 0; trial < 50; ++trial) {
        auto clusters = planted::make(gen, 4, 20, 16);
        std::vector<LabelRow> rows;
        auto bad = planted::race_labels(gen, clusters, 8, rows);
        FrcConfig cfg;
        cfg.k = 10;
        cfg.attributes = {Attribute::Race};
        auto refined = refine(clusters.set, LabelTable(rows), cfg).labels;
        for (std::size_t i : bad) {
            ++corrupted;
            restored += refined.at(rows[i].sample_id).race == kAllRaces[clusters.truth[i]];
        }
    }
    const double rate = static_cast<double>(restored) / static_cast<double>(corrupted);
    return {rate >= 0.95, std::to_string(restored) + "/" + std::to_string(corrupted) + " corrupted labels restored (" +
                              fmt("%.1f", 100 * rate) + "%)"};
}

// ---------------------------------------------------------------- 5

Outcome ds_semantics() {
    std::mt19937_64 gen(1005);
    std::normal_distribution<double> normal;
    bool singletons_exact = true;
    for (int trial = 0; trial < 200; ++trial) {
        auto set = oracle::random_unit_set(gen, 5, 2 + trial % 64);
        for (const auto& row : divergence_scores(set, mean_by_identity(set)).rows()) {
            singletons_exact = singletons_exact && *row.divergence_score == 1.0;
        }
    }
    std::size_t tp = 0, fp = 0, fn = 0, planted_total = 0;
    const std::size_t dim = 32;
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<float> data;
        std::vector<std::string> ids, identities;
        std::set<std::string> planted_ids;
        for (std::size_t p = 0; p < 10; ++p) {
            const std::size_t outliers = gen() % 3;
            for (std::size_t k = 0; k < 12; ++k) {
                std::vector<double> v(dim);
                for (auto& x : v) x = 0.05 * normal(gen);
                const bool outlier = k < outliers;
                v[outlier ? (p + 1 + gen() % 5) % dim : p] += 1.0;
                double sq = 0;
                for (double x : v) sq += x * x;
                for (double x : v) data.push_back(static_cast<float>(x / std::sqrt(sq)));
                ids.push_back(oracle::id("t" + std::to_string(trial) + "_", ids.size()));
                identities.push_back(oracle::id("P", p));
                if (outlier) planted_ids.insert(ids.back());
            }
        }
        EmbeddingSet set(dim, data, ids, identities);
        // the construction must place outliers below 0.3 and inliers above it
        std::map<std::string, std::vector<long double>> sums;
        for (std::size_t i = 0; i < set.size(); ++i) {
            auto& s = sums[set.identity_of(i)];
            s.resize(dim, 0);
            for (std::size_t j = 0; j < dim; ++j) s[j] += set.row(i)[j];
        }
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto& s = sums[set.identity_of(i)];
            long double dot = 0, ns = 0;
            for (std::size_t j = 0; j < dim; ++j) {
                dot += s[j] * set.row(i)[j];
                ns += s[j] * s[j];
            }
            const bool below = dot / std::sqrt(ns) < 0.3L;
            if (below != (planted_ids.count(ids[i]) != 0)) return {false, "construction error at sample " + ids[i]};
        }
        auto flagged = ds_noise_detect(divergence_scores(set, mean_by_identity(set))).removed;
        planted_total += planted_ids.size();
        for (const auto& id : flagged) (planted_ids.count(id) ? tp : fp) += 1;
        fn += planted_ids.size() - std::count_if(flagged.begin(), flagged.end(), [&](auto& id) { return planted_ids.count(id) != 0; });
    }
    const double precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = planted_total == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return {singletons_exact && precision == 1.0 && recall == 1.0,
            std::string("singleton DS == 1 exactly: ") + (singletons_exact ? "yes" : "no") + "; " + std::to_string(planted_total) +
                " planted outliers, precision " + fmt("%.3f", precision) + ", recall " + fmt("%.3f", recall)};
}

// ---------------------------------------------------------------- 6

/// A 4-d float row whose computed cosine with e0 is exactly `target`.
std::optional<std::vector<float>> exact_cosine_row(double target) {
    const float x = static_cast<float>(target);
    const double need = static_cast<double>(x) / target;  // required norm
    const double rest = need * need - static_cast<double>(x) * x;
    const float y = std::nextafter(static_cast<float>(std::sqrt(rest)), 0.0f);
    const double rest2 = rest - static_cast<double>(y) * y;
    const float z = std::nextafter(static_cast<float>(std::sqrt(std::max(rest2, 0.0))), 0.0f);
    const double rest3 = rest2 - static_cast<double>(z) * z;
    const float w0 = static_cast<float>(std::sqrt(std::max(rest3, 0.0)));
    const std::vector<float> base{1, 0, 0, 0};
    float up = w0, down = w0;
    for (int step = 0; step < 100000; ++step) {
        for (float w : {up, down}) {
            std::vector<float> row{x, y, z, w};
            if (cosine(std::span<const float>(row), std::span<const float>(base)) == target) return row;
        }
        up = std::nextafter(up, 1.0f);
        down = std::nextafter(down, 0.0f);
    }
    return std::nullopt;
}

Outcome threshold_fidelity() {
    std::mt19937_64 gen(1006);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    std::vector<LabelRow> rows(10000);
    std::vector<std::string> oracle_kept;
    std::size_t at_boundary = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].sample_id = oracle::id("q", i);
        double q = u(gen);
        if (i % 50 == 0) q = 0.7;
        if (i % 50 == 1) q = std::nextafter(0.7, 0.0);
        rows[i].quality_score = q;
        if (q >= 0.7) oracle_kept.push_back(rows[i].sample_id);
        at_boundary += q == 0.7;
    }
    auto s1 = stage1_quality_filter(LabelTable(rows), 0.7);
    bool stage1_ok = s1.kept == oracle_kept && s1.kept.size() + s1.removed.size() == rows.size();

    // stage 2: 10,000 generated rows over 500 identities, plus exact-boundary rows
    const std::size_t d = 8;
    auto bases = oracle::random_unit_set(gen, 500, d, "B");
    std::vector<std::string> base_identities;
    for (std::size_t p = 0; p < 500; ++p) base_identities.push_back(oracle::id("I", p));
    bases = EmbeddingSet(d, bases.data(), bases.sample_ids(), base_identities);
    std::vector<float> data;
    std::vector<std::string> ids, identities, oracle_kept2;
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < 10000; ++i) {
        const std::size_t p = gen() % 500;
        const double mix = u(gen) * 1.2;
        std::vector<double> v(d);
        double sq = 0;
        for (std::size_t j = 0; j < d; ++j) {
            v[j] = (1.0 - mix) * bases.row(p)[j] + mix * normal(gen) / std::sqrt(static_cast<double>(d));
            sq += v[j] * v[j];
        }
        std::vector<float> row(d);
        for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(v[j] / std::sqrt(sq));
        data.insert(data.end(), row.begin(), row.end());
        ids.push_back(oracle::id("g", i));
        identities.push_back(base_identities[p]);
        if (oracle::cosine(row.data(), bases.row(p).data(), d) >= 0.3L) oracle_kept2.push_back(ids.back());
    }
    auto s2 = stage2_identity_filter(bases, EmbeddingSet(d, data, ids, identities), 0.3);
    bool stage2_ok = s2.kept == oracle_kept2 && s2.kept.size() + s2.removed.size() == 10000;

    // boundary: a row at cosine exactly 0.3 is kept
    bool boundary_ok = false;
    if (auto row = exact_cosine_row(0.3)) {
        EmbeddingSet base(4, {1, 0, 0, 0}, {"b"}, {"X"});
        EmbeddingSet gen_row(4, *row, {"edge"}, {"X"});
        boundary_ok = stage2_identity_filter(base, gen_row, 0.3).kept == std::vector<std::string>{"edge"};
    }
    return {stage1_ok && stage2_ok && boundary_ok,
            "stage-1 " + std::to_string(s1.kept.size()) + " kept (" + std::to_string(at_boundary) + " at exactly 0.7) " +
                (stage1_ok ? "match" : "MISMATCH") + "; stage-2 " + std::to_string(s2.kept.size()) + " kept " +
                (stage2_ok ? "match" : "MISMATCH") + "; cosine exactly 0.3 kept: " + (boundary_ok ? "yes" : "no")};
}

// ---------------------------------------------------------------- 7

Outcome plan_fidelity() {
    auto plan = make_plan(1250, 50, DivergenceConfig{}, 2024);
    std::vector<double> age(plan.age_draws.begin(), plan.age_draws.begin() + 10000);
    std::vector<double> ds(plan.ds_draws.begin(), plan.ds_draws.begin() + 10000);
    const double ks_age = oracle::ks_uniform(age, 0.0, 1.0);
    const double ks_ds = oracle::ks_uniform(ds, 0.5, 0.8);
    bool cells_ok = plan.cells.size() == 8;
    for (const auto& c : plan.cells) cells_ok = cells_ok && c.id_count == 1250;
    const bool ok = plan.identity_count() == 10000 && plan.image_count() == 500000 && cells_ok &&
                    ks_age < oracle::kKsCritical01 && ks_ds < oracle::kKsCritical01;
    return {ok, std::to_string(plan.identity_count()) + " ids, " + std::to_string(plan.image_count()) +
                    " images; KS sqrt(n)D age " + fmt("%.3f", ks_age) + ", DS " + fmt("%.3f", ks_ds) + " (critical " +
                    fmt("%.4f", oracle::kKsCritical01) + ")"};
}

// ---------------------------------------------------------------- 8

bool femb_round_trips(std::string* detail) {
    std::mt19937_64 gen(1008);
    const auto dir = g_tmp / "femb";
    fs::create_directories(dir);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = gen() % 24, d = 1 + gen() % 40;
        std::vector<float> data(n * d);
        for (auto& x : data) {
            std::uint32_t bits;
            do {
                bits = static_cast<std::uint32_t>(gen());
                std::memcpy(&x, &bits, 4);
            } while (!std::isfinite(x));
        }
        std::vector<std::string> ids, identities;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("s" + std::to_string(trial) + "_" + std::to_string(i) + std::string(gen() % 5, 'x'));
            identities.push_back("id" + std::to_string(gen() % 4));
        }
        EmbeddingSet set = trial % 2 ? EmbeddingSet(d, data, ids, identities) : EmbeddingSet(d, data, ids);
        const auto path = dir / ("set" + std::to_string(trial % 7) + ".femb");
        save_embeddings(set, path);
        auto back = load_embeddings(path);
        const std::string a = encode_embeddings(set), b = read_file(path);
        if (a != b || back.dim() != d || back.sample_ids() != ids || back.identity_ids() != set.identity_ids() ||
            std::memcmp(back.data().data(), data.data(), data.size() * 4) != 0) {
            *detail = "round trip failed on set " + std::to_string(trial);
            return false;
        }
    }
    *detail = "1000 .femb round trips bit-exact";
    return true;
}

std::vector<float> unit(std::vector<double> v) {
    double sq = 0;
    for (double x : v) sq += x * x;
    std::vector<float> out;
    for (double x : v) out.push_back(static_cast<float>(x / std::sqrt(sq)));
    return out;
}

struct Ids {
    std::vector<std::string> kept, removed;
};

Ids read_filter(const fs::path& p) {
    auto j = nlohmann::json::parse(read_file(p));
    return {j["kept"].get<std::vector<std::string>>(), j["removed"].get<std::vector<std::string>>()};
}

bool pipeline_matches(std::string* detail) {
    const auto dir = g_tmp / "pipeline";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::mt19937_64 gen(1108);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> u(0.0, 1.0);

    const std::size_t identities = 20, images = 10, face_dim = 24, clip_dim = 8;
    const auto race_names = canonical_labels(Attribute::Race);
    const auto gender_names = canonical_labels(Attribute::Gender);

    // identities and their intended demographics
    std::vector<std::vector<double>> centers;
    std::vector<float> base_data;
    std::vector<std::string> base_ids, identity_ids;
    std::vector<Race> race_of;
    std::vector<Gender> gender_of;
    for (std::size_t p = 0; p < identities; ++p) {
        race_of.push_back(kAllRaces[p % 4]);
        gender_of.push_back(kAllGenders[(p / 4) % 2]);
        std::vector<double> c(face_dim);
        for (auto& x : c) x = 0.5 * normal(gen) / std::sqrt(static_cast<double>(face_dim));
        c[p % 4] += 1.0;
        c[4 + (p / 4) % 2] += 0.5;
        auto cu = unit(c);
        centers.emplace_back(cu.begin(), cu.end());
        base_data.insert(base_data.end(), cu.begin(), cu.end());
        identity_ids.push_back(oracle::id("ID", p));
        base_ids.push_back(oracle::id("base", p));
    }
    EmbeddingSet base(face_dim, base_data, base_ids, identity_ids);

    std::vector<float> face, img, flip;
    std::vector<std::string> ids, ident;
    std::vector<LabelRow> intended;
    std::string quality_csv = "sample_id,quality_score\n";
    std::vector<double> quality;
    for (std::size_t p = 0; p < identities; ++p) {
        for (std::size_t k = 0; k < images; ++k) {
            const std::size_t i = ids.size();
            ids.push_back(oracle::id("s", i));
            ident.push_back(identity_ids[p]);
            std::vector<double> v(face_dim);
            const bool outlier = (i * 7 + 3) % 23 == 0;
            for (std::size_t j = 0; j < face_dim; ++j) v[j] = outlier ? normal(gen) : centers[p][j] + 0.12 * normal(gen);
            auto fu = unit(v);
            face.insert(face.end(), fu.begin(), fu.end());

            std::size_t observed_race = p % 4;
            if (u(gen) < 0.08) observed_race = (observed_race + 1 + gen() % 3) % 4;
            const double age = u(gen);
            std::vector<double> c(clip_dim);
            for (auto& x : c) x = 0.15 * normal(gen);
            c[observed_race] += 1.0;
            c[4 + (p / 4) % 2] += 1.0;
            c[6] += 1.0 - age;
            c[7] += age;
            auto cu = unit(c);
            img.insert(img.end(), cu.begin(), cu.end());
            for (auto& x : c) x += 0.05 * normal(gen);
            auto cf = unit(c);
            flip.insert(flip.end(), cf.begin(), cf.end());

            LabelRow row;
            row.sample_id = ids.back();
            row.race = race_of[p];
            row.gender = gender_of[p];
            row.source = LabelSource::External;
            intended.push_back(row);

            double q = std::round(u(gen) * 1000) / 1000;
            if (i % 17 == 0) q = 0.7;
            quality.push_back(q);
            quality_csv += ids.back() + "," + format_real(q) + "\n";
        }
    }
    const std::size_t n = ids.size();
    EmbeddingSet face_set(face_dim, face, ids, ident);
    save_embeddings(face_set, dir / "face.femb");
    save_embeddings(base, dir / "base.femb");
    save_embeddings(EmbeddingSet(clip_dim, img, ids), dir / "img.femb");
    save_embeddings(EmbeddingSet(clip_dim, flip, ids), dir / "flip.femb");
    save_labels(LabelTable(intended), dir / "intended.csv");
    atomic_write(dir / "quality.csv", quality_csv);
    auto axis_bank = [&](const std::vector<std::string>& labels, std::size_t offset, const char* file) {
        std::vector<float> data(labels.size() * clip_dim, 0.0f);
        for (std::size_t i = 0; i < labels.size(); ++i) data[i * clip_dim + offset + i] = 1.0f;
        save_embeddings(EmbeddingSet(clip_dim, data, labels), dir / file);
    };
    axis_bank(race_names, 0, "race.femb");
    axis_bank(gender_names, 4, "gender.femb");
    axis_bank(canonical_labels(Attribute::Age), 6, "age.femb");

    // the pipeline, through the command-line front end
    auto p = [&](const char* f) { return (dir / f).string(); };
    const std::vector<std::vector<std::string>> commands{
        {"label", "--images", p("img.femb"), "--flips", p("flip.femb"), "--prompt-bank", p("race.femb"), "--prompt-bank",
         p("gender.femb"), "--prompt-bank", p("age.femb"), "--quality", p("quality.csv"), "--out", p("clip.csv")},
        {"frc", "--embeddings", p("face.femb"), "--labels", p("clip.csv"), "--k", "9", "--out", p("refined.csv")},
        {"filter", "--stage", "1q", "--labels", p("refined.csv"), "--out", p("f1q.json")},
        {"filter", "--stage", "1d", "--embeddings", p("face.femb"), "--labels", p("intended.csv"), "--observed", p("clip.csv"),
         "--k", "9", "--out", p("f1d.json")},
        {"ds", "--embeddings", p("face.femb"), "--out", p("ds.csv")},
        {"filter", "--stage", "ds", "--labels", p("ds.csv"), "--out", p("fds.json")},
        {"filter", "--stage", "2id", "--base", p("base.femb"), "--embeddings", p("face.femb"), "--out", p("f2id.json")},
        {"audit", "--embeddings", p("face.femb"), "--labels", p("intended.csv"), "--ds", p("ds.csv"), "--out", p("audit.json")},
    };
    for (const auto& args : commands) {
        std::ostringstream out, err;
        auto r = cli::run(args, out, err);
        if (r.exit_code != 0) {
            *detail = "command '" + args.front() + "' failed: " + err.str();
            return false;
        }
    }

    // hand-traced oracle
    auto clip_argmax = [&](std::size_t i, std::size_t offset, std::size_t labels) {
        std::vector<long double> prob(labels, 0);
        for (const auto* rows : {&img, &flip}) {
            std::vector<long double> e(labels);
            long double total = 0;
            for (std::size_t c = 0; c < labels; ++c) {
                std::vector<float> axis(clip_dim, 0.0f);
                axis[offset + c] = 1.0f;
                e[c] = std::exp(oracle::cosine(rows->data() + i * clip_dim, axis.data(), clip_dim));
                total += e[c];
            }
            for (std::size_t c = 0; c < labels; ++c) prob[c] += e[c] / total / 2;
        }
        return static_cast<std::size_t>(std::max_element(prob.begin(), prob.end()) - prob.begin());
    };
    std::vector<std::size_t> clip_race(n), clip_gender(n);
    for (std::size_t i = 0; i < n; ++i) {
        clip_race[i] = clip_argmax(i, 0, 4);
        clip_gender[i] = clip_argmax(i, 4, 2);
    }
    // neighbors by exhaustive sort, ties to the lower index
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<long double, std::size_t>> sims;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sims.push_back({-oracle::cosine(&face[i * face_dim], &face[j * face_dim], face_dim), j});
        }
        std::sort(sims.begin(), sims.end());
        for (std::size_t t = 0; t < 9; ++t) nbrs[i].push_back(sims[t].second);
    }
    auto vote = [&](std::size_t i, const std::vector<std::size_t>& values, std::size_t categories) {
        std::vector<int> count(categories, 0);
        for (auto j : nbrs[i]) ++count[values[j]];
        const int top = *std::max_element(count.begin(), count.end());
        if (std::count(count.begin(), count.end(), top) > 1) return values[i];
        return static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
    };
    Ids want_1q, want_1d, want_ds, want_2id;
    for (std::size_t i = 0; i < n; ++i) {
        (quality[i] >= 0.7 ? want_1q.kept : want_1q.removed).push_back(ids[i]);
        const std::size_t pid = i / images;
        const bool consistent = vote(i, clip_race, 4) == pid % 4 && vote(i, clip_gender, 2) == (pid / 4) % 2;
        (consistent ? want_1d.kept : want_1d.removed).push_back(ids[i]);
        std::vector<long double> mean(face_dim, 0);
        for (std::size_t k = pid * images; k < (pid + 1) * images; ++k) {
            for (std::size_t j = 0; j < face_dim; ++j) mean[j] += face[k * face_dim + j];
        }
        long double dot = 0, nm = 0;
        for (std::size_t j = 0; j < face_dim; ++j) {
            dot += mean[j] * face[i * face_dim + j];
            nm += mean[j] * mean[j];
        }
        (dot / std::sqrt(nm) < 0.3L ? want_ds.removed : want_ds.kept).push_back(ids[i]);
        (oracle::cosine(&face[i * face_dim], &base_data[pid * face_dim], face_dim) >= 0.3L ? want_2id.kept : want_2id.removed)
            .push_back(ids[i]);
    }
    std::map<std::string, std::size_t> want_cells;
    for (Race r : kAllRaces) {
        for (Gender g : kAllGenders) want_cells[std::string(to_string(r)) + "_" + std::string(to_string(g))] = 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        ++want_cells[std::string(to_string(race_of[i / images])) + "_" + std::string(to_string(gender_of[i / images]))];
    }

    // compare
    std::vector<std::string> mismatches;
    auto check = [&](const char* name, const Ids& got, const Ids& want) {
        if (got.kept != want.kept || got.removed != want.removed) mismatches.push_back(name);
    };
    check("1q", read_filter(dir / "f1q.json"), want_1q);
    check("1d", read_filter(dir / "f1d.json"), want_1d);
    check("ds", read_filter(dir / "fds.json"), want_ds);
    check("2id", read_filter(dir / "f2id.json"), want_2id);
    auto clip = load_labels(dir / "clip.csv");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = clip.at(ids[i]);
        if (row.race != kAllRaces[clip_race[i]] || row.gender != kAllGenders[clip_gender[i]] || row.quality_score != quality[i]) {
            mismatches.push_back("label " + ids[i]);
            break;
        }
    }
    auto refined = load_labels(dir / "refined.csv");
    for (std::size_t i = 0; i < n; ++i) {
        if (refined.at(ids[i]).race != kAllRaces[vote(i, clip_race, 4)]) {
            mismatches.push_back("frc " + ids[i]);
            break;
        }
    }
    auto audit = nlohmann::json::parse(read_file(dir / "audit.json"));
    for (const auto& [cell, count] : want_cells) {
        if (audit["cell_counts"][cell] != count) mismatches.push_back("audit cell " + cell);
    }
    if (!mismatches.empty()) {
        *detail = "mismatch in:";
        for (const auto& m : mismatches) *detail += " " + m;
        return false;
    }
    *detail = "200-sample pipeline matches oracle (1q removed " + std::to_string(want_1q.removed.size()) + ", 1d removed " +
              std::to_string(want_1d.removed.size()) + ", ds removed " + std::to_string(want_ds.removed.size()) +
              ", 2id removed " + std::to_string(want_2id.removed.size()) + ")";
    return true;
}

Outcome format_and_pipeline() {
    std::string a, b;
    const bool femb = femb_round_trips(&a);
    const bool pipeline = pipeline_matches(&b);
    return {femb && pipeline, a + "; " + b};
}

}  // namespace

int main(int argc, char** argv) {
    g_tmp = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "varicurate_acceptance";
    fs::remove_all(g_tmp);
    fs::create_directories(g_tmp);

    struct Criterion {
        int number;
        const char* name;
        double limit_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "vendi exactness", 1, vendi_exactness},
        {2, "gradient fidelity", 30, gradient_fidelity},
        {3, "guidance trend", 300, guidance_trend},
        {4, "FRC recovery", 10, frc_recovery},
        {5, "DS semantics", 5, ds_semantics},
        {6, "threshold fidelity", 5, threshold_fidelity},
        {7, "plan fidelity", 10, plan_fidelity},
        {8, "format and pipeline integrity", 30, format_and_pipeline},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds < c.limit_seconds;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s %d %s (%.2f s, limit %.0f s%s): %s\n", pass ? "PASS" : "FAIL", c.number, c.name, seconds, c.limit_seconds,
                    in_time ? "" : ", TOO SLOW", o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
