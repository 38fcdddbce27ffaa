#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tnfcm/common.hpp"
#include "tnfcm/corpus.hpp"
#include "tnfcm/linalg.hpp"
#include "tnfcm/random.hpp"

namespace tnfcm {

inline constexpr const char kSynthConfigFile[] = "synth_config.json";

struct SyntheticConfig {
    std::size_t num_categories = 4;
    std::size_t items_per_category = 200;
    std::size_t latent_dim = 8;
    std::size_t feature_dim = 32;
    double noise_sigma = 0.05;
    std::size_t pairs_per_relation = 1600;
    std::uint64_t seed = 1;
    std::vector<std::string> modalities{"visual", "textual"};
    // Standard deviation of style roots inside / outside the span of the
    // category offsets.
    double style_spread_in_span = 1.5;
    double style_spread_off_span = 0.3;
    // Standard deviation of each coordinate of the category offsets.
    double category_spread = 0.5;
    // Length factor applied to the translation of relation 0->2, so the two
    // relations leaving category 0 differ in length as well as direction.
    double head_translation_stretch = 1.5;

    void validate() const {
        if (num_categories < 3) throw ConfigError("synthetic corpus needs at least 3 categories");
        if (items_per_category == 0) throw ConfigError("items_per_category must be positive");
        if (latent_dim == 0) throw ConfigError("latent_dim must be positive");
        if (latent_dim > feature_dim) throw ConfigError("latent_dim must not exceed feature_dim");
        if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
        if (pairs_per_relation == 0) throw ConfigError("pairs_per_relation must be positive");
        if (modalities.empty()) throw ConfigError("at least one modality is required");
        if (!(style_spread_in_span >= 0.0 && style_spread_off_span >= 0.0))
            throw ConfigError("style spreads must be non-negative");
        if (!(category_spread > 0.0)) throw ConfigError("category_spread must be positive");
        if (!(head_translation_stretch > 0.0)) throw ConfigError("head_translation_stretch must be positive");
    }
};

inline nlohmann::ordered_json synthetic_config_json(const SyntheticConfig& c) {
    nlohmann::ordered_json j;
    j["num_categories"] = c.num_categories;
    j["items_per_category"] = c.items_per_category;
    j["latent_dim"] = c.latent_dim;
    j["feature_dim"] = c.feature_dim;
    j["noise_sigma"] = c.noise_sigma;
    j["pairs_per_relation"] = c.pairs_per_relation;
    j["seed"] = c.seed;
    j["modalities"] = c.modalities;
    j["style_spread_in_span"] = c.style_spread_in_span;
    j["style_spread_off_span"] = c.style_spread_off_span;
    j["category_spread"] = c.category_spread;
    j["head_translation_stretch"] = c.head_translation_stretch;
    return j;
}

/// Directed relation of the planted graph with its ground-truth translation.
struct PlantedRelation {
    std::size_t head_category = 0;
    std::size_t tail_category = 0;
    std::vector<double> translation;
};

struct SyntheticCorpus {
    SyntheticConfig config;
    std::vector<std::string> category_names;
    std::vector<Item> items;
    std::map<std::string, FeatureTable> tables;
    std::vector<PairRecord> pairs;
    std::vector<PlantedRelation> relations;
    Matrix latent;  // one row per item
    std::vector<std::size_t> item_category;
};

/// Relation graph on categories 0..n-1: category 0 heads two relations
/// (0->1, 0->2); every later category c is the tail of (c-2 -> c) and
/// (c-1 -> c).
inline std::vector<std::pair<std::size_t, std::size_t>> planted_relation_graph(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> g{{0, 1}, {0, 2}};
    for (std::size_t c = 3; c < n; ++c) {
        g.emplace_back(c - 2, c);
        g.emplace_back(c - 1, c);
    }
    return g;
}

/// Planted-translation corpus.
///
/// Items come in "styles": every style has a latent root and k items in
/// every category (k = ceil(pairs_per_relation / items_per_category)).
/// An item's latent position is root + offset[category] + noise, so each
/// relation (a -> b) is the translation offset[b] - offset[a], and a
/// positive pair (x, y) satisfies g(y) = g(x) + rho + eps. Positive
/// pairs are drawn without replacement among same-style items of the two
/// categories. Each modality's raw features are a fixed random linear
/// lift of the latent positions.
///
/// The two translations leaving category 0 are made non-parallel and of
/// different lengths, so one head item is compatible with tails that sit
/// in different directions and at different distances.
/// Style roots vary mostly inside the span of the category offsets:
/// an embedding that maps every compatible pair onto one point must
/// flatten those directions and loses most of what distinguishes styles.
inline SyntheticCorpus generate_synthetic_data(const SyntheticConfig& cfg) {
    cfg.validate();
    SyntheticCorpus out;
    out.config = cfg;
    const std::size_t n_cat = cfg.num_categories;
    const std::size_t latent = cfg.latent_dim;
    const std::size_t per_style =
        (cfg.pairs_per_relation + cfg.items_per_category - 1) / cfg.items_per_category;
    const std::size_t n_styles = (cfg.items_per_category + per_style - 1) / per_style;

    const std::size_t width = std::to_string(n_cat - 1).size();
    for (std::size_t c = 0; c < n_cat; ++c) {
        std::string idx = std::to_string(c);
        out.category_names.push_back("cat" + std::string(width - idx.size(), '0') + idx);
    }

    // Category offsets; the two translations out of category 0 must not be parallel.
    Matrix offsets(n_cat, latent);
    {
        Rng rng = make_rng(cfg.seed, "synthetic_offsets");
        for (int attempt = 0;; ++attempt) {
            for (double& v : offsets.flat()) v = cfg.category_spread * standard_normal(rng);
            std::vector<double> t1(latent), t2(latent);
            for (std::size_t i = 0; i < latent; ++i) {
                t1[i] = offsets(1, i) - offsets(0, i);
                t2[i] = offsets(2, i) - offsets(0, i);
            }
            const double cosine = dot(t1, t2) / (norm(t1) * norm(t2));
            if (latent == 1 || std::abs(cosine) < 0.9 || attempt > 1000) break;
        }
        for (std::size_t i = 0; i < latent; ++i)
            offsets(2, i) = offsets(0, i) + cfg.head_translation_stretch * (offsets(2, i) - offsets(0, i));
    }

    // Orthonormal basis whose leading vectors span the offset differences.
    std::vector<std::vector<double>> basis;
    {
        auto try_add = [&](std::vector<double> v) {
            for (const auto& b : basis) axpy(-dot(v, b), b, v);
            const double n = norm(v);
            if (n > 1e-8 && basis.size() < latent) {
                for (double& x : v) x /= n;
                basis.push_back(std::move(v));
            }
        };
        for (std::size_t c = 1; c < n_cat; ++c) {
            std::vector<double> d(latent);
            for (std::size_t i = 0; i < latent; ++i) d[i] = offsets(c, i) - offsets(0, i);
            try_add(std::move(d));
        }
        for (std::size_t i = 0; i < latent && basis.size() < latent; ++i) {
            std::vector<double> e(latent, 0.0);
            e[i] = 1.0;
            try_add(std::move(e));
        }
    }
    const std::size_t span_dim = std::min(n_cat - 1, latent);

    Matrix roots(n_styles, latent);
    {
        Rng rng = make_rng(cfg.seed, "synthetic_styles");
        for (std::size_t s = 0; s < n_styles; ++s) {
            auto row = roots.row(s);
            for (std::size_t b = 0; b < basis.size(); ++b) {
                const double scale = b < span_dim ? cfg.style_spread_in_span : cfg.style_spread_off_span;
                axpy(scale * standard_normal(rng), basis[b], row);
            }
        }
    }

    // Items: category-major, style = index / per_style.
    const double item_noise = cfg.noise_sigma / std::sqrt(2.0 * static_cast<double>(latent));
    out.latent = Matrix(n_cat * cfg.items_per_category, latent);
    std::vector<std::vector<std::vector<std::size_t>>> by_style(n_cat, std::vector<std::vector<std::size_t>>(n_styles));
    {
        Rng rng = make_rng(cfg.seed, "synthetic_noise");
        for (std::size_t c = 0; c < n_cat; ++c) {
            for (std::size_t j = 0; j < cfg.items_per_category; ++j) {
                const std::size_t item = c * cfg.items_per_category + j;
                const std::size_t style = j / per_style;
                auto g = out.latent.row(item);
                for (std::size_t i = 0; i < latent; ++i) {
                    const double eps = cfg.noise_sigma > 0.0 ? item_noise * standard_normal(rng) : 0.0;
                    g[i] = roots(style, i) + offsets(c, i) + eps;
                }
                std::string idx = std::to_string(j);
                Item it;
                it.item_id = out.category_names[c] + "_" + std::string(idx.size() < 4 ? 4 - idx.size() : 0, '0') + idx;
                it.category_id = out.category_names[c];
                for (const auto& m : cfg.modalities) it.feature_row[m] = item;
                out.items.push_back(std::move(it));
                out.item_category.push_back(c);
                by_style[c][style].push_back(item);
            }
        }
    }

    for (std::size_t m = 0; m < cfg.modalities.size(); ++m) {
        Rng rng = make_rng(cfg.seed, "synthetic_lift", {m});
        Matrix lift(cfg.feature_dim, latent);
        const double scale = 1.0 / std::sqrt(static_cast<double>(latent));
        for (double& v : lift.flat()) v = scale * standard_normal(rng);
        FeatureTable t;
        t.modality = cfg.modalities[m];
        t.dim = cfg.feature_dim;
        t.values.resize(out.items.size() * cfg.feature_dim);
        std::vector<double> f(cfg.feature_dim);
        for (std::size_t item = 0; item < out.items.size(); ++item) {
            matvec(lift, out.latent.row(item), f);
            for (std::size_t k = 0; k < cfg.feature_dim; ++k)
                t.values[item * cfg.feature_dim + k] = static_cast<float>(f[k]);
        }
        out.tables.emplace(t.modality, std::move(t));
    }

    std::vector<PairRecord> all;
    const auto graph = planted_relation_graph(n_cat);
    for (std::size_t r = 0; r < graph.size(); ++r) {
        const auto [a, b] = graph[r];
        PlantedRelation rel{a, b, std::vector<double>(latent)};
        for (std::size_t i = 0; i < latent; ++i) rel.translation[i] = offsets(b, i) - offsets(a, i);
        out.relations.push_back(std::move(rel));

        std::vector<std::pair<std::size_t, std::size_t>> candidates;
        for (std::size_t s = 0; s < n_styles; ++s)
            for (std::size_t x : by_style[a][s])
                for (std::size_t y : by_style[b][s]) candidates.emplace_back(x, y);
        Rng rng = make_rng(cfg.seed, "synthetic_pairs", {r});
        std::shuffle(candidates.begin(), candidates.end(), rng);
        candidates.resize(std::min(candidates.size(), cfg.pairs_per_relation));
        for (const auto& [x, y] : candidates) all.push_back({out.items[x].item_id, out.items[y].item_id, Split::train, 0});
    }

    auto splits = split_pairs(std::move(all), {0.8, 0.1, 0.1}, derive_seed(cfg.seed, "synthetic_split"));
    for (Split s : kAllSplits)
        for (PairRecord& p : splits[static_cast<std::size_t>(s)]) {
            p.split = s;
            out.pairs.push_back(std::move(p));
        }
    for (std::size_t i = 0; i < out.pairs.size(); ++i) out.pairs[i].line = i + 2;  // after the header line
    return out;
}

/// Writes items.jsonl, pairs.tsv, one .tnfc file per modality and
/// synth_config.json into `dir` (created if needed).
inline SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg, const std::filesystem::path& dir) {
    SyntheticCorpus data = generate_synthetic_data(cfg);
    std::filesystem::create_directories(dir);
    write_items_file(dir / kItemsFile, data.items);
    write_pairs_file(dir / kPairsFile, data.pairs);
    for (const auto& [m, t] : data.tables) write_feature_file(dir / (m + kFeatureExtension), t);

    nlohmann::ordered_json j = synthetic_config_json(cfg);
    auto rels = nlohmann::ordered_json::array();
    for (const auto& r : data.relations)
        rels.push_back({{"head", data.category_names[r.head_category]},
                        {"tail", data.category_names[r.tail_category]},
                        {"translation", r.translation}});
    j["relations"] = rels;
    j["items"] = data.items.size();
    j["pairs"] = data.pairs.size();
    std::ofstream os(dir / kSynthConfigFile, std::ios::binary | std::ios::trunc);
    os << j.dump(2) << '\n';
    return data;
}

}  // namespace tnfcm
