#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tnfcm/common.hpp"
#include "tnfcm/corpus.hpp"
#include "tnfcm/encoder.hpp"
#include "tnfcm/linalg.hpp"
#include "tnfcm/random.hpp"
#include "tnfcm/relations.hpp"
#include "tnfcm/scoring.hpp"

namespace tnfcm {

enum class ModelKind { transnfcm, trinet, sianet, bpr, csn };

inline std::string_view kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::transnfcm: return "transnfcm";
        case ModelKind::trinet: return "trinet";
        case ModelKind::sianet: return "sianet";
        case ModelKind::bpr: return "bpr";
        case ModelKind::csn: return "csn";
    }
    return "?";
}

inline ModelKind parse_kind(std::string_view s) {
    for (ModelKind k : {ModelKind::transnfcm, ModelKind::trinet, ModelKind::sianet, ModelKind::bpr, ModelKind::csn})
        if (kind_name(k) == s) return k;
    if (s == "monomer")
        throw ConfigError("unsupported model 'monomer': the mixture-of-distances model is out of scope "
                          "(its mixture weights are not defined here); choose one of "
                          "transnfcm, trinet, sianet, bpr, csn");
    throw ConfigError("unknown model kind '" + std::string(s) + "' (expected transnfcm, trinet, sianet, bpr or csn)");
}

/// Expands the short modality aliases used on the command line.
inline std::string canonical_modality(const std::string& m) {
    if (m == "v") return "visual";
    if (m == "t") return "textual";
    return m;
}

struct TrainConfig {
    ModelKind kind = ModelKind::transnfcm;
    std::vector<std::string> modalities{"visual", "textual"};
    std::size_t embed_dim = 128;  // per modality
    std::size_t hidden_dim = 0;   // optional ReLU layer inside each encoder
    double base_lr = 1e-3;
    double momentum = 0.9;
    std::size_t lr_drop_every = 10;
    double lr_drop_factor = 10.0;
    double encoder_lr_scale = 1.0;
    double margin = 1.0;
    double contrastive_margin = 1.0;
    double csn_l1 = 5e-4;
    std::size_t batch_size = 128;
    std::size_t epochs = 30;
    double dropout_rate = 0.5;
    std::size_t negatives_per_side = 1;
    bool untied_directions = false;
    std::size_t validation_negatives = 100;
    bool validate_each_epoch = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (embed_dim == 0) throw ConfigError("embedding dimension must be positive");
        if (modalities.empty()) throw ConfigError("at least one modality is required");
        if (!(base_lr > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
        if (!(lr_drop_factor > 0.0)) throw ConfigError("lr drop factor must be positive");
        if (!(encoder_lr_scale >= 0.0)) throw ConfigError("encoder lr scale must be non-negative");
        if (!(margin >= 0.0)) throw ConfigError("margin must be non-negative");
        if (!(contrastive_margin > 0.0)) throw ConfigError("contrastive margin must be positive");
        if (!(csn_l1 >= 0.0)) throw ConfigError("CSN L1 weight must be non-negative");
        if (batch_size == 0) throw ConfigError("batch size must be positive");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
        if (negatives_per_side == 0) throw ConfigError("negatives per side must be >= 1");
        if (validation_negatives == 0) throw ConfigError("validation negatives must be >= 1");
        for (std::size_t i = 0; i < modalities.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (modalities[i] == modalities[j]) throw ConfigError("modality '" + modalities[i] + "' listed twice");
    }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"model", kind_name(c.kind)},
                       {"modalities", c.modalities},
                       {"dim", c.embed_dim},
                       {"hidden_dim", c.hidden_dim},
                       {"lr", c.base_lr},
                       {"momentum", c.momentum},
                       {"lr_drop_every", c.lr_drop_every},
                       {"lr_drop_factor", c.lr_drop_factor},
                       {"encoder_lr_scale", c.encoder_lr_scale},
                       {"margin", c.margin},
                       {"contrastive_margin", c.contrastive_margin},
                       {"csn_l1", c.csn_l1},
                       {"batch", c.batch_size},
                       {"epochs", c.epochs},
                       {"dropout", c.dropout_rate},
                       {"negatives_per_side", c.negatives_per_side},
                       {"untied_directions", c.untied_directions},
                       {"validation_negatives", c.validation_negatives},
                       {"validate_each_epoch", c.validate_each_epoch},
                       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    c = TrainConfig{};
    c.kind = parse_kind(j.at("model").get<std::string>());
    c.modalities = j.at("modalities").get<std::vector<std::string>>();
    c.embed_dim = j.at("dim").get<std::size_t>();
    c.hidden_dim = j.value("hidden_dim", std::size_t{0});
    c.base_lr = j.at("lr").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.lr_drop_every = j.at("lr_drop_every").get<std::size_t>();
    c.lr_drop_factor = j.at("lr_drop_factor").get<double>();
    c.encoder_lr_scale = j.at("encoder_lr_scale").get<double>();
    c.margin = j.at("margin").get<double>();
    c.contrastive_margin = j.at("contrastive_margin").get<double>();
    c.csn_l1 = j.at("csn_l1").get<double>();
    c.batch_size = j.at("batch").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.dropout_rate = j.at("dropout").get<double>();
    c.negatives_per_side = j.at("negatives_per_side").get<std::size_t>();
    c.untied_directions = j.at("untied_directions").get<bool>();
    c.validation_negatives = j.at("validation_negatives").get<std::size_t>();
    c.validate_each_epoch = j.at("validate_each_epoch").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
}

/// All trainable tensors. Also used, zero-filled, as a gradient buffer
/// and as optimizer velocity.
struct Parameters {
    std::vector<ModalityEncoder> encoders;
    Matrix relations;  // transnfcm only
    Matrix masks;      // csn only

    Parameters zeros_like() const {
        Parameters p;
        for (const auto& e : encoders) p.encoders.push_back(e.zeros_like());
        p.relations = Matrix(relations.rows(), relations.cols());
        p.masks = Matrix(masks.rows(), masks.cols());
        return p;
    }
};

template <typename Span>
struct BasicTensorView {
    std::string name;
    std::vector<std::size_t> shape;
    Span values;
};

using TensorView = BasicTensorView<std::span<double>>;
using ConstTensorView = BasicTensorView<std::span<const double>>;

namespace detail {

template <typename P, typename View>
std::vector<View> collect_tensors(P& p) {
    std::vector<View> out;
    for (auto& e : p.encoders) {
        const std::string prefix = "encoder." + e.modality + ".";
        if (e.has_hidden()) {
            out.push_back({prefix + "hidden_weight", {e.hidden_weight.rows(), e.hidden_weight.cols()},
                           e.hidden_weight.flat()});
            out.push_back({prefix + "hidden_bias", {e.hidden_bias.size()}, e.hidden_bias});
        }
        out.push_back({prefix + "weight", {e.weight.rows(), e.weight.cols()}, e.weight.flat()});
        out.push_back({prefix + "bias", {e.bias.size()}, e.bias});
    }
    if (!p.relations.empty()) out.push_back({"relations", {p.relations.rows(), p.relations.cols()}, p.relations.flat()});
    if (!p.masks.empty()) out.push_back({"masks", {p.masks.rows(), p.masks.cols()}, p.masks.flat()});
    return out;
}

}  // namespace detail

/// Tensors in a fixed order (encoders by modality, then relations, then masks).
inline std::vector<TensorView> tensors(Parameters& p) { return detail::collect_tensors<Parameters, TensorView>(p); }
inline std::vector<ConstTensorView> tensors(const Parameters& p) {
    return detail::collect_tensors<const Parameters, ConstTensorView>(p);
}

/// Rounds every parameter to the nearest 32-bit float so the stored form
/// (checkpoints hold f32) is exactly the in-memory form.
inline void round_to_storage(Parameters& p) {
    for (auto& t : tensors(p))
        for (double& v : t.values) v = static_cast<double>(static_cast<float>(v));
}

inline void check_finite(const Parameters& p) {
    for (const auto& t : tensors(p))
        if (!all_finite(t.values)) throw NonFiniteError("non-finite values in parameter tensor '" + t.name + "'");
}

enum class ScorePart { all, global, category };

inline std::string_view part_name(ScorePart p) {
    switch (p) {
        case ScorePart::all: return "all";
        case ScorePart::global: return "global";
        case ScorePart::category: return "category";
    }
    return "?";
}

inline ScorePart parse_part(std::string_view s) {
    if (s == "all") return ScorePart::all;
    if (s == "global") return ScorePart::global;
    if (s == "category") return ScorePart::category;
    throw ConfigError("unknown score part '" + std::string(s) + "' (expected all, global or category)");
}

struct Model {
    TrainConfig config;
    RelationIndex index;
    Parameters params;
    std::size_t epoch = 0;
    nlohmann::json history = nlohmann::json::array();

    std::size_t embedding_dim() const noexcept { return config.embed_dim * config.modalities.size(); }

    /// Throws DimensionError when the corpus lacks a modality or its feature
    /// width differs from the encoder's input width.
    void check_compatible(const Corpus& corpus) const {
        for (const auto& e : params.encoders) {
            if (!corpus.has_modality(e.modality))
                throw DimensionError("model expects modality '" + e.modality + "' which the corpus does not provide");
            if (corpus.table(e.modality).dim != e.input_dim)
                throw DimensionError(detail::concat("modality '", e.modality, "': model input dim ", e.input_dim,
                                                    " but corpus features have dim ", corpus.table(e.modality).dim));
        }
    }

    /// Inference-time fused embedding (no dropout).
    std::vector<double> embed(const Corpus& corpus, std::size_t item) const {
        std::vector<double> out;
        out.reserve(embedding_dim());
        for (const auto& e : params.encoders) {
            auto u = encode(e, corpus.features(item, e.modality));
            out.insert(out.end(), u.begin(), u.end());
        }
        return out;
    }

    /// Compatibility score, higher is better. `part` selects a term of the
    /// translation-distance expansion and is only meaningful for transnfcm.
    double score(std::span<const double> x, std::span<const double> y, const std::string& cx, const std::string& cy,
                 ScorePart part = ScorePart::all) const {
        if (part != ScorePart::all && config.kind != ModelKind::transnfcm)
            throw ConfigError("score part '" + std::string(part_name(part)) + "' is only defined for transnfcm");
        switch (config.kind) {
            case ModelKind::transnfcm: {
                const RelationRef ref = index.lookup(cx, cy);
                std::vector<double> r(params.relations.row(ref.row).begin(), params.relations.row(ref.row).end());
                for (double& v : r) v *= ref.sign;
                const ScoreBreakdown b = dist_transnfcm(x, y, r);
                if (part == ScorePart::global) return b.global_term;
                if (part == ScorePart::category) return b.category_term;
                return -b.total_distance;
            }
            case ModelKind::trinet:
            case ModelKind::sianet:
                return -dist_euclid(x, y);
            case ModelKind::bpr:
                return score_inner(x, y);
            case ModelKind::csn: {
                const RelationRef ref = index.lookup(cx, cy);
                return -dist_csn(x, y, params.masks.row(ref.pair));
            }
        }
        return 0.0;
    }
};

/// Fresh model: encoders sized from the corpus features, relation rows
/// unit-norm, CSN masks all-ones. The relation index comes from training
/// positives only.
inline Model initialize_model(const Corpus& corpus, const TrainConfig& config) {
    config.validate();
    Model m;
    m.config = config;
    for (auto& mod : m.config.modalities) mod = canonical_modality(mod);
    m.index = RelationIndex::from_training(corpus, config.untied_directions);
    for (std::size_t i = 0; i < m.config.modalities.size(); ++i) {
        const std::string& mod = m.config.modalities[i];
        if (!corpus.has_modality(mod)) throw ConfigError("corpus has no modality '" + mod + "'");
        m.params.encoders.push_back(init_encoder(mod, corpus.table(mod).dim, config.embed_dim, config.hidden_dim,
                                                 derive_seed(config.seed, "encoder", {i})));
    }
    const std::size_t dim = m.embedding_dim();
    if (config.kind == ModelKind::transnfcm)
        m.params.relations = random_unit_rows(m.index.num_rows(), dim, derive_seed(config.seed, "relations"));
    if (config.kind == ModelKind::csn) m.params.masks = Matrix(m.index.num_pairs(), dim, 1.0);
    round_to_storage(m.params);
    return m;
}

}  // namespace tnfcm
