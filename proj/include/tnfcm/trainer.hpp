#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tnfcm/corpus.hpp"
#include "tnfcm/evaluator.hpp"
#include "tnfcm/model.hpp"
#include "tnfcm/objective.hpp"
#include "tnfcm/optimizer.hpp"
#include "tnfcm/random.hpp"
#include "tnfcm/sampling.hpp"

namespace tnfcm {

inline double lr_at(std::size_t epoch, const TrainConfig& cfg) {
    return step_decay_lr(epoch, cfg.base_lr, cfg.lr_drop_every, cfg.lr_drop_factor);
}

/// Momentum buffers, one per parameter tensor, zero-initialized.
struct OptimizerState {
    Parameters velocity;

    static OptimizerState for_model(const Model& m) { return {m.params.zeros_like()}; }
};

struct NormSummary {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

inline std::optional<NormSummary> relation_norms(const Model& m) {
    if (m.params.relations.empty()) return std::nullopt;
    NormSummary s{std::numeric_limits<double>::infinity(), 0.0, 0.0};
    for (std::size_t r = 0; r < m.params.relations.rows(); ++r) {
        const double n = norm(m.params.relations.row(r));
        s.min = std::min(s.min, n);
        s.max = std::max(s.max, n);
        s.mean += n;
    }
    s.mean /= static_cast<double>(m.params.relations.rows());
    return s;
}

struct EpochStats {
    std::size_t epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
    double active_fraction = 0.0;
    std::size_t tuples = 0;
    std::size_t batches = 0;
    std::size_t skipped_slots = 0;
    std::optional<NormSummary> relation_norm;
    std::optional<double> validation_auc;
};

inline nlohmann::ordered_json stats_to_json(const EpochStats& s) {
    nlohmann::ordered_json j;
    j["epoch"] = s.epoch;
    j["loss"] = s.mean_loss;
    j["lr"] = s.lr;
    j["active_hinge_fraction"] = s.active_fraction;
    j["validation_auc"] = s.validation_auc ? nlohmann::ordered_json(*s.validation_auc) : nlohmann::ordered_json();
    j["tuples"] = s.tuples;
    j["batches"] = s.batches;
    j["skipped_slots"] = s.skipped_slots;
    if (s.relation_norm)
        j["relation_norm"] = {{"min", s.relation_norm->min}, {"mean", s.relation_norm->mean}, {"max", s.relation_norm->max}};
    return j;
}

namespace detail {

inline void apply_step(Model& model, const Parameters& grad, OptimizerState& state, double lr) {
    auto params = tensors(model.params);
    auto grads = tensors(grad);
    auto vel = tensors(state.velocity);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const bool encoder = params[i].name.starts_with("encoder.");
        const double tensor_lr = encoder ? lr * model.config.encoder_lr_scale : lr;
        sgd_momentum_step(params[i].values, grads[i].values, vel[i].values, tensor_lr, model.config.momentum,
                          params[i].name);
    }
    round_to_storage(model.params);
}

}  // namespace detail

/// One pass over freshly corrupted training tuples: shuffle, then
/// sequential minibatches (last partial batch kept), one momentum step per
/// batch on the batch-mean gradient. Fully determined by the config seed.
inline EpochStats train_epoch(Model& model, const Corpus& corpus, OptimizerState& state, std::size_t epoch) {
    const TrainConfig& cfg = model.config;
    const auto& positives = corpus.pairs(Split::train).pairs;
    const PositiveSet known(positives);
    TupleSample sample = sample_five_tuples(positives, corpus, model.index, known, cfg.negatives_per_side,
                                            derive_seed(cfg.seed, "train_tuples"), epoch);
    Rng shuffle_rng = make_rng(cfg.seed, "tuple_shuffle", {epoch});
    std::shuffle(sample.tuples.begin(), sample.tuples.end(), shuffle_rng);

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr_at(epoch, cfg);
    stats.tuples = sample.tuples.size();
    stats.skipped_slots = sample.skipped_slots;
    const std::span<const FiveTuple> all(sample.tuples);
    double loss_sum = 0.0;
    std::size_t active = 0;
    for (std::size_t start = 0, b = 0; start < all.size(); start += cfg.batch_size, ++b) {
        const auto batch = all.subspan(start, std::min(cfg.batch_size, all.size() - start));
        Parameters grad = model.params.zeros_like();
        const DropoutPlan plan{cfg.dropout_rate, derive_seed(cfg.seed, "dropout"), epoch, b};
        const BatchResult r = batch_objective(model, corpus, batch, plan, &grad);
        if (!std::isfinite(r.loss))
            throw NonFiniteError(detail::concat("non-finite batch loss at epoch ", epoch, ", batch ", b));
        loss_sum += r.loss * static_cast<double>(batch.size());
        active += r.active;
        detail::apply_step(model, grad, state, stats.lr);
        ++stats.batches;
    }
    check_finite(model.params);
    if (!all.empty()) {
        stats.mean_loss = loss_sum / static_cast<double>(all.size());
        stats.active_fraction = static_cast<double>(active) / static_cast<double>(all.size());
    }
    stats.relation_norm = relation_norms(model);
    model.epoch = epoch + 1;
    return stats;
}

inline EvalConfig validation_eval_config(const TrainConfig& cfg) {
    EvalConfig e;
    e.negatives = cfg.validation_negatives;
    e.seed = derive_seed(cfg.seed, "validation");
    return e;
}

struct TrainingRun {
    Model final_model;
    std::optional<Model> best_model;  // highest validation AUC
    std::optional<double> best_validation_auc;
    std::vector<EpochStats> epochs;
};

/// Trains a fresh model for cfg.epochs epochs. When validation is enabled
/// and the split is non-empty, validation AUC is measured after each epoch
/// and the best-scoring model is kept alongside the final one.
inline TrainingRun train(const Corpus& corpus, const TrainConfig& cfg,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
    TrainingRun run{initialize_model(corpus, cfg), std::nullopt, std::nullopt, {}};
    Model& model = run.final_model;
    model.check_compatible(corpus);
    OptimizerState state = OptimizerState::for_model(model);
    const bool validate = cfg.validate_each_epoch && !corpus.pairs(Split::validation).pairs.empty();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochStats s = train_epoch(model, corpus, state, epoch);
        if (validate) {
            const EvalReport r = evaluate(model, corpus, Split::validation, validation_eval_config(model.config));
            if (r.n_queries > 0) s.validation_auc = r.auc;
        }
        model.history.push_back(nlohmann::json::parse(stats_to_json(s).dump()));
        if (s.validation_auc && (!run.best_validation_auc || *s.validation_auc > *run.best_validation_auc)) {
            run.best_validation_auc = s.validation_auc;
            run.best_model = model;
        }
        if (on_epoch) on_epoch(s);
        run.epochs.push_back(std::move(s));
    }
    return run;
}

}  // namespace tnfcm
