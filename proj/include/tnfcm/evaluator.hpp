#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tnfcm/common.hpp"
#include "tnfcm/corpus.hpp"
#include "tnfcm/model.hpp"
#include "tnfcm/sampling.hpp"

namespace tnfcm {

/// Fraction of negatives scored strictly below the gold candidate.
inline double auc_for_query(double gold_score, std::span<const double> negative_scores) {
    if (negative_scores.empty()) throw ConfigError("auc_for_query: no negative scores");
    std::size_t below = 0;
    for (double s : negative_scores)
        if (gold_score > s) ++below;
    return static_cast<double>(below) / static_cast<double>(negative_scores.size());
}

/// 1 when the gold candidate ranks within the top K. Negatives that tie
/// the gold score are ranked above it.
inline int hit_at_k(double gold_score, std::span<const double> negative_scores, std::size_t k) {
    if (k == 0) throw ConfigError("hit_at_k: K must be >= 1");
    std::size_t at_or_above = 0;
    for (double s : negative_scores)
        if (s >= gold_score) ++at_or_above;
    return at_or_above < k ? 1 : 0;
}

struct EvalConfig {
    std::size_t negatives = 100;
    std::vector<std::size_t> ks{5, 10, 20, 40};
    EvalMode mode = EvalMode::open;
    ScorePart part = ScorePart::all;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const {
        if (negatives == 0) throw ConfigError("number of negatives must be >= 1");
        if (ks.empty()) throw ConfigError("at least one K is required");
        for (std::size_t k : ks)
            if (k == 0) throw ConfigError("K must be >= 1");
    }
};

struct QueryScores {
    double gold = 0.0;
    std::vector<double> negatives;
};

struct EvalReport {
    double auc = 0.0;
    std::map<std::size_t, double> hits;
    std::size_t n_queries = 0;
    std::size_t n_skipped = 0;                   // excluded from the averages
    std::size_t n_skipped_unknown_relation = 0;
    std::size_t n_skipped_no_negatives = 0;
    std::size_t n_shortfall = 0;                 // queries with fewer than N negatives
    std::string mode = "open";
    std::string score_part = "all";
    std::string split = "test";
    std::string model = "";
    std::string status = "ok";
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();
};

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["auc"] = r.auc;
    nlohmann::ordered_json hits = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.hits) hits[std::to_string(k)] = v;
    j["hits"] = hits;
    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    table["AUC"] = 100.0 * r.auc;
    for (const auto& [k, v] : r.hits) table["Hit@" + std::to_string(k)] = 100.0 * v;
    j["percent"] = table;
    j["n_queries"] = r.n_queries;
    j["n_skipped"] = r.n_skipped;
    j["n_skipped_unknown_relation"] = r.n_skipped_unknown_relation;
    j["n_skipped_no_negatives"] = r.n_skipped_no_negatives;
    j["n_shortfall"] = r.n_shortfall;
    j["mode"] = r.mode;
    j["score_part"] = r.score_part;
    j["split"] = r.split;
    j["model"] = r.model;
    j["status"] = r.status;
    j["seed"] = r.seed;
    j["config"] = r.config;
    return j;
}

/// Mean per-query AUC and mean per-query Hit@K, accumulated in query order.
inline EvalReport aggregate_scores(std::span<const QueryScores> queries, std::span<const std::size_t> ks) {
    EvalReport r;
    double auc_sum = 0.0;
    std::map<std::size_t, double> hit_sums;
    for (std::size_t k : ks) hit_sums[k] = 0.0;
    for (const QueryScores& q : queries) {
        auc_sum += auc_for_query(q.gold, q.negatives);
        for (auto& [k, sum] : hit_sums) sum += hit_at_k(q.gold, q.negatives, k);
    }
    r.n_queries = queries.size();
    if (!queries.empty()) {
        const double n = static_cast<double>(queries.size());
        r.auc = auc_sum / n;
        for (const auto& [k, sum] : hit_sums) r.hits[k] = sum / n;
    } else {
        for (const auto& [k, _] : hit_sums) r.hits[k] = 0.0;
    }
    return r;
}

/// Outcome of candidate construction for every pair of a split; queries
/// whose relation is unknown to the model have no candidate set.
struct CandidatePlan {
    std::vector<CandidateSet> sets;
    std::size_t skipped_unknown_relation = 0;
};

inline CandidatePlan build_candidates(const Corpus& corpus, const RelationIndex& index, Split split,
                                      const EvalConfig& cfg) {
    CandidatePlan plan;
    for (const ItemPair& p : corpus.pairs(split).pairs) {
        if (!index.complementary(corpus.item(p.head).category_id, corpus.item(p.tail).category_id)) {
            ++plan.skipped_unknown_relation;
            continue;
        }
        plan.sets.push_back(sample_eval_candidates(p.head, p.tail, corpus, index, cfg.negatives, cfg.mode,
                                                   cfg.seed));
    }
    return plan;
}

/// Scores every candidate set with `score(query, candidate)` and aggregates.
/// Candidate sets are split into contiguous chunks across threads; the
/// reduction always runs in query order.
template <typename ScoreFn>
EvalReport evaluate_candidates(const std::vector<CandidateSet>& sets, const EvalConfig& cfg, ScoreFn&& score,
                               std::size_t skipped_unknown_relation = 0) {
    cfg.validate();
    std::vector<std::optional<QueryScores>> scored(sets.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const CandidateSet& cs = sets[i];
            if (cs.negatives.empty()) continue;
            QueryScores q;
            q.gold = score(cs.query, cs.gold);
            q.negatives.reserve(cs.negatives.size());
            for (std::size_t n : cs.negatives) q.negatives.push_back(score(cs.query, n));
            scored[i] = std::move(q);
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(cfg.threads, sets.size()));
    if (workers <= 1) {
        work(0, sets.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (sets.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk, e = std::min(sets.size(), b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& t : pool) t.join();
    }
    std::vector<QueryScores> kept;
    std::size_t no_negatives = 0, shortfall = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (sets[i].negatives.size() < cfg.negatives) ++shortfall;
        if (!scored[i]) {
            ++no_negatives;
            continue;
        }
        kept.push_back(std::move(*scored[i]));
    }
    EvalReport r = aggregate_scores(kept, cfg.ks);
    r.n_skipped_unknown_relation = skipped_unknown_relation;
    r.n_skipped_no_negatives = no_negatives;
    r.n_skipped = skipped_unknown_relation + no_negatives;
    r.n_shortfall = shortfall;
    r.mode = std::string(mode_name(cfg.mode));
    r.score_part = std::string(part_name(cfg.part));
    r.seed = cfg.seed;
    if (r.n_queries == 0) {
        r.status = "warning: no evaluable queries";
        log(LogLevel::warning, "evaluation produced no evaluable queries");
    }
    if (shortfall > 0)
        log(LogLevel::warning, shortfall, " queries had fewer than ", cfg.negatives, " eligible negatives");
    return r;
}

/// Full protocol: candidates per test pair (or the frozen sets given),
/// inference embeddings for every involved item, model scores, metrics.
inline EvalReport evaluate(const Model& model, const Corpus& corpus, Split split, const EvalConfig& cfg,
                           const std::vector<CandidateSet>* frozen = nullptr) {
    cfg.validate();
    model.check_compatible(corpus);
    if (cfg.part != ScorePart::all && model.config.kind != ModelKind::transnfcm)
        throw ConfigError("score part '" + std::string(part_name(cfg.part)) + "' is only defined for transnfcm");
    CandidatePlan plan;
    if (frozen) {
        for (const CandidateSet& cs : *frozen) {
            if (!model.index.complementary(corpus.item(cs.query).category_id, corpus.item(cs.gold).category_id))
                ++plan.skipped_unknown_relation;
            else
                plan.sets.push_back(cs);
        }
    } else {
        plan = build_candidates(corpus, model.index, split, cfg);
    }

    std::vector<std::optional<std::vector<double>>> cache(corpus.num_items());
    for (const CandidateSet& cs : plan.sets) {
        if (!cache[cs.query]) cache[cs.query] = model.embed(corpus, cs.query);
        for (std::size_t c : cs.candidates())
            if (!cache[c]) cache[c] = model.embed(corpus, c);
    }
    auto score = [&](std::size_t q, std::size_t c) {
        return model.score(*cache[q], *cache[c], corpus.item(q).category_id, corpus.item(c).category_id, cfg.part);
    };
    EvalReport r = evaluate_candidates(plan.sets, cfg, score, plan.skipped_unknown_relation);
    r.split = std::string(split_name(split));
    r.model = std::string(kind_name(model.config.kind));
    r.config = {{"negatives", cfg.negatives}, {"ks", cfg.ks}, {"train_config", model.config}};
    if (plan.skipped_unknown_relation > 0)
        log(LogLevel::warning, plan.skipped_unknown_relation, " queries skipped: relation unseen in training");
    return r;
}

}  // namespace tnfcm
