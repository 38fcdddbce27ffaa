#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tnfcm/common.hpp"
#include "tnfcm/corpus.hpp"
#include "tnfcm/random.hpp"
#include "tnfcm/relations.hpp"

namespace tnfcm {

inline constexpr std::size_t kMaxRejectionAttempts = 100;

enum class CorruptSide { tail, head };

/// Positive pair (head, tail, relation) plus one corrupted counterpart.
/// Tail-corrupt: negative pair is (head, corrupted).
/// Head-corrupt: negative pair is (corrupted, tail).
struct FiveTuple {
    std::size_t head = 0;
    std::size_t tail = 0;
    RelationRef relation;
    std::size_t corrupted = 0;
    RelationRef corrupted_relation;
    CorruptSide side = CorruptSide::tail;

    std::size_t negative_head() const noexcept { return side == CorruptSide::head ? corrupted : head; }
    std::size_t negative_tail() const noexcept { return side == CorruptSide::tail ? corrupted : tail; }

    bool operator==(const FiveTuple& o) const noexcept {
        return head == o.head && tail == o.tail && relation.row == o.relation.row &&
               relation.sign == o.relation.sign && corrupted == o.corrupted &&
               corrupted_relation.row == o.corrupted_relation.row &&
               corrupted_relation.sign == o.corrupted_relation.sign && side == o.side;
    }
};

struct TupleSample {
    std::vector<FiveTuple> tuples;
    std::size_t skipped_slots = 0;   // rejection cap hit or no complementary items
    std::size_t requested_slots = 0;
};

/// For every category, the items of all categories complementary to it.
class ComplementPools {
public:
    ComplementPools(const Corpus& corpus, const RelationIndex& index) : pools_(corpus.categories().size()) {
        for (std::size_t c = 0; c < corpus.categories().size(); ++c) {
            for (const std::string& partner : index.partners(corpus.category_name(c))) {
                auto pc = corpus.category_index(partner);
                if (!pc) continue;
                const auto& items = corpus.items_in_category(*pc);
                pools_[c].insert(pools_[c].end(), items.begin(), items.end());
            }
        }
    }

    const std::vector<std::size_t>& pool(std::size_t category) const { return pools_.at(category); }

private:
    std::vector<std::vector<std::size_t>> pools_;
};

namespace detail {

inline RelationRef relation_between(const Corpus& corpus, const RelationIndex& index, std::size_t a,
                                    std::size_t b) {
    return index.lookup(corpus.item(a).category_id, corpus.item(b).category_id);
}

}  // namespace detail

/// Corrupted 5-tuples for one epoch. Each positive (x, y) yields
/// `negatives_per_side` tail-corrupt and head-corrupt tuples; the corrupted
/// item is uniform over items of categories complementary to the fixed
/// item, rejecting known positives and the replaced item itself. Output is
/// a pure function of (positives, corpus, index, known, seed, epoch).
inline TupleSample sample_five_tuples(std::span<const ItemPair> positives, const Corpus& corpus,
                                      const RelationIndex& index, const PositiveSet& known,
                                      std::size_t negatives_per_side, std::uint64_t seed, std::uint64_t epoch) {
    if (negatives_per_side == 0) throw ConfigError("negatives_per_side must be >= 1");
    const ComplementPools pools(corpus, index);
    TupleSample out;
    out.tuples.reserve(positives.size() * negatives_per_side * 2);
    for (std::size_t i = 0; i < positives.size(); ++i) {
        const ItemPair p = positives[i];
        const RelationRef rel = detail::relation_between(corpus, index, p.head, p.tail);
        Rng rng = make_rng(seed, "five_tuples", {epoch, i});
        for (CorruptSide side : {CorruptSide::tail, CorruptSide::head}) {
            const std::size_t fixed = side == CorruptSide::tail ? p.head : p.tail;
            const std::size_t replaced = side == CorruptSide::tail ? p.tail : p.head;
            const auto& pool = pools.pool(corpus.category_of(fixed));
            for (std::size_t k = 0; k < negatives_per_side; ++k) {
                ++out.requested_slots;
                if (pool.empty()) {
                    ++out.skipped_slots;
                    continue;
                }
                bool found = false;
                for (std::size_t attempt = 0; attempt < kMaxRejectionAttempts; ++attempt) {
                    const std::size_t cand = pool[uniform_index(rng, pool.size())];
                    if (cand == replaced || known.contains(fixed, cand)) continue;
                    FiveTuple t{p.head, p.tail, rel, cand, {}, side};
                    t.corrupted_relation = side == CorruptSide::tail
                                               ? detail::relation_between(corpus, index, p.head, cand)
                                               : detail::relation_between(corpus, index, cand, p.tail);
                    out.tuples.push_back(t);
                    found = true;
                    break;
                }
                if (!found) ++out.skipped_slots;
            }
        }
    }
    return out;
}

enum class EvalMode { open, known_target };

inline std::string_view mode_name(EvalMode m) { return m == EvalMode::open ? "open" : "known-target"; }

/// Gold tail plus sampled negatives for one test query.
struct CandidateSet {
    std::size_t query = 0;
    std::size_t gold = 0;
    std::vector<std::size_t> negatives;
    std::size_t shortfall = 0;  // requested minus available negatives

    /// [gold] + negatives
    std::vector<std::size_t> candidates() const {
        std::vector<std::size_t> c{gold};
        c.insert(c.end(), negatives.begin(), negatives.end());
        return c;
    }

    bool operator==(const CandidateSet&) const = default;
};

/// Draws up to `n` distinct negatives for (query, gold). Open mode samples
/// from all categories complementary to the query; known-target mode only
/// from the gold item's category. Negatives never co-occur with the query
/// in any split and never equal the gold item. The stream is keyed by
/// (seed, query, gold) so every model sees the same candidates.
inline CandidateSet sample_eval_candidates(std::size_t query, std::size_t gold, const Corpus& corpus,
                                           const RelationIndex& index, std::size_t n, EvalMode mode,
                                           std::uint64_t seed) {
    if (n == 0) throw ConfigError("number of negative candidates must be >= 1");
    std::vector<std::size_t> eligible;
    auto consider = [&](std::size_t cand) {
        if (cand != gold && cand != query && !corpus.all_positives().contains(query, cand)) eligible.push_back(cand);
    };
    if (mode == EvalMode::known_target) {
        for (std::size_t cand : corpus.items_in_category(corpus.category_of(gold))) consider(cand);
    } else {
        for (const std::string& partner : index.partners(corpus.item(query).category_id)) {
            auto pc = corpus.category_index(partner);
            if (!pc) continue;
            for (std::size_t cand : corpus.items_in_category(*pc)) consider(cand);
        }
    }
    CandidateSet cs{query, gold, {}, 0};
    Rng rng = make_rng(seed, "eval_candidates", {query, gold});
    const std::size_t take = std::min(n, eligible.size());
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + uniform_index(rng, eligible.size() - i);
        std::swap(eligible[i], eligible[j]);
    }
    cs.negatives.assign(eligible.begin(), eligible.begin() + take);
    cs.shortfall = n - take;
    return cs;
}

/// JSON-lines: {"query_id", "gold_id", "negative_ids": [...]} per query.
inline void write_candidate_file(const std::filesystem::path& path, const Corpus& corpus,
                                 const std::vector<CandidateSet>& sets) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    for (const CandidateSet& cs : sets) {
        nlohmann::ordered_json j;
        j["query_id"] = corpus.item(cs.query).item_id;
        j["gold_id"] = corpus.item(cs.gold).item_id;
        auto negs = nlohmann::ordered_json::array();
        for (std::size_t n : cs.negatives) negs.push_back(corpus.item(n).item_id);
        j["negative_ids"] = negs;
        os << j.dump() << '\n';
    }
}

inline std::vector<CandidateSet> read_candidate_file(const std::filesystem::path& path, const Corpus& corpus) {
    const std::string name = path.string();
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("missing candidate file " + name);
    std::vector<CandidateSet> out;
    std::string line;
    std::size_t lineno = 0;
    auto resolve = [&](const nlohmann::json& v, const std::string& where) {
        if (!v.is_string()) throw ValidationError(where + ": item ids must be strings");
        auto idx = corpus.index_of(v.get<std::string>());
        if (!idx) throw ValidationError(where + ": unknown item_id \"" + v.get<std::string>() + "\"");
        return *idx;
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = detail::concat(name, ":", lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(where + ": invalid JSON (" + e.what() + ")");
        }
        if (!j.contains("query_id") || !j.contains("gold_id") || !j.contains("negative_ids") ||
            !j["negative_ids"].is_array())
            throw ValidationError(where + ": expected keys query_id, gold_id, negative_ids");
        CandidateSet cs;
        cs.query = resolve(j["query_id"], where);
        cs.gold = resolve(j["gold_id"], where);
        for (const auto& v : j["negative_ids"]) cs.negatives.push_back(resolve(v, where));
        out.push_back(std::move(cs));
    }
    return out;
}

}  // namespace tnfcm
