#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tnfcm/common.hpp"
#include "tnfcm/corpus.hpp"
#include "tnfcm/linalg.hpp"
#include "tnfcm/random.hpp"

namespace tnfcm {

/// Unordered category pair stored canonically (first < second).
struct CategoryPair {
    std::string first;
    std::string second;

    auto operator<=>(const CategoryPair&) const = default;
};

/// Row reference returned by a relation lookup. `sign` is -1 when the
/// requested direction is the reverse of the canonical pair and the
/// table ties both directions to one vector.
struct RelationRef {
    std::size_t row = 0;
    double sign = 1.0;
    std::size_t pair = 0;  // canonical pair index (mask row for CSN)
};

/// Maps complementary category pairs to parameter rows.
///
/// Tied (default): one row per canonical pair, reverse lookups flip the sign.
/// Untied: two independent rows per pair, row 2k for the canonical
/// direction and 2k+1 for the reverse, both with sign +1.
class RelationIndex {
public:
    RelationIndex() = default;

    RelationIndex(std::vector<CategoryPair> pairs, bool untied) : untied_(untied) {
        for (auto& p : pairs) {
            if (p.first == p.second) throw ValidationError("relation joins category \"" + p.first + "\" with itself");
            if (p.second < p.first) std::swap(p.first, p.second);
        }
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        pairs_ = std::move(pairs);
        for (std::size_t i = 0; i < pairs_.size(); ++i) {
            lookup_.emplace(pairs_[i], i);
            partners_[pairs_[i].first].push_back(pairs_[i].second);
            partners_[pairs_[i].second].push_back(pairs_[i].first);
        }
        for (auto& [_, v] : partners_) std::sort(v.begin(), v.end());
    }

    /// One canonical pair per distinct unordered category pair in training positives.
    static RelationIndex from_training(const Corpus& corpus, bool untied = false) {
        std::vector<CategoryPair> pairs;
        for (const ItemPair& p : corpus.pairs(Split::train).pairs)
            pairs.push_back({corpus.item(p.head).category_id, corpus.item(p.tail).category_id});
        return RelationIndex(std::move(pairs), untied);
    }

    bool untied() const noexcept { return untied_; }
    std::size_t num_pairs() const noexcept { return pairs_.size(); }
    std::size_t num_rows() const noexcept { return untied_ ? 2 * pairs_.size() : pairs_.size(); }
    const std::vector<CategoryPair>& pairs() const noexcept { return pairs_; }

    std::optional<RelationRef> find(const std::string& cx, const std::string& cy) const {
        const bool canonical = cx < cy;
        auto it = lookup_.find(canonical ? CategoryPair{cx, cy} : CategoryPair{cy, cx});
        if (it == lookup_.end()) return std::nullopt;
        const std::size_t k = it->second;
        if (untied_) return RelationRef{canonical ? 2 * k : 2 * k + 1, 1.0, k};
        return RelationRef{k, canonical ? 1.0 : -1.0, k};
    }

    RelationRef lookup(const std::string& cx, const std::string& cy) const {
        auto r = find(cx, cy);
        if (!r) throw UnknownRelationError(cx, cy);
        return *r;
    }

    bool complementary(const std::string& cx, const std::string& cy) const { return find(cx, cy).has_value(); }

    /// Sorted categories forming a relation with `c` (empty if none).
    const std::vector<std::string>& partners(const std::string& c) const {
        static const std::vector<std::string> kNone;
        auto it = partners_.find(c);
        return it == partners_.end() ? kNone : it->second;
    }

private:
    bool untied_ = false;
    std::vector<CategoryPair> pairs_;
    std::map<CategoryPair, std::size_t> lookup_;
    std::map<std::string, std::vector<std::string>> partners_;
};

/// Relation vectors with their index. Rows are unit-norm at construction;
/// nothing constrains their norm afterwards.
struct RelationTable {
    RelationIndex index;
    Matrix vectors;

    /// Signed relation vector for the direction c_x -> c_y.
    std::pair<std::vector<double>, RelationRef> lookup(const std::string& cx, const std::string& cy) const {
        const RelationRef ref = index.lookup(cx, cy);
        auto row = vectors.row(ref.row);
        std::vector<double> r(row.begin(), row.end());
        for (double& v : r) v *= ref.sign;
        return {std::move(r), ref};
    }
};

/// Standard-normal rows scaled to unit length.
inline Matrix random_unit_rows(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    Matrix m(rows, dim);
    for (std::size_t r = 0; r < rows; ++r) {
        Rng rng = make_rng(seed, "relation_init", {r});
        auto row = m.row(r);
        double n = 0.0;
        while (n < 1e-6) {
            for (double& v : row) v = standard_normal(rng);
            n = norm(row);
        }
        for (double& v : row) v /= n;
    }
    return m;
}

inline RelationTable build_relation_table(const Corpus& corpus, std::size_t embedding_dim, std::uint64_t seed,
                                          bool untied = false) {
    if (embedding_dim == 0) throw ConfigError("relation embedding dimension must be positive");
    RelationTable t;
    t.index = RelationIndex::from_training(corpus, untied);
    t.vectors = random_unit_rows(t.index.num_rows(), embedding_dim, seed);
    return t;
}

}  // namespace tnfcm
