#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "tnfcm/encoder.hpp"
#include "tnfcm/random.hpp"
#include "tnfcm/scoring.hpp"

using namespace tnfcm;

using V = std::vector<double>;

TEST(DistTransnfcm, ExactTranslationIsZero) {
    const auto b = dist_transnfcm(V{1, 0}, V{0, 1}, V{-1, 1});
    EXPECT_EQ(b.total_distance, 0.0);
}

TEST(DistTransnfcm, IdenticalItemsNoRelation) {
    const V x{0.3, -0.4, 1.2};
    const auto b = dist_transnfcm(x, x, V{0, 0, 0});
    EXPECT_EQ(b.total_distance, 0.0);
    EXPECT_DOUBLE_EQ(b.global_term, squared_norm(x));
    EXPECT_EQ(b.category_term, 0.0);
}

TEST(DistTransnfcm, WorkedExpansion) {
    const auto b = dist_transnfcm(V{0.6, 0.8}, V{0.8, 0.6}, V{0, 0});
    EXPECT_NEAR(b.total_distance, 0.08, 1e-12);
    EXPECT_NEAR(b.global_term, 0.96, 1e-12);
    EXPECT_EQ(b.category_term, 0.0);
    EXPECT_NEAR(b.norm_terms - 2 * b.global_term - 2 * b.category_term, 0.08, 1e-12);
}

TEST(DistTransnfcm, DecompositionIdentityOnRandomTriples) {
    Rng rng = make_rng(1, "decomp");
    for (int i = 0; i < 1000; ++i) {
        const std::size_t d = 2 + uniform_index(rng, 255);
        V x(d), y(d), r(d);
        for (std::size_t k = 0; k < d; ++k) {
            x[k] = standard_normal(rng);
            y[k] = standard_normal(rng);
            r[k] = standard_normal(rng);
        }
        const auto b = dist_transnfcm(x, y, r);
        const double recon = b.norm_terms - 2 * b.global_term - 2 * b.category_term;
        EXPECT_LE(std::abs(b.total_distance - recon) / std::max(1.0, std::abs(b.total_distance)), 1e-9);
    }
}

TEST(DistTransnfcm, DimensionMismatchThrows) {
    EXPECT_THROW(dist_transnfcm(V{1, 0}, V{1, 0, 0}, V{0, 0}), DimensionError);
    EXPECT_THROW(dist_transnfcm(V{1, 0}, V{1, 0}, V{0}), DimensionError);
}

TEST(ScoreInner, Examples) {
    EXPECT_EQ(score_inner(V{1, 0}, V{0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(score_inner(V{0.6, 0.8}, V{0.6, 0.8}), 1.0);
    EXPECT_NEAR(score_inner(V{0.6, 0.8}, V{0.8, 0.6}), 0.96, 1e-12);
    EXPECT_THROW(score_inner(V{1}, V{1, 2}), DimensionError);
}

TEST(DistEuclid, Examples) {
    EXPECT_EQ(dist_euclid(V{0.2, 0.3}, V{0.2, 0.3}), 0.0);
    EXPECT_DOUBLE_EQ(dist_euclid(V{1, 0}, V{0, 1}), 2.0);
    EXPECT_NEAR(dist_euclid(V{0.6, 0.8}, V{0.8, 0.6}), 0.08, 1e-12);
    EXPECT_THROW(dist_euclid(V{1}, V{1, 2}), DimensionError);
}

TEST(DistEuclid, MatchesExpansion) {
    Rng rng = make_rng(2, "euclid");
    for (int i = 0; i < 200; ++i) {
        V x(9), y(9);
        for (std::size_t k = 0; k < 9; ++k) {
            x[k] = standard_normal(rng);
            y[k] = standard_normal(rng);
        }
        EXPECT_NEAR(dist_euclid(x, y), squared_norm(x) + squared_norm(y) - 2 * dot(x, y), 1e-9);
    }
}

TEST(DistCsn, Examples) {
    const V x{0.3, -1.0, 2.0}, y{1.5, 0.2, -0.7};
    EXPECT_DOUBLE_EQ(dist_csn(x, y, V{1, 1, 1}), dist_euclid(x, y));
    EXPECT_EQ(dist_csn(x, y, V{0, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(dist_csn(V{1, 0}, V{0, 1}, V{1, 0}), 1.0);
    EXPECT_THROW(dist_csn(x, y, V{1, 1}), DimensionError);
}

TEST(Scoring, RankingsAgreeForUnitEmbeddingsWithoutRelation) {
    Rng rng = make_rng(3, "rank");
    auto unit = [&] {
        V v(6);
        for (double& x : v) x = standard_normal(rng);
        const double n = norm(v);
        for (double& x : v) x /= n;
        return v;
    };
    const V zero(6, 0.0);
    for (int q = 0; q < 50; ++q) {
        const V x = unit();
        std::vector<V> cands(30);
        for (auto& c : cands) c = unit();
        auto order = [&](auto score) {
            std::vector<std::size_t> idx(cands.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
            return idx;
        };
        const auto a = order([&](std::size_t i) { return -dist_transnfcm(x, cands[i], zero).total_distance; });
        const auto b = order([&](std::size_t i) { return score_inner(x, cands[i]); });
        const auto c = order([&](std::size_t i) { return -dist_euclid(x, cands[i]); });
        EXPECT_EQ(a, b);
        EXPECT_EQ(b, c);
    }
}

TEST(Scoring, PureFunctions) {
    const V x{0.1, 0.2, 0.3}, y{-0.3, 0.5, 0.9}, r{0.7, -0.1, 0.2};
    const auto a = dist_transnfcm(x, y, r), b = dist_transnfcm(x, y, r);
    EXPECT_EQ(a.total_distance, b.total_distance);
    EXPECT_EQ(a.global_term, b.global_term);
    EXPECT_EQ(a.category_term, b.category_term);
}
