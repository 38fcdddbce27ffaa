#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace tnfcm;
using testing_util::TempDir;
using testing_util::TinyCorpus;

namespace {

std::size_t idx(const Corpus& c, const std::string& id) { return *c.index_of(id); }

/// tops t0..t9, bottoms b0..b9, shoes s0..s9; relations top-bottom and
/// top-shoe; a handful of training positives.
Corpus small_corpus() {
    TinyCorpus t({"t", "b", "s"}, 10);
    t.pair("t0", "b0").pair("t1", "b1").pair("t2", "s2").pair("t3", "b3").pair("t0", "s5");
    t.pair("t4", "b4", Split::test).pair("t5", "s5", Split::test);
    return t.build();
}

}  // namespace

TEST(FiveTuples, OnePositiveYieldsOneTuplePerSide) {
    TinyCorpus t({"t", "b"}, 5);
    t.pair("t0", "b0");
    const Corpus c = t.build();
    const RelationIndex index = RelationIndex::from_training(c);
    const auto& pos = c.pairs(Split::train).pairs;
    const TupleSample s = sample_five_tuples(pos, c, index, c.all_positives(), 1, 7, 0);
    ASSERT_EQ(s.tuples.size(), 2u);
    EXPECT_EQ(s.requested_slots, 2u);
    EXPECT_EQ(s.skipped_slots, 0u);
    EXPECT_EQ(s.tuples[0].side, CorruptSide::tail);
    EXPECT_EQ(s.tuples[1].side, CorruptSide::head);
    for (const FiveTuple& f : s.tuples) {
        EXPECT_EQ(f.head, idx(c, "t0"));
        EXPECT_EQ(f.tail, idx(c, "b0"));
    }
    EXPECT_EQ(c.category_name(c.category_of(s.tuples[0].corrupted)), "b");
    EXPECT_EQ(c.category_name(c.category_of(s.tuples[1].corrupted)), "t");
}

TEST(FiveTuples, ExhaustedPoolIsSkipped) {
    // t0 is positive with every bottom, b0 is positive with every top.
    TinyCorpus t({"t", "b"}, 2);
    t.pair("t0", "b0").pair("t0", "b1").pair("t1", "b0");
    const Corpus c = t.build();
    const RelationIndex index = RelationIndex::from_training(c);
    std::vector<ItemPair> one{c.pairs(Split::train).pairs[0]};
    const TupleSample s = sample_five_tuples(one, c, index, c.all_positives(), 1, 3, 0);
    EXPECT_TRUE(s.tuples.empty());
    EXPECT_EQ(s.skipped_slots, 2u);
    EXPECT_EQ(s.requested_slots, 2u);
}

TEST(FiveTuples, DeterministicPerSeedAndEpoch) {
    const Corpus c = small_corpus();
    const RelationIndex index = RelationIndex::from_training(c);
    const auto& pos = c.pairs(Split::train).pairs;
    const auto a = sample_five_tuples(pos, c, index, c.all_positives(), 2, 5, 3);
    const auto b = sample_five_tuples(pos, c, index, c.all_positives(), 2, 5, 3);
    EXPECT_EQ(a.tuples, b.tuples);
    bool differs = false;
    for (std::uint64_t e = 4; e < 10 && !differs; ++e)
        differs = sample_five_tuples(pos, c, index, c.all_positives(), 2, 5, e).tuples != a.tuples;
    EXPECT_TRUE(differs);
}

TEST(FiveTuples, NegativesNeverPositiveAndRelationsMatch) {
    const Corpus c = small_corpus();
    const RelationIndex index = RelationIndex::from_training(c);
    const auto& pos = c.pairs(Split::train).pairs;
    // Brute-force positive scan over every split.
    std::set<std::pair<std::size_t, std::size_t>> brute;
    for (Split s : kAllSplits)
        for (const ItemPair& p : c.pairs(s).pairs) {
            brute.insert({p.head, p.tail});
            brute.insert({p.tail, p.head});
        }
    std::size_t tail_side = 0, head_side = 0;
    for (std::uint64_t epoch = 0; epoch < 20; ++epoch) {
        const auto s = sample_five_tuples(pos, c, index, c.all_positives(), 3, 1, epoch);
        for (const FiveTuple& f : s.tuples) {
            const std::size_t fixed = f.side == CorruptSide::tail ? f.head : f.tail;
            const std::size_t replaced = f.side == CorruptSide::tail ? f.tail : f.head;
            EXPECT_FALSE(brute.contains({fixed, f.corrupted}));
            EXPECT_NE(f.corrupted, replaced);
            EXPECT_TRUE(index.complementary(c.item(fixed).category_id, c.item(f.corrupted).category_id));
            const RelationRef r =
                index.lookup(c.item(f.negative_head()).category_id, c.item(f.negative_tail()).category_id);
            EXPECT_EQ(r.row, f.corrupted_relation.row);
            EXPECT_EQ(r.sign, f.corrupted_relation.sign);
            (f.side == CorruptSide::tail ? tail_side : head_side)++;
        }
        EXPECT_EQ(s.requested_slots, pos.size() * 6);
    }
    EXPECT_EQ(tail_side, head_side);
}

TEST(FiveTuples, CorruptionMayCrossCategories) {
    // Fixing t0, the replacement can be a bottom or a shoe.
    const Corpus c = small_corpus();
    const RelationIndex index = RelationIndex::from_training(c);
    std::vector<ItemPair> one{c.pairs(Split::train).pairs[0]};
    std::set<std::string> seen;
    for (std::uint64_t e = 0; e < 50; ++e)
        for (const FiveTuple& f : sample_five_tuples(one, c, index, c.all_positives(), 1, 2, e).tuples)
            if (f.side == CorruptSide::tail) seen.insert(c.item(f.corrupted).category_id);
    EXPECT_EQ(seen, (std::set<std::string>{"b", "s"}));
}

TEST(FiveTuples, ZeroNegativesPerSideRejected) {
    const Corpus c = small_corpus();
    const RelationIndex index = RelationIndex::from_training(c);
    EXPECT_THROW(sample_five_tuples(c.pairs(Split::train).pairs, c, index, c.all_positives(), 0, 1, 0), ConfigError);
}

TEST(EvalCandidates, LargeCorpusGivesHundredAndOne) {
    TinyCorpus t({"t", "b"}, 150, 2);
    t.pair("t0", "b0").pair("t1", "b1").pair("t0", "b2", Split::test);
    const Corpus c = t.build();
    const RelationIndex index = RelationIndex::from_training(c);
    const CandidateSet cs = sample_eval_candidates(idx(c, "t0"), idx(c, "b2"), c, index, 100, EvalMode::open, 9);
    const auto all = cs.candidates();
    ASSERT_EQ(all.size(), 101u);
    EXPECT_EQ(cs.shortfall, 0u);
    EXPECT_EQ(std::count(all.begin(), all.end(), idx(c, "b2")), 1);
    EXPECT_EQ(all.front(), idx(c, "b2"));
    EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 101u);
    for (std::size_t n : cs.negatives) {
        EXPECT_NE(n, idx(c, "b0"));
        EXPECT_FALSE(c.all_positives().contains(idx(c, "t0"), n));
    }
}

TEST(EvalCandidates, KnownTargetStaysInGoldCategory) {
    const Corpus c = small_corpus();
    const RelationIndex index = RelationIndex::from_training(c);
    const CandidateSet cs =
        sample_eval_candidates(idx(c, "t4"), idx(c, "b4"), c, index, 5, EvalMode::known_target, 1);
    EXPECT_EQ(cs.negatives.size(), 5u);
    for (std::size_t n : cs.candidates()) EXPECT_EQ(c.item(n).category_id, "b");
}

TEST(EvalCandidates, OpenModeDrawsFromAllComplementaryCategories) {
    const Corpus c = small_corpus();
    const RelationIndex index = RelationIndex::from_training(c);
    // t5 is complementary to bottoms and shoes: 20 items minus gold s5.
    const CandidateSet cs = sample_eval_candidates(idx(c, "t5"), idx(c, "s5"), c, index, 100, EvalMode::open, 1);
    EXPECT_EQ(cs.negatives.size(), 19u);
    EXPECT_EQ(cs.shortfall, 81u);
    std::set<std::string> cats;
    for (std::size_t n : cs.negatives) cats.insert(c.item(n).category_id);
    EXPECT_EQ(cats, (std::set<std::string>{"b", "s"}));
}

TEST(EvalCandidates, ShortfallWhenFewEligible) {
    TinyCorpus t({"t", "b"}, 41, 2);
    t.pair("t0", "b0").pair("t1", "b1", Split::test);
    const Corpus c = t.build();
    const RelationIndex index = RelationIndex::from_training(c);
    const CandidateSet cs = sample_eval_candidates(idx(c, "t1"), idx(c, "b1"), c, index, 100, EvalMode::open, 4);
    EXPECT_EQ(cs.candidates().size(), 41u);
    EXPECT_EQ(cs.shortfall, 60u);
}

TEST(EvalCandidates, FrozenPerQueryAndSeed) {
    const Corpus c = small_corpus();
    const RelationIndex index = RelationIndex::from_training(c);
    const auto a = sample_eval_candidates(idx(c, "t4"), idx(c, "b4"), c, index, 6, EvalMode::open, 12);
    const auto b = sample_eval_candidates(idx(c, "t4"), idx(c, "b4"), c, index, 6, EvalMode::open, 12);
    EXPECT_EQ(a, b);
    EXPECT_THROW(sample_eval_candidates(idx(c, "t4"), idx(c, "b4"), c, index, 0, EvalMode::open, 12), ConfigError);
}

TEST(EvalCandidates, FileRoundTrip) {
    const Corpus c = small_corpus();
    const RelationIndex index = RelationIndex::from_training(c);
    std::vector<CandidateSet> sets{
        sample_eval_candidates(idx(c, "t4"), idx(c, "b4"), c, index, 6, EvalMode::open, 12),
        sample_eval_candidates(idx(c, "t5"), idx(c, "s5"), c, index, 3, EvalMode::known_target, 12)};
    TempDir d;
    write_candidate_file(d / "cands.jsonl", c, sets);
    const auto back = read_candidate_file(d / "cands.jsonl", c);
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back[i].query, sets[i].query);
        EXPECT_EQ(back[i].gold, sets[i].gold);
        EXPECT_EQ(back[i].negatives, sets[i].negatives);
    }
    testing_util::write_file(d / "bad.jsonl", "{\"query_id\":\"t4\",\"gold_id\":\"nope\",\"negative_ids\":[]}\n");
    try {
        read_candidate_file(d / "bad.jsonl", c);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find(":1"), std::string::npos);
    }
}
