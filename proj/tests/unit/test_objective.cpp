#include <gtest/gtest.h>

#include "gradient_check.hpp"
#include "test_util.hpp"

using namespace tnfcm;
using testing_util::check_batch_gradient;
using testing_util::make_tiny_instance;

namespace {

const ModelKind kAllKinds[] = {ModelKind::transnfcm, ModelKind::trinet, ModelKind::sianet, ModelKind::bpr,
                               ModelKind::csn};

}  // namespace

class GradientAllKinds : public ::testing::TestWithParam<ModelKind> {};

TEST_P(GradientAllKinds, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto inst = make_tiny_instance(GetParam(), seed);
        ASSERT_FALSE(inst.tuples.empty());
        const DropoutPlan plan{0.5, seed, 0, 0};
        const auto r = check_batch_gradient(inst.model, inst.corpus, inst.tuples, plan);
        EXPECT_LE(r.max_relative_error, 1e-4) << kind_name(GetParam()) << " seed " << seed;
        EXPECT_LT(r.skipped, r.coordinates);
    }
}

INSTANTIATE_TEST_SUITE_P(Kinds, GradientAllKinds, ::testing::ValuesIn(kAllKinds),
                         [](const auto& info) { return std::string(kind_name(info.param)); });

TEST(Gradient, TwoModalitiesAndHiddenLayer) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto inst = make_tiny_instance(ModelKind::transnfcm, 100 + seed, 5, 6, 4, 7, 2);
        const DropoutPlan plan{0.5, seed, 1, 2};
        const auto r = check_batch_gradient(inst.model, inst.corpus, inst.tuples, plan);
        EXPECT_LE(r.max_relative_error, 1e-4) << "seed " << seed;
    }
}

TEST(Gradient, UntiedRelations) {
    auto inst = make_tiny_instance(ModelKind::transnfcm, 7);
    TrainConfig cfg = inst.model.config;
    cfg.untied_directions = true;
    Model m = initialize_model(inst.corpus, cfg);
    m.params.encoders = inst.model.params.encoders;
    const auto sample = sample_five_tuples(inst.corpus.pairs(Split::train).pairs, inst.corpus, m.index,
                                           inst.corpus.all_positives(), 1, 7, 0);
    const auto r = check_batch_gradient(m, inst.corpus, sample.tuples, DropoutPlan{});
    EXPECT_LE(r.max_relative_error, 1e-4);
}

TEST(Objective, TransnfcmWithZeroRelationsEqualsTrinet) {
    auto t = make_tiny_instance(ModelKind::transnfcm, 3);
    Model tri = t.model;
    tri.config.kind = ModelKind::trinet;
    tri.params.relations = Matrix();
    t.model.params.relations.fill(0.0);
    const DropoutPlan plan{0.5, 3, 0, 0};
    EXPECT_EQ(batch_objective(t.model, t.corpus, t.tuples, plan, nullptr).loss,
              batch_objective(tri, t.corpus, t.tuples, plan, nullptr).loss);
}

TEST(Objective, CsnL1PenaltyAdded) {
    auto inst = make_tiny_instance(ModelKind::csn, 5);
    const DropoutPlan plan{};
    const double with = batch_objective(inst.model, inst.corpus, inst.tuples, plan, nullptr).loss;
    double l1 = 0.0;
    for (double w : inst.model.params.masks.flat()) l1 += std::abs(w);
    inst.model.config.csn_l1 = 0.0;
    const double without = batch_objective(inst.model, inst.corpus, inst.tuples, plan, nullptr).loss;
    EXPECT_NEAR(with - without, 5e-4 * l1, 1e-12);
}

TEST(Objective, SatisfiedHingeHasNoGradient) {
    auto inst = make_tiny_instance(ModelKind::transnfcm, 11);
    const DropoutPlan plan{};
    Parameters grad = inst.model.params.zeros_like();
    inst.model.config.margin = -100.0;
    const auto r = batch_objective(inst.model, inst.corpus, inst.tuples, plan, &grad);
    EXPECT_EQ(r.active, 0u);
    EXPECT_EQ(r.loss, 0.0);
    for (const auto& t : tensors(grad))
        for (double v : t.values) EXPECT_EQ(v, 0.0);
}

TEST(Objective, TupleGradientsClosedForm) {
    // x=(0,0), r=(1,0), y=(1,0): d+ = 0; corrupted tail y'=(0,1): d- = 2.
    const FiveTuple t{0, 1, {0, 1.0, 0}, 2, {0, 1.0, 0}, CorruptSide::tail};
    const std::vector<double> x{0, 0}, y{1, 0}, c{0, 1}, r{1, 0};
    const auto inactive = tuple_gradients(t, x, y, c, r, r, 1.0);
    EXPECT_FALSE(inactive.active);
    EXPECT_EQ(inactive.loss, 0.0);
    const auto g = tuple_gradients(t, x, y, c, r, r, 3.0);
    EXPECT_TRUE(g.active);
    EXPECT_DOUBLE_EQ(g.loss, 1.0);
    // delta- = 2 (x + r - y') = (2, -2)
    EXPECT_EQ(g.head, (std::vector<double>{-2, 2}));
    EXPECT_EQ(g.tail, (std::vector<double>{0, 0}));
    EXPECT_EQ(g.corrupted, (std::vector<double>{2, -2}));
    // Both sides share one stored row: +0 from d+, -(2,-2) from d-.
    EXPECT_EQ(g.corrupted_relation, (std::vector<double>{-2, 2}));
    EXPECT_EQ(g.relation, (std::vector<double>{0, 0}));
}

TEST(Objective, EmptyBatch) {
    auto inst = make_tiny_instance(ModelKind::transnfcm, 1);
    const auto r = batch_objective(inst.model, inst.corpus, {}, DropoutPlan{}, nullptr);
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_EQ(r.tuples, 0u);
}

TEST(Objective, ExactTranslationZeroesPositiveSide) {
    // x + r = y; corrupted tail y' close to x + r keeps the hinge active.
    const FiveTuple t{0, 1, {0, 1.0, 0}, 2, {1, -1.0, 1}, CorruptSide::tail};
    const std::vector<double> x{0.25, 0.125}, y{0.75, -0.125}, c{0.5, 0.25};
    const std::vector<double> r{0.5, -0.25}, r2{0.125, 0.125};
    const auto g = tuple_gradients(t, x, y, c, r, r2, 1.0);
    ASSERT_TRUE(g.active);
    EXPECT_EQ(g.relation, (std::vector<double>{0, 0}));
    EXPECT_EQ(g.tail, (std::vector<double>{0, 0}));
    // delta- = 2 (x - r2 - c) with the stored row flipped by sign -1.
    const std::vector<double> q{2 * (0.25 - 0.125 - 0.5), 2 * (0.125 - 0.125 - 0.25)};
    EXPECT_EQ(g.head, (std::vector<double>{-q[0], -q[1]}));
    EXPECT_EQ(g.corrupted, q);
    EXPECT_EQ(g.corrupted_relation, q);  // -sign * delta-
}

TEST(Objective, HingeWithinLossBound) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto inst = make_tiny_instance(ModelKind::transnfcm, seed, 4, 6, 1);
        const auto& t = inst.tuples[0];
        const auto loss = batch_objective(inst.model, inst.corpus, inst.tuples, DropoutPlan{}, nullptr).loss;
        const auto x = inst.model.embed(inst.corpus, t.head), y = inst.model.embed(inst.corpus, t.tail);
        std::vector<double> r(inst.model.params.relations.row(t.relation.row).begin(),
                              inst.model.params.relations.row(t.relation.row).end());
        for (double& v : r) v *= t.relation.sign;
        EXPECT_GE(loss, 0.0);
        EXPECT_LE(loss, dist_transnfcm(x, y, r).total_distance + 1.0 + 1e-12);
    }
}
