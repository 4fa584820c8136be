#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "oracles.hpp"

namespace imea {
namespace {

ModelShape small_shape(int entities = 12) { return {8, 2, 2, 32, entities, 3}; }

TEST(Encoder, PreservesSequenceLength) {
    Rng rng(1);
    const Model model(small_shape(), rng);
    for (int len = 1; len <= 16; ++len) {
        std::vector<EntityId> tokens(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) tokens[static_cast<std::size_t>(i)] = i % 12;
        for (bool pos : {false, true}) EXPECT_EQ(encode(model, tokens, pos).rows(), len);
    }
}

TEST(Encoder, PermutationEquivariantWithoutPositions) {
    Rng rng(2);
    const Model model(small_shape(), rng);
    const std::vector<EntityId> a = {3, 5, 7}, b = {7, 3, 5};
    const Matrix ha = encode(model, a, false), hb = encode(model, b, false);
    EXPECT_LT((ha.row(0) - hb.row(1)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((ha.row(1) - hb.row(2)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((ha.row(2) - hb.row(0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Encoder, PositionsBreakEquivariance) {
    Rng rng(3);
    const Model model(small_shape(), rng);
    const Matrix ha = encode(model, std::vector<EntityId>{3, 5}, true);
    const Matrix hb = encode(model, std::vector<EntityId>{5, 3}, true);
    EXPECT_GT((ha.row(0) - hb.row(1)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Encoder, PooledContextInvariantUnderPermutation) {
    Rng rng(4);
    const Model model(small_shape(), rng);
    std::vector<EntityId> tokens = {1, 4, 6, 9, 11};
    const RowVector base = neighborhood_context(encode(model, tokens, false));
    for (int i = 0; i < 20; ++i) {
        std::shuffle(tokens.begin(), tokens.end(), rng);
        const RowVector c = neighborhood_context(encode(model, tokens, false));
        EXPECT_LT((c - base).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(Encoder, MaskTokenAndRangeErrors) {
    Rng rng(5);
    const Model model(small_shape(), rng);
    EXPECT_EQ(encode(model, std::vector<EntityId>{model.mask_token(), 2}, true).rows(), 2);
    EXPECT_THROW(encode(model, std::vector<EntityId>{13}, false), LookupError);
    EXPECT_THROW(encode(model, std::vector<EntityId>{-1}, false), LookupError);
}

TEST(Encoder, DeterministicOutputs) {
    Rng a(6), b(6);
    const Model ma(small_shape(), a), mb(small_shape(), b);
    const std::vector<EntityId> t = {0, 2, 4, 6};
    EXPECT_EQ(encode(ma, t, true), encode(mb, t, true));
}

TEST(Encoder, InvalidShapeRejected) {
    EXPECT_THROW(validate_shape({10, 1, 3, 40, 5, 1}), Error);
    EXPECT_NO_THROW(validate_shape({12, 1, 3, 48, 5, 1}));
}

TEST(NeighborhoodContext, Examples) {
    EXPECT_EQ(neighborhood_context(Matrix{{1.0, 1.0}, {3.0, 3.0}}), (RowVector(2) << 2.0, 2.0).finished());
    EXPECT_EQ(neighborhood_context(Matrix{{0.5, -1.0}}), (RowVector(2) << 0.5, -1.0).finished());
    EXPECT_THROW(neighborhood_context(Matrix(0, 2)), Error);
}

EmbeddingStore store_of(const Matrix& entities, const Matrix& relations = Matrix::Zero(1, 2)) {
    EmbeddingStore s;
    s.entity = Parameter("entity", entities);
    s.relation = Parameter("relation", relations);
    s.mask = Parameter("mask", Matrix::Zero(1, entities.cols()));
    return s;
}

TEST(PredictDistribution, WorkedExample) {
    const auto store = store_of(Matrix{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}});
    const auto p = predict_distribution((RowVector(2) << 1.0, 0.0).finished(), store);
    // exp(1), exp(0), exp(-1) normalized, evaluated by hand.
    EXPECT_NEAR(p.probs(0), 0.6652, 5e-5);
    EXPECT_NEAR(p.probs(1), 0.2447, 5e-5);
    EXPECT_NEAR(p.probs(2), 0.0900, 5e-5);
    EXPECT_NEAR(p.probs.sum(), 1.0, 1e-12);
}

TEST(PredictDistribution, UniformWhenEmbeddingsEqual) {
    const auto store = store_of(Matrix::Constant(4, 3, 0.7));
    const auto p = predict_distribution((RowVector(3) << 5.0, -2.0, 1.0).finished(), store);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(p.probs(i), 0.25, 1e-12);
}

TEST(PredictDistribution, SumsToOneAndPositive) {
    Rng rng(7);
    const Model model(small_shape(), rng);
    std::normal_distribution<double> g(0.0, 30.0);
    for (int t = 0; t < 50; ++t) {
        RowVector c(8);
        for (int i = 0; i < 8; ++i) c(i) = g(rng);
        const auto p = predict_distribution(c, model.store);
        EXPECT_NEAR(p.probs.sum(), 1.0, 1e-6);
        EXPECT_TRUE((p.probs.array() >= 0.0).all());
        EXPECT_TRUE(p.probs.allFinite());
    }
}

TEST(RelationTranslation, Examples) {
    const auto exact = store_of(Matrix{{1.0, 0.0}, {1.0, 1.0}}, Matrix{{0.0, 1.0}});
    EXPECT_EQ(relation_translation_error(exact, {0, 0, 1}), 0.0);
    const auto five = store_of(Matrix{{0.0, 0.0}, {3.0, 4.0}}, Matrix{{0.0, 0.0}});
    EXPECT_DOUBLE_EQ(relation_translation_error(five, {0, 0, 1}), 5.0);
    EXPECT_THROW(relation_translation_error(five, {0, 0, 9}), LookupError);
}

TEST(Checkpoint, RoundTripsAtFloatPrecision) {
    Rng rng(8);
    const Model model(small_shape(), rng);
    const auto path = std::filesystem::temp_directory_path() / "imea_ckpt_test.ckpt";
    save_checkpoint(model, path);
    const Model back = load_checkpoint(path);
    EXPECT_EQ(back.shape().dim, 8);
    EXPECT_EQ(back.shape().num_entities, 12);
    const auto a = model.parameters();
    const auto b = back.parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i]->name, b[i]->name);
        EXPECT_EQ(a[i]->value.cast<float>().cast<double>(), b[i]->value) << a[i]->name;
    }
}

TEST(Checkpoint, RejectsGarbage) {
    const auto path = std::filesystem::temp_directory_path() / "imea_ckpt_garbage.ckpt";
    std::ofstream(path) << "not a checkpoint";
    EXPECT_THROW(load_checkpoint(path), LoadError);
    EXPECT_THROW(load_checkpoint(path.string() + ".missing"), LoadError);
}

TEST(Checkpoint, VocabSidecarMustMatch) {
    const auto task = oracle::toy_task();
    const auto path = std::filesystem::temp_directory_path() / "imea_vocab_test.tsv";
    save_vocab(task, path);
    EXPECT_NO_THROW(check_vocab(task, path));
    auto other = task;
    other.entity_uris[3] = "changed";
    EXPECT_THROW(check_vocab(other, path), Error);
}

}  // namespace
}  // namespace imea
