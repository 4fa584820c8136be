#pragma once
// The shared multi-context Transformer encoder and its embedding tables.

#include <filesystem>
#include <span>
#include <vector>

#include "imea/autograd.hpp"
#include "imea/sampling.hpp"

namespace imea {

using ag::Matrix;
using ag::Parameter;
using ag::RowVector;

struct ModelShape {
    int dim = 256;
    int layers = 8;
    int heads = 8;
    int ffn = 1024;  // 4 * dim unless overridden
    int num_entities = 0;
    int num_relations = 0;
};

// Input-layer tables: entity embeddings h0, relation translation vectors and
// the [MASK] vector.
struct EmbeddingStore {
    Parameter entity;    // num_entities x dim
    Parameter relation;  // num_relations x dim
    Parameter mask;      // 1 x dim

    int dim() const { return static_cast<int>(entity.value.cols()); }
    int num_entities() const { return static_cast<int>(entity.value.rows()); }
};

struct LayerParams {
    Parameter ln1_scale, ln1_shift;
    Parameter wq, bq, wk, bk, wv, bv, wo, bo;
    Parameter ln2_scale, ln2_shift;
    Parameter w1, b1, w2, b2;
};

struct TransformerParams {
    std::vector<LayerParams> layers;
    Parameter final_scale, final_shift;
};

class Model {
public:
    Model() = default;
    // All-zero tensors of the right shapes.
    explicit Model(const ModelShape& shape);
    // Xavier-uniform matrices and embeddings, zero biases, unit layer-norm scales.
    Model(const ModelShape& shape, Rng& rng);

    const ModelShape& shape() const { return shape_; }
    // Token id reserved for [MASK]; one past the last entity.
    EntityId mask_token() const { return shape_.num_entities; }

    EmbeddingStore store;
    TransformerParams encoder;

    // Every trainable tensor, in a fixed order.
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    void zero_grad();

private:
    ModelShape shape_;
};

// Throws Error unless dim is divisible by heads and all sizes are positive.
void validate_shape(const ModelShape& shape);

// Model parameters as tape leaves.
struct BoundModel {
    struct Layer {
        ag::Var ln1_scale, ln1_shift, wq, bq, wk, bk, wv, bv, wo, bo, ln2_scale, ln2_shift, w1, b1, w2, b2;
    };
    ag::Var entity, relation, mask;
    std::vector<Layer> layers;
    ag::Var final_scale, final_shift;
    int heads = 1;
    EntityId mask_token = 0;
};

// Trainable binding: backward() accumulates into the model's gradients.
BoundModel bind(ag::Tape& tape, Model& model);
// Constant binding for evaluation.
BoundModel bind_constant(ag::Tape& tape, const Model& model);

// Sinusoidal position encodings, length x dim.
Matrix positional_encoding(int length, int dim);

// Encodes `tokens`, a concatenation of equal-length sequences of `seq_len`
// tokens each; attention never crosses sequence boundaries. Returns one row
// per token.
ag::Var encode(const BoundModel& m, std::span<const EntityId> tokens, int seq_len, bool positional);

// Single-sequence evaluation: one output row per token.
Matrix encode(const Model& model, std::span<const EntityId> tokens, bool positional);

// Arithmetic mean of the rows. Throws Error on empty input.
RowVector neighborhood_context(const Matrix& outputs);

using ag::Normalization;

struct PredictionDistribution {
    RowVector probs;    // over all entities of both KGs
    RowVector context;
};

// softmax(<context, h0_e>) over every entity; Normalization::linear divides
// raw inner products by their sum instead.
PredictionDistribution predict_distribution(const RowVector& context, const EmbeddingStore& store,
                                            Normalization norm = Normalization::softmax);

// || h0_s + r - h0_o ||_2
double relation_translation_error(const EmbeddingStore& store, const Triple& triple);

// Checkpoint: binary header and little-endian float32 tensors (model.ckpt),
// plus a URI sidecar (vocab.tsv) written next to it.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

void save_vocab(const AlignmentTask& task, const std::filesystem::path& path);
// Checks that the sidecar matches the task's URIs id for id.
void check_vocab(const AlignmentTask& task, const std::filesystem::path& path);

}  // namespace imea
