#include "imea/encoder.hpp"

#include <cmath>

namespace imea {

void validate_shape(const ModelShape& s) {
    if (s.dim <= 0 || s.layers < 0 || s.heads <= 0 || s.ffn <= 0) throw Error("model sizes must be positive");
    if (s.dim % s.heads != 0) {
        throw Error("dim " + std::to_string(s.dim) + " is not divisible by heads " + std::to_string(s.heads));
    }
    if (s.num_entities <= 0) throw Error("model needs at least one entity");
    if (s.num_relations < 0) throw Error("negative relation count");
}

namespace {

Parameter zeros(std::string name, Eigen::Index rows, Eigen::Index cols) {
    return Parameter(std::move(name), Matrix::Zero(rows, cols));
}

Parameter ones(std::string name, Eigen::Index cols) { return Parameter(std::move(name), Matrix::Ones(1, cols)); }

void xavier(Parameter& p, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = u(rng);
}

template <typename P, typename Fn>
void for_each_param(P& store, auto& encoder, Fn&& fn) {
    fn(store.entity);
    fn(store.relation);
    fn(store.mask);
    for (auto& l : encoder.layers) {
        for (auto* p : {&l.ln1_scale, &l.ln1_shift, &l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo,
                        &l.ln2_scale, &l.ln2_shift, &l.w1, &l.b1, &l.w2, &l.b2}) {
            fn(*p);
        }
    }
    fn(encoder.final_scale);
    fn(encoder.final_shift);
}

}  // namespace

Model::Model(const ModelShape& shape) : shape_(shape) {
    validate_shape(shape);
    const int d = shape.dim, f = shape.ffn;
    store.entity = zeros("entity_emb", shape.num_entities, d);
    store.relation = zeros("relation_emb", shape.num_relations, d);
    store.mask = zeros("mask_emb", 1, d);
    for (int i = 0; i < shape.layers; ++i) {
        const std::string p = "layer" + std::to_string(i) + ".";
        LayerParams l;
        l.ln1_scale = ones(p + "ln1_scale", d);
        l.ln1_shift = zeros(p + "ln1_shift", 1, d);
        l.wq = zeros(p + "wq", d, d);
        l.bq = zeros(p + "bq", 1, d);
        l.wk = zeros(p + "wk", d, d);
        l.bk = zeros(p + "bk", 1, d);
        l.wv = zeros(p + "wv", d, d);
        l.bv = zeros(p + "bv", 1, d);
        l.wo = zeros(p + "wo", d, d);
        l.bo = zeros(p + "bo", 1, d);
        l.ln2_scale = ones(p + "ln2_scale", d);
        l.ln2_shift = zeros(p + "ln2_shift", 1, d);
        l.w1 = zeros(p + "w1", d, f);
        l.b1 = zeros(p + "b1", 1, f);
        l.w2 = zeros(p + "w2", f, d);
        l.b2 = zeros(p + "b2", 1, d);
        encoder.layers.push_back(std::move(l));
    }
    encoder.final_scale = ones("final_scale", d);
    encoder.final_shift = zeros("final_shift", 1, d);
}

Model::Model(const ModelShape& shape, Rng& rng) : Model(shape) {
    xavier(store.entity, rng);
    xavier(store.relation, rng);
    xavier(store.mask, rng);
    for (auto& l : encoder.layers) {
        for (auto* p : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.w2}) xavier(*p, rng);
    }
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    for_each_param(store, encoder, [&](Parameter& p) { out.push_back(&p); });
    return out;
}

std::vector<const Parameter*> Model::parameters() const {
    std::vector<const Parameter*> out;
    for_each_param(store, encoder, [&](const Parameter& p) { out.push_back(&p); });
    return out;
}

void Model::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

namespace {

template <typename M, typename Leaf>
BoundModel bind_with(ag::Tape& tape, M& model, Leaf&& leaf) {
    BoundModel b;
    b.entity = leaf(tape, model.store.entity);
    b.relation = leaf(tape, model.store.relation);
    b.mask = leaf(tape, model.store.mask);
    for (auto& l : model.encoder.layers) {
        BoundModel::Layer bl;
        bl.ln1_scale = leaf(tape, l.ln1_scale);
        bl.ln1_shift = leaf(tape, l.ln1_shift);
        bl.wq = leaf(tape, l.wq);
        bl.bq = leaf(tape, l.bq);
        bl.wk = leaf(tape, l.wk);
        bl.bk = leaf(tape, l.bk);
        bl.wv = leaf(tape, l.wv);
        bl.bv = leaf(tape, l.bv);
        bl.wo = leaf(tape, l.wo);
        bl.bo = leaf(tape, l.bo);
        bl.ln2_scale = leaf(tape, l.ln2_scale);
        bl.ln2_shift = leaf(tape, l.ln2_shift);
        bl.w1 = leaf(tape, l.w1);
        bl.b1 = leaf(tape, l.b1);
        bl.w2 = leaf(tape, l.w2);
        bl.b2 = leaf(tape, l.b2);
        b.layers.push_back(bl);
    }
    b.final_scale = leaf(tape, model.encoder.final_scale);
    b.final_shift = leaf(tape, model.encoder.final_shift);
    b.heads = model.shape().heads;
    b.mask_token = model.mask_token();
    return b;
}

}  // namespace

BoundModel bind(ag::Tape& tape, Model& model) {
    return bind_with(tape, model, [](ag::Tape& t, Parameter& p) { return t.param(p); });
}

BoundModel bind_constant(ag::Tape& tape, const Model& model) {
    return bind_with(tape, model, [](ag::Tape& t, const Parameter& p) { return t.constant(p.value); });
}

Matrix positional_encoding(int length, int dim) {
    Matrix pe(length, dim);
    for (int pos = 0; pos < length; ++pos) {
        for (int i = 0; i < dim; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
            pe(pos, i) = (i % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
        }
    }
    return pe;
}

ag::Var encode(const BoundModel& m, std::span<const EntityId> tokens, int seq_len, bool positional) {
    if (seq_len <= 0 || tokens.size() % static_cast<std::size_t>(seq_len) != 0) {
        throw Error("token count is not a multiple of the sequence length");
    }
    ag::Var x = ag::embed(m.entity, m.mask, tokens, m.mask_token);
    if (positional) {
        const auto pe = positional_encoding(seq_len, static_cast<int>(x.cols()));
        Matrix offset(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) offset.row(r) = pe.row(r % seq_len);
        x = ag::add_constant(x, offset);
    }
    for (const auto& l : m.layers) {
        ag::Var h = ag::layer_norm(x, l.ln1_scale, l.ln1_shift);
        ag::Var q = ag::add_row(ag::matmul(h, l.wq), l.bq);
        ag::Var k = ag::add_row(ag::matmul(h, l.wk), l.bk);
        ag::Var v = ag::add_row(ag::matmul(h, l.wv), l.bv);
        ag::Var a = ag::attention(q, k, v, m.heads, seq_len);
        x = ag::add(x, ag::add_row(ag::matmul(a, l.wo), l.bo));

        h = ag::layer_norm(x, l.ln2_scale, l.ln2_shift);
        h = ag::gelu(ag::add_row(ag::matmul(h, l.w1), l.b1));
        x = ag::add(x, ag::add_row(ag::matmul(h, l.w2), l.b2));
    }
    return ag::layer_norm(x, m.final_scale, m.final_shift);
}

Matrix encode(const Model& model, std::span<const EntityId> tokens, bool positional) {
    ag::Tape tape;
    auto bound = bind_constant(tape, model);
    return encode(bound, tokens, static_cast<int>(tokens.size()), positional).value();
}

RowVector neighborhood_context(const Matrix& outputs) {
    if (outputs.rows() == 0) throw Error("cannot pool an empty sequence");
    return outputs.colwise().mean();
}

PredictionDistribution predict_distribution(const RowVector& context, const EmbeddingStore& store,
                                            Normalization norm) {
    Matrix logits = context * store.entity.value.transpose();
    PredictionDistribution out;
    out.probs = ag::normalize_rows(logits, norm).row(0);
    out.context = context;
    return out;
}

double relation_translation_error(const EmbeddingStore& store, const Triple& t) {
    const auto n = store.entity.value.rows();
    if (t.subject < 0 || t.subject >= n || t.object < 0 || t.object >= n || t.relation < 0 ||
        t.relation >= store.relation.value.rows()) {
        throw LookupError("triple id out of range");
    }
    return (store.entity.value.row(t.subject) + store.relation.value.row(t.relation) -
            store.entity.value.row(t.object))
        .norm();
}

}  // namespace imea
