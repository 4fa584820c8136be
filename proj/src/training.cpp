#include "imea/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "imea/evaluation.hpp"

namespace imea {

void TrainConfig::validate() const {
    if (!(lr >= 0.0)) throw Error("lr must be non-negative");
    if (!(soft_label_s > 0.0 && soft_label_s <= 1.0)) throw Error("soft_label_s must be in (0, 1]");
    if (holistic_start < 1) throw Error("holistic_start must be at least 1");
    if (batch_size == 0) throw Error("batch_size must be positive");
    if (n_neighbors == 0) throw Error("n_neighbors must be positive");
    if (path_len < 2) throw Error("path_len must be at least 2");
    if (epochs < 0) throw Error("epochs must be non-negative");
    if (!(swap_prob >= 0.0 && swap_prob <= 1.0)) throw Error("swap_prob must be in [0, 1]");
    if (informer.topk == 0) throw Error("topk must be positive");
    if (eval_every < 1) throw Error("eval_every must be positive");
    if (dim <= 0 || heads <= 0 || dim % heads != 0) throw Error("dim must be a positive multiple of heads");
}

ModelShape TrainConfig::shape(const AlignmentTask& task) const {
    ModelShape s;
    s.dim = dim;
    s.layers = layers;
    s.heads = heads;
    s.ffn = ffn > 0 ? ffn : 4 * dim;
    s.num_entities = static_cast<int>(task.num_entities());
    s.num_relations = static_cast<int>(task.num_relations());
    return s;
}

LabelFn plain_labels(std::size_t vocab_size, double s) {
    return [vocab_size, s](EntityId target) { return smooth_label(target, vocab_size, s); };
}

namespace {

// Output-layer logits and matching dense targets, over either the full
// vocabulary or a sampled candidate set.
ag::Var prediction_loss(const BoundModel& m, ag::Var context, const std::vector<std::vector<SoftLabelVector>>& labels,
                        const LossOptions& options) {
    const auto batch = static_cast<Eigen::Index>(labels.size());
    const auto vocab = m.entity.rows();
    ag::Var logits;
    Matrix targets;
    if (options.negatives == 0) {
        logits = ag::matmul_nt(context, m.entity);
        targets = Matrix::Zero(batch, vocab);
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (const auto& q : labels[static_cast<std::size_t>(b)]) q.add_to(targets.row(b));
        }
    } else {
        if (options.rng == nullptr) throw Error("sampled softmax needs a random stream");
        std::vector<EntityId> cols;
        for (const auto& row : labels) {
            for (const auto& q : row) {
                for (const auto& [e, mass] : q.entries()) {
                    if (mass > 0.0) cols.push_back(e);
                }
            }
        }
        std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(vocab - 1));
        for (std::size_t i = 0; i < options.negatives; ++i) cols.push_back(pick(*options.rng));
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        std::vector<int> idx(cols.begin(), cols.end());
        logits = ag::matmul_nt(context, ag::select_rows(m.entity, idx));
        targets = Matrix::Zero(batch, static_cast<Eigen::Index>(cols.size()));
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (const auto& q : labels[static_cast<std::size_t>(b)]) {
                ag::RowVector row = ag::RowVector::Zero(static_cast<Eigen::Index>(cols.size()));
                q.add_to(row, cols);
                targets.row(b) += row / row.sum();
            }
        }
    }
    return ag::scale(ag::cross_entropy(logits, targets, options.normalization), 1.0 / static_cast<double>(batch));
}

}  // namespace

ag::Var neighbor_loss(const BoundModel& m, std::span<const NeighborSample> batch, const LabelFn& labels,
                      const LossOptions& options) {
    if (batch.empty()) throw Error("empty neighbor batch");
    const auto n = batch.front().neighbors.size();
    std::vector<EntityId> tokens;
    std::vector<std::vector<SoftLabelVector>> targets;
    tokens.reserve(batch.size() * n);
    for (const auto& s : batch) {
        if (s.neighbors.size() != n) throw Error("neighbor samples in a batch must have equal size");
        tokens.insert(tokens.end(), s.neighbors.begin(), s.neighbors.end());
        targets.push_back({labels(s.center)});
    }
    const int len = static_cast<int>(n);
    ag::Var context = ag::block_mean(encode(m, tokens, len, false), len);
    return prediction_loss(m, context, targets, options);
}

ag::Var path_loss(const BoundModel& m, std::span<const PathSample> batch, const LabelFn& labels,
                  const LossOptions& options) {
    if (batch.empty()) throw Error("empty path batch");
    const auto len = batch.front().tokens.size();
    std::vector<EntityId> tokens;
    std::vector<int> mask_rows;
    std::vector<std::vector<SoftLabelVector>> targets;
    tokens.reserve(batch.size() * len);
    for (const auto& s : batch) {
        if (s.tokens.size() != len) throw Error("path samples in a batch must have equal length");
        const auto offset = tokens.size();
        tokens.insert(tokens.end(), s.tokens.begin(), s.tokens.end());
        tokens[offset + s.mask_pos] = m.mask_token;
        mask_rows.push_back(static_cast<int>(offset + s.mask_pos));
        std::vector<SoftLabelVector> row;
        for (EntityId l : s.labels) row.push_back(labels(l));
        targets.push_back(std::move(row));
    }
    ag::Var h = encode(m, tokens, static_cast<int>(len), true);
    return prediction_loss(m, ag::select_rows(h, mask_rows), targets, options);
}

ag::Var relation_loss(const BoundModel& m, std::span<const Triple> batch) {
    if (batch.empty()) throw Error("empty triple batch");
    std::vector<int> s, r, o;
    for (const auto& t : batch) {
        s.push_back(t.subject);
        r.push_back(t.relation);
        o.push_back(t.object);
    }
    ag::Var diff = ag::sub(ag::add(ag::select_rows(m.entity, s), ag::select_rows(m.relation, r)),
                           ag::select_rows(m.entity, o));
    return ag::mean(ag::row_norm(diff));
}

double loss_neighbor(const Model& model, std::span<const NeighborSample> batch, const LabelFn& labels,
                     const LossOptions& options) {
    ag::Tape tape;
    return neighbor_loss(bind_constant(tape, model), batch, labels, options).scalar();
}

double loss_path(const Model& model, std::span<const PathSample> batch, const LabelFn& labels,
                 const LossOptions& options) {
    ag::Tape tape;
    return path_loss(bind_constant(tape, model), batch, labels, options).scalar();
}

double loss_relation(const Model& model, std::span<const Triple> batch) {
    ag::Tape tape;
    return relation_loss(bind_constant(tape, model), batch).scalar();
}

double cross_entropy(std::span<const double> q, std::span<const double> p) {
    if (q.size() != p.size()) throw Error("cross_entropy: size mismatch");
    double ce = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] != 0.0) ce -= q[i] * std::log(p[i]);
    }
    return ce;
}

void Adam::step(const std::vector<Parameter*>& params, double lr) {
    if (m_.empty()) {
        for (const auto* p : params) {
            m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
    }
    if (m_.size() != params.size()) throw Error("optimizer bound to a different parameter set");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

Trainer::Trainer(const AlignmentTask& task, TrainConfig config)
    : Trainer(task, config, [&] {
          config.validate();
          Rng init(config.seed);
          return Model(config.shape(task), init);
      }()) {}

Trainer::Trainer(const AlignmentTask& task, TrainConfig config, Model model)
    : task_(task),
      config_(std::move(config)),
      model_(std::move(model)),
      adam_(config_.beta1, config_.beta2, config_.adam_eps),
      rng_(config_.seed + 1),
      seeds_(task.seed) {
    config_.validate();
    if (model_.shape().num_entities != static_cast<int>(task.num_entities()) ||
        model_.shape().num_relations != static_cast<int>(task.num_relations())) {
        throw Error("model vocabulary does not match the task");
    }
    for (const auto* kg : {&task.source, &task.target}) {
        for (EntityId e = kg->entities().begin; e < kg->entities().end; ++e) {
            if (kg->degree(e) > 0) {
                trainable_centers_.push_back(e);
            } else {
                ++isolated_;
            }
        }
    }
}

LabelFn Trainer::labels() const {
    const auto vocab = task_.num_entities();
    const double s = config_.soft_label_s;
    const EvidenceStore* evidence = (config_.informed && evidence_.size() > 0) ? &evidence_ : nullptr;
    return [vocab, s, evidence](EntityId target) {
        auto base = smooth_label(target, vocab, s);
        if (evidence != nullptr) base = edit_soft_labels(std::move(base), target, evidence->for_entity(target));
        return base;
    };
}

namespace {

void center_entity_embeddings(const AlignmentTask& task, EmbeddingStore& store) {
    for (const auto* kg : {&task.source, &task.target}) {
        const IdRange r = kg->entities();
        auto rows = store.entity.value.middleRows(r.begin, r.size());
        const RowVector mean = rows.colwise().mean();
        rows.rowwise() -= mean;
    }
}

template <typename T>
std::vector<std::span<const T>> chunk(const std::vector<T>& items, std::size_t size) {
    std::vector<std::span<const T>> out;
    for (std::size_t i = 0; i < items.size(); i += size) {
        out.emplace_back(items.data() + i, std::min(size, items.size() - i));
    }
    return out;
}

}  // namespace

EpochStats Trainer::train_epoch() {
    const Model snapshot = model_;
    const Adam adam_snapshot = adam_;
    EpochStats stats;
    stats.epoch = epoch_ + 1;

    if (config_.informed && stats.epoch >= config_.holistic_start && epoch_ >= 1) {
        evidence_ = informing_round(task_, model_.store, config_.informer);
    }
    stats.positive_evidence = evidence_.positives();
    stats.negative_evidence = evidence_.negatives();
    const LabelFn labels = this->labels();

    std::vector<NeighborSample> neighbors;
    for (std::size_t rep = 0; rep < config_.neighbor_samples; ++rep) {
        for (EntityId e : trainable_centers_) {
            neighbors.push_back(sample_neighbors(task_.kg_of(e), e, config_.n_neighbors, rng_));
        }
    }
    std::shuffle(neighbors.begin(), neighbors.end(), rng_);

    WalkOptions walk;
    walk.length = config_.path_len;
    walk.walks_per_entity = config_.walks_per_entity;
    walk.swap_prob = config_.swap_prob;
    walk.inverse_edges = config_.inverse_walks;
    std::vector<PathSample> paths;
    for (auto& p : generate_paths(task_, seeds_, walk, rng_)) paths.push_back(mask_path(std::move(p), seeds_, rng_));
    std::shuffle(paths.begin(), paths.end(), rng_);

    std::vector<Triple> triples = task_.source.triples();
    triples.insert(triples.end(), task_.target.triples().begin(), task_.target.triples().end());
    std::shuffle(triples.begin(), triples.end(), rng_);

    const auto nb = chunk(neighbors, config_.batch_size);
    const auto pb = chunk(paths, config_.batch_size);
    const auto rb = chunk(triples, config_.batch_size);

    LossOptions options{config_.normalization, config_.negatives, &rng_};
    auto params = model_.parameters();
    double sums[3] = {0.0, 0.0, 0.0};
    std::size_t counts[3] = {0, 0, 0};

    auto run = [&](int kind, std::size_t n, auto&& build) {
        model_.zero_grad();
        ag::Tape tape;
        const BoundModel bound = bind(tape, model_);
        ag::Var loss = build(bound);
        const double value = loss.scalar();
        if (!std::isfinite(value)) {
            model_ = snapshot;
            adam_ = adam_snapshot;
            throw TrainingError("loss diverged in epoch " + std::to_string(stats.epoch));
        }
        try {
            tape.backward(kind == 2 ? ag::scale(loss, config_.lambda_rel) : loss);
        } catch (const ag::GradientError& e) {
            model_ = snapshot;
            adam_ = adam_snapshot;
            throw TrainingError(std::string("training diverged: ") + e.what());
        }
        adam_.step(params, config_.lr);
        if (config_.center_embeddings) center_entity_embeddings(task_, model_.store);
        sums[kind] += value * static_cast<double>(n);
        counts[kind] += n;
    };

    const std::size_t rounds = std::max({nb.size(), pb.size(), rb.size()});
    for (std::size_t i = 0; i < rounds; ++i) {
        if (i < nb.size()) {
            run(0, nb[i].size(), [&](const BoundModel& m) { return neighbor_loss(m, nb[i], labels, options); });
        }
        if (i < pb.size()) {
            run(1, pb[i].size(), [&](const BoundModel& m) { return path_loss(m, pb[i], labels, options); });
        }
        if (i < rb.size()) {
            run(2, rb[i].size(), [&](const BoundModel& m) { return relation_loss(m, rb[i]); });
        }
    }

    auto avg = [&](int k) { return counts[k] ? sums[k] / static_cast<double>(counts[k]) : 0.0; };
    stats.neighbor = avg(0);
    stats.path = avg(1);
    stats.relation = avg(2);
    ++epoch_;
    return stats;
}

std::vector<EpochStats> Trainer::fit(std::ostream* log) {
    std::vector<EpochStats> history;
    if (log != nullptr && isolated_ > 0) {
        *log << "warning: " << isolated_ << " isolated entities excluded from neighborhood training\n";
    }
    std::optional<Model> best;
    std::pair<double, double> best_score{-1.0, -1.0};
    int since_best = 0;
    for (int e = 0; e < config_.epochs; ++e) {
        auto stats = train_epoch();
        bool stop = false;
        if (!task_.valid.empty() && stats.epoch % config_.eval_every == 0) {
            const auto m = evaluate(model_.store, task_, task_.valid);
            stats.valid_hits1 = m.hits_at_1;
            // Hits@1 decides; MRR breaks ties.
            if (std::pair{m.hits_at_1, m.mrr} > best_score) {
                best_score = {m.hits_at_1, m.mrr};
                best = model_;
                since_best = 0;
            } else if (++since_best >= config_.patience) {
                stop = true;
            }
        }
        if (log != nullptr) *log << format_epoch(stats) << '\n' << std::flush;
        history.push_back(stats);
        if (stop) break;
    }
    if (best) model_ = std::move(*best);
    return history;
}

std::string format_epoch(const EpochStats& s) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(6) << "epoch\t" << s.epoch << "\tneighbor\t" << s.neighbor << "\tpath\t"
        << s.path << "\trelation\t" << s.relation << "\tvalid_hits1\t";
    if (s.valid_hits1) {
        out << *s.valid_hits1;
    } else {
        out << "-";
    }
    out << "\tevidence\t+" << s.positive_evidence << "/-" << s.negative_evidence;
    return out.str();
}

}  // namespace imea
