#pragma once
// Losses, optimizer and the epoch schedule for the multi-context encoder.

#include <functional>
#include <optional>
#include <ostream>
#include <span>

#include "imea/encoder.hpp"
#include "imea/informer.hpp"
#include "imea/labels.hpp"

namespace imea {

struct TrainingError : Error {
    using Error::Error;
};

struct TrainConfig {
    // encoder shape
    int dim = 256;
    int layers = 8;
    int heads = 8;
    int ffn = 0;  // 0 means 4 * dim

    // sampling
    std::size_t n_neighbors = 3;
    std::size_t neighbor_samples = 1;  // neighbor sets drawn per entity per epoch
    std::size_t path_len = 5;
    std::size_t walks_per_entity = 5;
    double swap_prob = 0.5;
    bool inverse_walks = false;

    // optimization
    std::size_t batch_size = 4096;
    double lr = 1e-4;
    int epochs = 100;
    double soft_label_s = 0.6;
    double lambda_rel = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    Normalization normalization = Normalization::softmax;
    std::size_t negatives = 0;  // > 0 switches to a sampled-candidate softmax
    std::uint64_t seed = 42;
    // Subtract each KG's mean entity embedding after every update.
    bool center_embeddings = false;

    // informing
    bool informed = true;
    int holistic_start = 2;
    InformerConfig informer;

    // early stopping on validation Hits@1
    int eval_every = 1;
    int patience = 5;

    // Throws Error on out-of-range values.
    void validate() const;
    ModelShape shape(const AlignmentTask& task) const;
};

// Label vector for a prediction whose target is the given entity.
using LabelFn = std::function<SoftLabelVector(EntityId)>;

// Plain smoothing with target mass s, no evidence.
LabelFn plain_labels(std::size_t vocab_size, double s);

struct LossOptions {
    Normalization normalization = Normalization::softmax;
    std::size_t negatives = 0;
    Rng* rng = nullptr;  // required when negatives > 0
};

// Mean over the batch of CE(label(center), p(mean-pooled context)).
ag::Var neighbor_loss(const BoundModel& m, std::span<const NeighborSample> batch, const LabelFn& labels,
                      const LossOptions& options = {});
// Mean over the batch of the summed CE of each label against the prediction
// read at the masked position.
ag::Var path_loss(const BoundModel& m, std::span<const PathSample> batch, const LabelFn& labels,
                  const LossOptions& options = {});
// Mean over the batch of ||h0_s + r - h0_o||.
ag::Var relation_loss(const BoundModel& m, std::span<const Triple> batch);

// Value-only conveniences.
double loss_neighbor(const Model& model, std::span<const NeighborSample> batch, const LabelFn& labels,
                     const LossOptions& options = {});
double loss_path(const Model& model, std::span<const PathSample> batch, const LabelFn& labels,
                 const LossOptions& options = {});
double loss_relation(const Model& model, std::span<const Triple> batch);

// -sum q log p over dense vectors.
double cross_entropy(std::span<const double> q, std::span<const double> p);

class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // One bias-corrected update of every parameter from its grad.
    void step(const std::vector<Parameter*>& params, double lr);
    long steps() const { return t_; }

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Matrix> m_, v_;
};

struct EpochStats {
    int epoch = 0;
    double neighbor = 0.0;
    double path = 0.0;
    double relation = 0.0;
    std::optional<double> valid_hits1;
    std::size_t positive_evidence = 0;
    std::size_t negative_evidence = 0;
};

class Trainer {
public:
    Trainer(const AlignmentTask& task, TrainConfig config);
    Trainer(const AlignmentTask& task, TrainConfig config, Model model);

    // One pass of alternating neighbor/path/relation batches. From
    // holistic_start on (and after at least one completed epoch) an informing
    // round runs first and its evidence edits every label. Throws
    // TrainingError on divergence, with the model restored to the start of
    // the epoch.
    EpochStats train_epoch();

    // Runs up to config.epochs epochs with validation-based early stopping
    // and restores the best-validating parameters. Writes one line per
    // epoch to log if given.
    std::vector<EpochStats> fit(std::ostream* log = nullptr);

    Model& model() { return model_; }
    const Model& model() const { return model_; }
    const EvidenceStore& evidence() const { return evidence_; }
    int completed_epochs() const { return epoch_; }
    std::size_t isolated_entities() const { return isolated_; }

    // Label function used for the next batch: smoothing plus, when informing
    // is active, the current evidence.
    LabelFn labels() const;

private:
    const AlignmentTask& task_;
    TrainConfig config_;
    Model model_;
    Adam adam_;
    Rng rng_;
    SeedIndex seeds_;
    EvidenceStore evidence_;
    std::vector<EntityId> trainable_centers_;
    std::size_t isolated_ = 0;
    int epoch_ = 0;
};

std::string format_epoch(const EpochStats& s);

}  // namespace imea
