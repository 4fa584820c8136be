#pragma once
// Holistic reasoning over relations and neighborhoods: functionality-weighted
// relation signatures, relation alignment, and the Jaccard-like neighborhood
// matching that scores a candidate entity pair.

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "imea/encoder.hpp"

namespace imea {

enum class Orientation : std::uint8_t { forward, inverse };

// [S, O] for forward, [O, S] for inverse, where S and O are the
// functionality-weighted sums of the distinct subject / object embeddings.
struct RelationSignature {
    RelationId relation;
    Orientation orientation;
    RowVector embedding;
};

// Forward then inverse signature for every relation of kg, in relation order.
// Uses the input embeddings. Throws Error for a relation without triples.
std::vector<RelationSignature> approximate_relation_embeddings(const KnowledgeGraph& kg, const EmbeddingStore& store,
                                                               const FunctionalityTable& functionality);

// Cosine similarity; 0 when either vector has zero norm.
double cosine(const RowVector& a, const RowVector& b);

// Cosine of the two signature embeddings. A zero-norm signature scores 0.
double relation_align(const RelationSignature& a, const RelationSignature& b);

// align() for every (source relation, target relation, orientation pair),
// computed once per informing round.
class RelationAlignTable {
public:
    RelationAlignTable() = default;
    RelationAlignTable(const AlignmentTask& task, const EmbeddingStore& store);

    double align(RelationId source_rel, Orientation source_orient, RelationId target_rel,
                 Orientation target_orient) const;

    const std::vector<RelationSignature>& source_signatures() const { return source_sigs_; }
    const std::vector<RelationSignature>& target_signatures() const { return target_sigs_; }

private:
    IdRange source_rels_, target_rels_;
    std::vector<RelationSignature> source_sigs_, target_sigs_;
    Matrix same_;   // forward/forward == inverse/inverse
    Matrix cross_;  // forward/inverse == inverse/forward
};

// Outgoing edges are weighted by f_inv(r) and use the forward signature;
// incoming edges by f(r) with the inverse signature.
double edge_weight(const Edge& edge, const FunctionalityTable& functionality);
Orientation edge_orientation(const Edge& edge);

// phi = w_i * w_j * align(r_i, r_j) * cos(h0_i, h0_j)
double pair_match_score(const Edge& source_edge, const Edge& target_edge, const EmbeddingStore& store,
                        const FunctionalityTable& functionality, const RelationAlignTable& align);

struct MatchPair {
    int i;  // index into the source neighborhood
    int j;  // index into the target neighborhood
    double phi;
    double weight;  // w_i * w_j
};

struct MatchOptions {
    double eta_floor = 0.6;
    // Admit pairs with phi >= eta. The strict variant (phi > eta) rejects a
    // perfect single match because eta then equals its phi.
    bool inclusive_threshold = true;
};

struct MatchResult {
    EntityId source = -1;
    EntityId target = -1;
    std::vector<MatchPair> psi;    // argmax-pooled pairs
    std::vector<MatchPair> theta;  // pairs of psi that clear eta
    double eta = 0.0;
    double intersection = 0.0;
    double union_score = 0.0;
    double prob = 0.0;
    bool empty_neighborhood = false;
};

// Core of the neighborhood matching on a precomputed phi matrix
// (rows: source neighbors, cols: target neighbors) and per-side edge weights.
// Pooling runs along the smaller side (the source side on ties); argmax ties
// go to the lowest index.
MatchResult match_scores(const Matrix& phi, std::span<const double> source_weights,
                         std::span<const double> target_weights, const MatchOptions& options = {});

MatchResult match_neighborhoods(EntityId source, EntityId target, const AlignmentTask& task,
                                const EmbeddingStore& store, const RelationAlignTable& align,
                                const MatchOptions& options = {});

enum class Polarity : std::uint8_t { positive, negative };

struct AlignmentEvidence {
    EntityId source;
    EntityId target;
    double prob;
    Polarity polarity;
};

// positive iff prob >= gamma_pos, negative iff prob <= gamma_neg.
std::optional<Polarity> classify_evidence(double prob, double gamma_pos, double gamma_neg);

std::vector<AlignmentEvidence> infer_evidence(std::span<const Link> candidates, const AlignmentTask& task,
                                              const EmbeddingStore& store, const RelationAlignTable& align,
                                              double gamma_pos, double gamma_neg,
                                              const MatchOptions& options = {});

// Tab-separated `source_uri target_uri prob polarity` lines.
void write_evidence(const std::vector<AlignmentEvidence>& evidence, const AlignmentTask& task,
                    const std::filesystem::path& path);

}  // namespace imea
