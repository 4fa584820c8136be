#pragma once
// Feeds holistic evidence back into training through soft-label edits.

#include <span>
#include <unordered_map>

#include "imea/holistic.hpp"
#include "imea/labels.hpp"

namespace imea {

struct InformerConfig {
    std::size_t topk = 10;
    double gamma_pos = 0.62;
    double gamma_neg = 0.01;
    bool bidirectional = false;  // also search target -> source
    bool exclude_seed = true;    // skip seed-aligned entities on both sides
    MatchOptions match;
};

struct Candidate {
    EntityId target;
    double similarity;
};

struct CandidateSet {
    // (source, up to k candidates by descending cosine, ties by target id)
    std::vector<std::pair<EntityId, std::vector<Candidate>>> per_source;

    std::vector<Link> links() const;
};

// Exact top-k by cosine of the input embeddings.
CandidateSet select_candidates(const EmbeddingStore& store, std::span<const EntityId> sources,
                               std::span<const EntityId> targets, std::size_t k);
// Every source entity against every target entity.
CandidateSet select_candidates(const EmbeddingStore& store, const AlignmentTask& task, std::size_t k);

// Evidence indexed by both of its entities.
class EvidenceStore {
public:
    void add(const AlignmentEvidence& e);
    // Evidence where e is either side; empty when none.
    std::span<const AlignmentEvidence> for_entity(EntityId e) const;

    std::size_t size() const { return all_.size(); }
    std::size_t positives() const;
    std::size_t negatives() const { return size() - positives(); }
    const std::vector<AlignmentEvidence>& all() const { return all_; }

private:
    std::vector<AlignmentEvidence> all_;
    std::unordered_map<EntityId, std::vector<AlignmentEvidence>> by_entity_;
};

// The other side of e relative to `target`, or -1 if e does not involve it.
EntityId counterpart_of(const AlignmentEvidence& e, EntityId target);

// Positive counterparts of `target` get min(mass(target), prob), negative
// ones get 0; the vector is then renormalized unless `renormalize` is off.
// No applicable evidence leaves the vector untouched.
SoftLabelVector edit_soft_labels(SoftLabelVector base, EntityId target, std::span<const AlignmentEvidence> evidence,
                                 bool renormalize = true);

// Candidate selection, neighborhood matching and thresholding over the
// current input embeddings.
EvidenceStore informing_round(const AlignmentTask& task, const EmbeddingStore& store, const InformerConfig& config);

}  // namespace imea
