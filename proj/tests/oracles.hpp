#pragma once
// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the library routine it checks.

#include <map>
#include <vector>

#include "imea/holistic.hpp"
#include "imea/sampling.hpp"
#include "imea/evaluation.hpp"
#include "imea/training.hpp"

namespace imea::oracle {

// Two small KGs with ten entities each, two relations each and a
// three-pair seed.
AlignmentTask toy_task();

enum class LossKind { neighbor, path, relation, combined };

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t entries = 0;
    std::string worst;  // parameter name and flat index of the worst entry
};

// Compares backward() against central differences over every parameter
// entry of a freshly initialized model. Relative error is
// |a - n| / max(|a|, |n|, floor).
GradCheck gradient_check(const AlignmentTask& task, Model& model, LossKind kind, double step, double floor,
                         std::uint64_t seed);

// Functionality by plain enumeration of the triple list.
struct BruteFunctionality {
    std::map<RelationId, double> rel_f, rel_f_inv;
    std::map<EntityId, double> ent_f, ent_f_inv;
};
BruteFunctionality brute_functionality(const std::vector<Triple>& triples);

// Random KG over entities [0, n_entities) and relations [0, n_relations);
// every relation gets at least one triple.
KnowledgeGraph random_kg(int n_entities, int n_relations, int n_triples, Rng& rng);

// One neighbor edge as the matching sees it.
struct RefEdge {
    double weight;
    int relation;
    bool outgoing;
    RowVector embedding;
};

struct RefMatch {
    std::vector<std::pair<int, int>> psi, theta;
    double intersection = 0.0, union_score = 0.0, prob = 0.0;
};

// Straight-line matching: full score matrix, pooling, threshold and ratio.
// align(i, j) gives the relation alignment for source edge i, target edge j.
RefMatch reference_match(const std::vector<RefEdge>& source, const std::vector<RefEdge>& target,
                         const std::function<double(const RefEdge&, const RefEdge&)>& align, double eta_floor);

// A random two-KG task whose centers (entity 0 and the first target entity)
// have between 1 and 4 incident edges, with random input embeddings.
struct HolisticCase {
    AlignmentTask task;
    EmbeddingStore store;
    EntityId source = 0, target = 0;
};
HolisticCase random_holistic_case(Rng& rng);

// reference_match on the case's two neighborhoods. Edge weights come from
// brute_functionality; relation alignment from `align`.
RefMatch reference_for(const HolisticCase& c, const RelationAlignTable& align);

}  // namespace imea::oracle
