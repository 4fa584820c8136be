#pragma once
// Ranking evaluation, prediction export and the synthetic KG-pair generator.

#include <filesystem>
#include <span>

#include "imea/encoder.hpp"

namespace imea {

struct Metrics {
    double hits_at_1 = 0.0;
    double hits_at_5 = 0.0;
    double mrr = 0.0;
    std::size_t n_queries = 0;
};

enum class RankDirection { source_to_target, target_to_source };

// Which vectors represent an entity for ranking.
enum class Representation {
    input,           // h0 rows of the entity table
    encoder_pooled,  // mean encoder output over the entity's full neighbor list
};

// Row-normalized copy; zero rows stay zero.
Matrix normalize_rows(const Matrix& m);

// 1-based rank of every link's true counterpart among all entities of the
// opposite KG, by descending cosine with ties broken by entity id.
std::vector<std::size_t> rank_links(const Matrix& embeddings, const AlignmentTask& task, std::span<const Link> links,
                                    RankDirection direction = RankDirection::source_to_target);

Metrics metrics_from_ranks(std::span<const std::size_t> ranks);

// Throws Error for an empty link list or an entity without an embedding row.
Metrics evaluate(const Matrix& embeddings, const AlignmentTask& task, std::span<const Link> links,
                 RankDirection direction = RankDirection::source_to_target);
Metrics evaluate(const EmbeddingStore& store, const AlignmentTask& task, std::span<const Link> links,
                 RankDirection direction = RankDirection::source_to_target);

Matrix entity_representations(const Model& model, const AlignmentTask& task, Representation rep);

// For each test source, the top-k target URIs with cosine similarity:
//   # source_uri<TAB>rank<TAB>target_uri<TAB>similarity
void predict_alignment(const Matrix& embeddings, const AlignmentTask& task, const std::filesystem::path& path,
                       std::size_t top = 10);

void write_metrics(const Metrics& m, std::ostream& out);
void write_metrics(const Metrics& m, const std::filesystem::path& path);

struct SynthSpec {
    int n_entities = 200;
    int n_relations = 8;
    int n_triples = 600;
    double triple_dropout = 0.2;
    double seed_fraction = 0.2;
    double valid_fraction = 0.1;
    std::uint64_t random_seed = 1;
};

// Random source KG with a spanning-tree backbone plus uniform random
// triples, and a relabeled copy with per-triple dropout as the target. The
// identity map is split into seed / valid / test. A dropped triple is kept
// when removing it would leave one of its endpoints isolated. Throws Error
// for infeasible specs.
AlignmentTask generate_synthetic_pair(const SynthSpec& spec);

}  // namespace imea
