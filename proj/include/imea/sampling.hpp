#pragma once
// Training-sample producers: fixed-size neighbor sets and masked cross-KG
// random-walk paths.

#include <random>
#include <unordered_map>
#include <vector>

#include "imea/kg.hpp"

namespace imea {

using Rng = std::mt19937_64;

struct SamplingError : Error {
    using Error::Error;
};

struct NeighborSample {
    EntityId center;
    std::vector<EntityId> neighbors;
};

struct PathSample {
    std::vector<EntityId> tokens;  // unmasked; the encoder substitutes the mask at mask_pos
    std::size_t mask_pos = 0;
    std::vector<EntityId> labels;  // the masked entity, then its seed counterpart if any
};

// Bidirectional lookup over the seed alignment.
class SeedIndex {
public:
    SeedIndex() = default;
    explicit SeedIndex(const std::vector<Link>& seed);

    // Counterpart of e in the other KG, or -1.
    EntityId counterpart(EntityId e) const;
    bool contains(EntityId e) const { return counterpart(e) >= 0; }

private:
    std::unordered_map<EntityId, EntityId> map_;
};

// n neighbors drawn uniformly without replacement when degree >= n, with
// replacement otherwise. Throws SamplingError for isolated entities.
NeighborSample sample_neighbors(const KnowledgeGraph& kg, EntityId e, std::size_t n, Rng& rng);

struct WalkOptions {
    std::size_t length = 5;
    std::size_t walks_per_entity = 5;
    double swap_prob = 0.5;
    bool inverse_edges = false;  // also walk triples against their direction
};

// Random walks over the union graph: out-edges of either KG plus seed
// bridges, never taking two bridges in a row. Walks that get stuck before
// reaching the requested length are dropped. For each walk, a variant with
// seed entities swapped for their counterparts (each with swap_prob) is also
// emitted when at least one swap fires.
std::vector<std::vector<EntityId>> generate_paths(const AlignmentTask& task, const SeedIndex& seeds,
                                                  const WalkOptions& options, Rng& rng);

// True if every consecutive pair is a triple edge (per the walk policy) or a seed bridge.
bool is_valid_walk(const AlignmentTask& task, const SeedIndex& seeds, const std::vector<EntityId>& path,
                   bool inverse_edges = false);

// Masks one position chosen uniformly.
PathSample mask_path(std::vector<EntityId> path, const SeedIndex& seeds, Rng& rng);
// Masks a fixed position.
PathSample mask_path_at(std::vector<EntityId> path, std::size_t pos, const SeedIndex& seeds);

}  // namespace imea
