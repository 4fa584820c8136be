#pragma once
// Knowledge-graph data model and OpenEA ingestion.
//
// Entity and relation ids live in one dense namespace per alignment task:
// source-KG ids come first, then target-KG ids. A KnowledgeGraph owns a
// contiguous slice of each namespace.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace imea {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LoadError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct LookupError : Error {
    using Error::Error;
};

struct Triple {
    EntityId subject;
    RelationId relation;
    EntityId object;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct Link {
    EntityId source;
    EntityId target;

    friend auto operator<=>(const Link&, const Link&) = default;
};

enum class Direction : std::uint8_t { out, in };

// A relational edge seen from a center entity.
struct Edge {
    RelationId relation;
    EntityId neighbor;
    Direction direction;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Half-open id interval [begin, end).
struct IdRange {
    std::int32_t begin = 0;
    std::int32_t end = 0;

    std::int32_t size() const { return end - begin; }
    bool contains(std::int32_t id) const { return id >= begin && id < end; }
};

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    // Duplicate triples are dropped. Throws LookupError if a triple references
    // an id outside the given ranges.
    KnowledgeGraph(IdRange entities, IdRange relations, std::vector<Triple> triples);

    IdRange entities() const { return entities_; }
    IdRange relations() const { return relations_; }
    const std::vector<Triple>& triples() const { return triples_; }

    bool contains(EntityId e) const { return entities_.contains(e); }

    // (relation, object) for every triple with e as subject, sorted.
    const std::vector<std::pair<RelationId, EntityId>>& out_edges(EntityId e) const;
    // (relation, subject) for every triple with e as object, sorted.
    const std::vector<std::pair<RelationId, EntityId>>& in_edges(EntityId e) const;

    std::size_t out_degree(EntityId e) const { return out_edges(e).size(); }
    std::size_t in_degree(EntityId e) const { return in_edges(e).size(); }
    std::size_t degree(EntityId e) const { return out_degree(e) + in_degree(e); }

private:
    std::size_t local(EntityId e) const;

    IdRange entities_;
    IdRange relations_;
    std::vector<Triple> triples_;
    std::vector<std::vector<std::pair<RelationId, EntityId>>> out_index_;
    std::vector<std::vector<std::pair<RelationId, EntityId>>> in_index_;
};

// Every incident edge of e, sorted by (relation, neighbor, direction).
// Self-loops appear twice: once outgoing and once incoming.
std::vector<Edge> neighborhood(const KnowledgeGraph& kg, EntityId e);

struct RelationFunctionality {
    std::unordered_map<RelationId, double> f;
    std::unordered_map<RelationId, double> f_inv;
};

struct EntityFunctionality {
    std::unordered_map<EntityId, double> f;      // entities with >= 1 outgoing triple
    std::unordered_map<EntityId, double> f_inv;  // entities with >= 1 incoming triple
};

// f(r) = |distinct subjects| / |distinct (s,o) pairs|, f_inv analogous for
// objects. Throws Error if a relation in kg.relations() has no triples.
RelationFunctionality compute_relation_functionality(const KnowledgeGraph& kg);

// f(e) = 1 / out-degree, f_inv(e) = 1 / in-degree.
EntityFunctionality compute_entity_functionality(const KnowledgeGraph& kg);

// Functionality statistics for both KGs of a task over the shared id space.
// Lookups for undefined entries throw LookupError.
class FunctionalityTable {
public:
    FunctionalityTable() = default;
    FunctionalityTable(std::size_t num_entities, std::size_t num_relations);

    void merge(const RelationFunctionality& rel);
    void merge(const EntityFunctionality& ent);

    double rel_f(RelationId r) const;
    double rel_f_inv(RelationId r) const;
    double ent_f(EntityId e) const;
    double ent_f_inv(EntityId e) const;

    bool has_ent_f(EntityId e) const;
    bool has_ent_f_inv(EntityId e) const;

    std::size_t num_entities() const { return ent_f_.size(); }
    std::size_t num_relations() const { return rel_f_.size(); }

private:
    // 0 marks "undefined"; defined values are in (0, 1].
    std::vector<double> rel_f_, rel_f_inv_, ent_f_, ent_f_inv_;
};

FunctionalityTable compute_functionality(const KnowledgeGraph& source, const KnowledgeGraph& target);

struct AlignmentTask {
    KnowledgeGraph source;
    KnowledgeGraph target;
    std::vector<Link> seed;
    std::vector<Link> valid;
    std::vector<Link> test;
    std::vector<std::string> entity_uris;    // indexed by EntityId
    std::vector<std::string> relation_uris;  // indexed by RelationId
    FunctionalityTable functionality;

    std::size_t num_entities() const { return entity_uris.size(); }
    std::size_t num_relations() const { return relation_uris.size(); }

    // The KG that owns e. Throws LookupError for unknown ids.
    const KnowledgeGraph& kg_of(EntityId e) const;
};

// Assembles a task from per-KG triples over dense ids, checks link invariants
// and computes the functionality table.
AlignmentTask make_task(std::vector<std::string> entity_uris, std::vector<std::string> relation_uris,
                        IdRange source_entities, IdRange source_relations, std::vector<Triple> source_triples,
                        IdRange target_entities, IdRange target_relations, std::vector<Triple> target_triples,
                        std::vector<Link> seed, std::vector<Link> valid, std::vector<Link> test);

// Checks that seed/valid/test are pairwise disjoint on both sides and that
// each side of every link lives in its KG. Throws Error on violation.
void validate_links(const AlignmentTask& task);

// Resolves a fold identifier: a bare number n maps to "721_5fold/n", anything
// else is taken as a path relative to the dataset directory.
std::filesystem::path fold_directory(const std::filesystem::path& dataset_dir, const std::string& fold);

// Reads rel_triples_1, rel_triples_2 and <fold>/{train,valid,test}_links.
AlignmentTask load_openea(const std::filesystem::path& dataset_dir, const std::string& fold);

// Writes a task back out in the OpenEA layout using the retained URIs.
void save_openea(const AlignmentTask& task, const std::filesystem::path& dataset_dir, const std::string& fold);

}  // namespace imea
