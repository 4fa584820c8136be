#include "imea/kg.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace imea {

KnowledgeGraph::KnowledgeGraph(IdRange entities, IdRange relations, std::vector<Triple> triples)
    : entities_(entities), relations_(relations), triples_(std::move(triples)) {
    std::sort(triples_.begin(), triples_.end());
    triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());

    out_index_.resize(entities_.size());
    in_index_.resize(entities_.size());
    for (const auto& t : triples_) {
        if (!entities_.contains(t.subject) || !entities_.contains(t.object)) {
            throw LookupError("triple references entity outside the graph: (" + std::to_string(t.subject) + ", " +
                              std::to_string(t.relation) + ", " + std::to_string(t.object) + ")");
        }
        if (!relations_.contains(t.relation)) {
            throw LookupError("triple references unknown relation " + std::to_string(t.relation));
        }
        out_index_[t.subject - entities_.begin].emplace_back(t.relation, t.object);
        in_index_[t.object - entities_.begin].emplace_back(t.relation, t.subject);
    }
    for (auto& v : out_index_) std::sort(v.begin(), v.end());
    for (auto& v : in_index_) std::sort(v.begin(), v.end());
}

std::size_t KnowledgeGraph::local(EntityId e) const {
    if (!entities_.contains(e)) throw LookupError("unknown entity " + std::to_string(e));
    return static_cast<std::size_t>(e - entities_.begin);
}

const std::vector<std::pair<RelationId, EntityId>>& KnowledgeGraph::out_edges(EntityId e) const {
    return out_index_[local(e)];
}

const std::vector<std::pair<RelationId, EntityId>>& KnowledgeGraph::in_edges(EntityId e) const {
    return in_index_[local(e)];
}

std::vector<Edge> neighborhood(const KnowledgeGraph& kg, EntityId e) {
    std::vector<Edge> edges;
    const auto& out = kg.out_edges(e);
    const auto& in = kg.in_edges(e);
    edges.reserve(out.size() + in.size());
    for (const auto& [r, o] : out) edges.push_back({r, o, Direction::out});
    for (const auto& [r, s] : in) edges.push_back({r, s, Direction::in});
    std::sort(edges.begin(), edges.end());
    return edges;
}

RelationFunctionality compute_relation_functionality(const KnowledgeGraph& kg) {
    // Triples are deduplicated and sorted, so (s, o) pairs per relation are distinct.
    std::unordered_map<RelationId, std::unordered_set<EntityId>> subjects, objects;
    std::unordered_map<RelationId, std::size_t> pairs;
    for (const auto& t : kg.triples()) {
        subjects[t.relation].insert(t.subject);
        objects[t.relation].insert(t.object);
        ++pairs[t.relation];
    }
    RelationFunctionality out;
    for (RelationId r = kg.relations().begin; r < kg.relations().end; ++r) {
        auto it = pairs.find(r);
        if (it == pairs.end()) throw Error("relation " + std::to_string(r) + " has no triples");
        const auto n = static_cast<double>(it->second);
        out.f[r] = static_cast<double>(subjects[r].size()) / n;
        out.f_inv[r] = static_cast<double>(objects[r].size()) / n;
    }
    return out;
}

EntityFunctionality compute_entity_functionality(const KnowledgeGraph& kg) {
    EntityFunctionality out;
    for (EntityId e = kg.entities().begin; e < kg.entities().end; ++e) {
        if (auto d = kg.out_degree(e); d > 0) out.f[e] = 1.0 / static_cast<double>(d);
        if (auto d = kg.in_degree(e); d > 0) out.f_inv[e] = 1.0 / static_cast<double>(d);
    }
    return out;
}

FunctionalityTable::FunctionalityTable(std::size_t num_entities, std::size_t num_relations)
    : rel_f_(num_relations, 0.0),
      rel_f_inv_(num_relations, 0.0),
      ent_f_(num_entities, 0.0),
      ent_f_inv_(num_entities, 0.0) {}

void FunctionalityTable::merge(const RelationFunctionality& rel) {
    for (const auto& [r, v] : rel.f) rel_f_.at(static_cast<std::size_t>(r)) = v;
    for (const auto& [r, v] : rel.f_inv) rel_f_inv_.at(static_cast<std::size_t>(r)) = v;
}

void FunctionalityTable::merge(const EntityFunctionality& ent) {
    for (const auto& [e, v] : ent.f) ent_f_.at(static_cast<std::size_t>(e)) = v;
    for (const auto& [e, v] : ent.f_inv) ent_f_inv_.at(static_cast<std::size_t>(e)) = v;
}

namespace {

double lookup(const std::vector<double>& values, std::int32_t id, const char* what) {
    if (id < 0 || static_cast<std::size_t>(id) >= values.size() || values[static_cast<std::size_t>(id)] == 0.0) {
        throw LookupError(std::string(what) + " undefined for id " + std::to_string(id));
    }
    return values[static_cast<std::size_t>(id)];
}

bool defined(const std::vector<double>& values, std::int32_t id) {
    return id >= 0 && static_cast<std::size_t>(id) < values.size() && values[static_cast<std::size_t>(id)] != 0.0;
}

}  // namespace

double FunctionalityTable::rel_f(RelationId r) const { return lookup(rel_f_, r, "relation functionality"); }
double FunctionalityTable::rel_f_inv(RelationId r) const {
    return lookup(rel_f_inv_, r, "inverse relation functionality");
}
double FunctionalityTable::ent_f(EntityId e) const { return lookup(ent_f_, e, "entity functionality"); }
double FunctionalityTable::ent_f_inv(EntityId e) const {
    return lookup(ent_f_inv_, e, "inverse entity functionality");
}
bool FunctionalityTable::has_ent_f(EntityId e) const { return defined(ent_f_, e); }
bool FunctionalityTable::has_ent_f_inv(EntityId e) const { return defined(ent_f_inv_, e); }

FunctionalityTable compute_functionality(const KnowledgeGraph& source, const KnowledgeGraph& target) {
    const auto n_ent = static_cast<std::size_t>(std::max(source.entities().end, target.entities().end));
    const auto n_rel = static_cast<std::size_t>(std::max(source.relations().end, target.relations().end));
    FunctionalityTable table(n_ent, n_rel);
    for (const auto* kg : {&source, &target}) {
        table.merge(compute_relation_functionality(*kg));
        table.merge(compute_entity_functionality(*kg));
    }
    return table;
}

const KnowledgeGraph& AlignmentTask::kg_of(EntityId e) const {
    if (source.contains(e)) return source;
    if (target.contains(e)) return target;
    throw LookupError("unknown entity " + std::to_string(e));
}

void validate_links(const AlignmentTask& task) {
    std::unordered_set<EntityId> seen_source, seen_target;
    auto check = [&](const std::vector<Link>& links, const char* name) {
        for (const auto& l : links) {
            if (!task.source.contains(l.source) || !task.target.contains(l.target)) {
                throw Error(std::string(name) + " link (" + std::to_string(l.source) + ", " +
                            std::to_string(l.target) + ") is not source->target");
            }
            if (!seen_source.insert(l.source).second || !seen_target.insert(l.target).second) {
                throw Error(std::string(name) + " link (" + std::to_string(l.source) + ", " +
                            std::to_string(l.target) + ") overlaps another link");
            }
        }
    };
    check(task.seed, "seed");
    check(task.valid, "valid");
    check(task.test, "test");
}

AlignmentTask make_task(std::vector<std::string> entity_uris, std::vector<std::string> relation_uris,
                        IdRange source_entities, IdRange source_relations, std::vector<Triple> source_triples,
                        IdRange target_entities, IdRange target_relations, std::vector<Triple> target_triples,
                        std::vector<Link> seed, std::vector<Link> valid, std::vector<Link> test) {
    AlignmentTask task;
    task.entity_uris = std::move(entity_uris);
    task.relation_uris = std::move(relation_uris);
    task.source = KnowledgeGraph(source_entities, source_relations, std::move(source_triples));
    task.target = KnowledgeGraph(target_entities, target_relations, std::move(target_triples));
    task.seed = std::move(seed);
    task.valid = std::move(valid);
    task.test = std::move(test);
    validate_links(task);
    task.functionality = compute_functionality(task.source, task.target);
    return task;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        fields.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return fields;
}

// Calls fn(fields, line_number) for each non-empty line; fields must have
// exactly `arity` entries.
template <typename Fn>
void read_tsv(const std::filesystem::path& path, std::size_t arity, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw LoadError("missing file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != arity) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(arity) +
                             " tab-separated fields, got " + std::to_string(fields.size()));
        }
        fn(fields, line_no);
    }
}

struct Vocab {
    std::vector<std::string> uris;
    std::unordered_map<std::string, std::int32_t> ids;

    std::int32_t intern(const std::string& uri) {
        auto [it, inserted] = ids.emplace(uri, static_cast<std::int32_t>(uris.size()));
        if (inserted) uris.push_back(uri);
        return it->second;
    }
};

}  // namespace

std::filesystem::path fold_directory(const std::filesystem::path& dataset_dir, const std::string& fold) {
    if (!fold.empty() && std::all_of(fold.begin(), fold.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return dataset_dir / "721_5fold" / fold;
    }
    return dataset_dir / fold;
}

AlignmentTask load_openea(const std::filesystem::path& dataset_dir, const std::string& fold) {
    Vocab entities, relations;
    std::vector<Triple> triples[2];
    IdRange ent_range[2], rel_range[2];

    for (int side = 0; side < 2; ++side) {
        ent_range[side].begin = static_cast<std::int32_t>(entities.uris.size());
        rel_range[side].begin = static_cast<std::int32_t>(relations.uris.size());
        // Entity and relation namespaces are kept disjoint per KG even when URIs coincide.
        Vocab local_ent, local_rel;
        std::vector<std::array<std::int32_t, 3>> raw;
        read_tsv(dataset_dir / ("rel_triples_" + std::to_string(side + 1)), 3,
                 [&](const std::vector<std::string>& f, std::size_t) {
                     raw.push_back({local_ent.intern(f[0]), local_rel.intern(f[1]), local_ent.intern(f[2])});
                 });
        for (const auto& uri : local_ent.uris) entities.intern((side == 0 ? "1\t" : "2\t") + uri);
        for (const auto& uri : local_rel.uris) relations.intern((side == 0 ? "1\t" : "2\t") + uri);
        for (const auto& [s, r, o] : raw) {
            triples[side].push_back(
                {ent_range[side].begin + s, rel_range[side].begin + r, ent_range[side].begin + o});
        }
        ent_range[side].end = static_cast<std::int32_t>(entities.uris.size());
        rel_range[side].end = static_cast<std::int32_t>(relations.uris.size());
    }

    auto fold_dir = fold_directory(dataset_dir, fold);
    auto read_links = [&](const char* name) {
        std::vector<Link> links;
        auto path = fold_dir / name;
        read_tsv(path, 2, [&](const std::vector<std::string>& f, std::size_t line_no) {
            auto s = entities.ids.find("1\t" + f[0]);
            auto t = entities.ids.find("2\t" + f[1]);
            if (s == entities.ids.end() || t == entities.ids.end()) {
                throw LoadError(path.string() + ":" + std::to_string(line_no) + ": unknown entity URI '" +
                                (s == entities.ids.end() ? f[0] : f[1]) + "'");
            }
            links.push_back({s->second, t->second});
        });
        return links;
    };
    auto seed = read_links("train_links");
    auto valid = read_links("valid_links");
    auto test = read_links("test_links");

    auto strip = [](std::vector<std::string> uris) {
        for (auto& u : uris) u = u.substr(2);
        return uris;
    };
    return make_task(strip(std::move(entities.uris)), strip(std::move(relations.uris)), ent_range[0], rel_range[0],
                     std::move(triples[0]), ent_range[1], rel_range[1], std::move(triples[1]), std::move(seed),
                     std::move(valid), std::move(test));
}

void save_openea(const AlignmentTask& task, const std::filesystem::path& dataset_dir, const std::string& fold) {
    auto fold_dir = fold_directory(dataset_dir, fold);
    std::filesystem::create_directories(fold_dir);
    auto open = [](const std::filesystem::path& path) {
        std::ofstream out(path);
        if (!out) throw Error("cannot write " + path.string());
        return out;
    };
    const KnowledgeGraph* kgs[2] = {&task.source, &task.target};
    for (int side = 0; side < 2; ++side) {
        auto out = open(dataset_dir / ("rel_triples_" + std::to_string(side + 1)));
        for (const auto& t : kgs[side]->triples()) {
            out << task.entity_uris[static_cast<std::size_t>(t.subject)] << '\t'
                << task.relation_uris[static_cast<std::size_t>(t.relation)] << '\t'
                << task.entity_uris[static_cast<std::size_t>(t.object)] << '\n';
        }
    }
    auto write_links = [&](const char* name, const std::vector<Link>& links) {
        auto out = open(fold_dir / name);
        for (const auto& l : links) {
            out << task.entity_uris[static_cast<std::size_t>(l.source)] << '\t'
                << task.entity_uris[static_cast<std::size_t>(l.target)] << '\n';
        }
    };
    write_links("train_links", task.seed);
    write_links("valid_links", task.valid);
    write_links("test_links", task.test);
}

}  // namespace imea
