#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace imea::oracle {

AlignmentTask toy_task() {
    std::vector<std::string> entities, relations;
    for (int i = 0; i < 10; ++i) entities.push_back("s" + std::to_string(i));
    for (int i = 0; i < 10; ++i) entities.push_back("t" + std::to_string(i));
    for (const char* r : {"sr0", "sr1", "tr0", "tr1"}) relations.emplace_back(r);
    const std::vector<Triple> src = {{0, 0, 1}, {1, 0, 2}, {2, 1, 3}, {3, 0, 4}, {4, 1, 5}, {5, 0, 6},
                                     {6, 1, 7}, {7, 0, 8}, {8, 1, 9}, {9, 0, 0}, {0, 1, 5}, {2, 0, 7}};
    std::vector<Triple> tgt;
    for (const auto& t : src) {
        if (t.subject == 8) continue;  // the target side is missing one edge
        tgt.push_back({t.subject + 10, t.relation + 2, t.object + 10});
    }
    return make_task(entities, relations, {0, 10}, {0, 2}, src, {10, 20}, {2, 4}, tgt,
                     {{0, 10}, {1, 11}, {2, 12}}, {{3, 13}}, {{4, 14}, {5, 15}, {6, 16}, {7, 17}, {8, 18}, {9, 19}});
}

namespace {

struct Batches {
    std::vector<NeighborSample> neighbors;
    std::vector<PathSample> paths;
    std::vector<Triple> triples;
};

Batches make_batches(const AlignmentTask& task, std::uint64_t seed) {
    Rng rng(seed);
    Batches b;
    for (EntityId e : {0, 3, 5, 12, 16, 19}) b.neighbors.push_back(sample_neighbors(task.kg_of(e), e, 3, rng));
    const SeedIndex seeds(task.seed);
    WalkOptions walk;
    walk.length = 4;
    walk.walks_per_entity = 1;
    auto walks = generate_paths(task, seeds, walk, rng);
    walks.resize(std::min<std::size_t>(walks.size(), 6));
    for (std::size_t i = 0; i < walks.size(); ++i) b.paths.push_back(mask_path_at(walks[i], i % 4, seeds));
    // Make sure a two-label sample is present.
    b.paths.push_back(mask_path_at({0, 1, 2, 3}, 1, seeds));
    b.triples = task.source.triples();
    b.triples.insert(b.triples.end(), task.target.triples().begin(), task.target.triples().end());
    return b;
}

}  // namespace

GradCheck gradient_check(const AlignmentTask& task, Model& model, LossKind kind, double step, double floor,
                         std::uint64_t seed) {
    const Batches b = make_batches(task, seed);
    const LabelFn labels = plain_labels(task.num_entities(), 0.6);
    const LossOptions options;
    auto value = [&] {
        switch (kind) {
            case LossKind::neighbor: return loss_neighbor(model, b.neighbors, labels, options);
            case LossKind::path: return loss_path(model, b.paths, labels, options);
            case LossKind::relation: return loss_relation(model, b.triples);
            case LossKind::combined:
                return loss_neighbor(model, b.neighbors, labels, options) + loss_path(model, b.paths, labels, options) +
                       loss_relation(model, b.triples);
        }
        return 0.0;
    };

    model.zero_grad();
    {
        ag::Tape tape;
        const BoundModel bound = bind(tape, model);
        ag::Var loss;
        switch (kind) {
            case LossKind::neighbor: loss = neighbor_loss(bound, b.neighbors, labels, options); break;
            case LossKind::path: loss = path_loss(bound, b.paths, labels, options); break;
            case LossKind::relation: loss = relation_loss(bound, b.triples); break;
            case LossKind::combined:
                loss = ag::add(ag::add(neighbor_loss(bound, b.neighbors, labels, options),
                                       path_loss(bound, b.paths, labels, options)),
                               relation_loss(bound, b.triples));
                break;
        }
        tape.backward(loss);
    }

    GradCheck out;
    for (Parameter* p : model.parameters()) {
        for (Eigen::Index k = 0; k < p->value.size(); ++k) {
            double& x = p->value.data()[k];
            const double saved = x;
            x = saved + step;
            const double up = value();
            x = saved - step;
            const double down = value();
            x = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = p->grad.data()[k];
            const double rel =
                std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
            ++out.entries;
            if (rel > out.max_rel_error) {
                out.max_rel_error = rel;
                out.worst = p->name + "[" + std::to_string(k) + "]";
            }
        }
    }
    return out;
}

BruteFunctionality brute_functionality(const std::vector<Triple>& triples) {
    // Distinct triples first; the input may repeat.
    std::vector<Triple> uniq;
    for (const auto& t : triples) {
        bool seen = false;
        for (const auto& u : uniq) seen = seen || (u.subject == t.subject && u.relation == t.relation && u.object == t.object);
        if (!seen) uniq.push_back(t);
    }
    BruteFunctionality out;
    std::set<RelationId> rels;
    for (const auto& t : uniq) rels.insert(t.relation);
    for (RelationId r : rels) {
        std::set<EntityId> subjects, objects;
        std::set<std::pair<EntityId, EntityId>> pairs;
        for (const auto& t : uniq) {
            if (t.relation != r) continue;
            subjects.insert(t.subject);
            objects.insert(t.object);
            pairs.insert({t.subject, t.object});
        }
        out.rel_f[r] = static_cast<double>(subjects.size()) / static_cast<double>(pairs.size());
        out.rel_f_inv[r] = static_cast<double>(objects.size()) / static_cast<double>(pairs.size());
    }
    std::map<EntityId, int> out_deg, in_deg;
    for (const auto& t : uniq) {
        ++out_deg[t.subject];
        ++in_deg[t.object];
    }
    for (const auto& [e, d] : out_deg) out.ent_f[e] = 1.0 / d;
    for (const auto& [e, d] : in_deg) out.ent_f_inv[e] = 1.0 / d;
    return out;
}

KnowledgeGraph random_kg(int n_entities, int n_relations, int n_triples, Rng& rng) {
    std::uniform_int_distribution<EntityId> ent(0, n_entities - 1);
    std::uniform_int_distribution<RelationId> rel(0, n_relations - 1);
    std::vector<Triple> triples;
    for (RelationId r = 0; r < n_relations; ++r) triples.push_back({ent(rng), r, ent(rng)});
    while (static_cast<int>(triples.size()) < n_triples) triples.push_back({ent(rng), rel(rng), ent(rng)});
    return KnowledgeGraph({0, n_entities}, {0, n_relations}, triples);
}

RefMatch reference_match(const std::vector<RefEdge>& source, const std::vector<RefEdge>& target,
                         const std::function<double(const RefEdge&, const RefEdge&)>& align, double eta_floor) {
    RefMatch out;
    const std::size_t n = source.size(), m = target.size();
    if (n == 0 || m == 0) return out;
    std::vector<std::vector<double>> phi(n, std::vector<double>(m));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const RowVector& a = source[i].embedding;
            const RowVector& b = target[j].embedding;
            const double na = a.squaredNorm(), nb = b.squaredNorm();
            double c = 0.0;
            if (na != 0.0 && nb != 0.0) c = std::clamp(a.dot(b) / std::sqrt(na * nb), -1.0, 1.0);
            phi[i][j] = source[i].weight * target[j].weight * align(source[i], target[j]) * c;
        }
    }
    if (n <= m) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 0; j < m; ++j) {
                if (phi[i][j] > phi[i][best]) best = j;
            }
            out.psi.push_back({static_cast<int>(i), static_cast<int>(best)});
        }
    } else {
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t best = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (phi[i][j] > phi[best][j]) best = i;
            }
            out.psi.push_back({static_cast<int>(best), static_cast<int>(j)});
        }
    }
    double top = -1e300, total = 0.0;
    for (const auto& [i, j] : out.psi) {
        top = std::max(top, phi[i][j]);
        total += phi[i][j];
        out.union_score += source[i].weight * target[j].weight;
    }
    const double eta = std::max(eta_floor, 0.5 * (top + total / static_cast<double>(out.psi.size())));
    for (const auto& [i, j] : out.psi) {
        if (phi[i][j] >= eta) {
            out.theta.push_back({i, j});
            out.intersection += phi[i][j];
        }
    }
    if (!out.theta.empty() && out.union_score > 0.0) out.prob = out.intersection / out.union_score;
    return out;
}

HolisticCase random_holistic_case(Rng& rng) {
    constexpr int kSide = 6, kRels = 3, kDim = 6;
    std::uniform_int_distribution<int> edges(1, 4), other(1, kSide - 1), rel(0, kRels - 1), coin(0, 1);
    auto side = [&](EntityId base, RelationId rbase) {
        std::vector<Triple> t;
        for (int k = edges(rng); k > 0; --k) {
            const EntityId n = base + other(rng);
            const RelationId r = rbase + rel(rng);
            t.push_back(coin(rng) ? Triple{base, r, n} : Triple{n, r, base});
        }
        // Every relation needs a triple; keep these away from the center.
        for (RelationId r = 0; r < kRels; ++r) t.push_back({base + other(rng), rbase + r, base + other(rng)});
        return t;
    };
    std::vector<std::string> entities, relations;
    for (int i = 0; i < 2 * kSide; ++i) entities.push_back("e" + std::to_string(i));
    for (int i = 0; i < 2 * kRels; ++i) relations.push_back("r" + std::to_string(i));
    HolisticCase c;
    c.task = make_task(entities, relations, {0, kSide}, {0, kRels}, side(0, 0), {kSide, 2 * kSide}, {kRels, 2 * kRels},
                       side(kSide, kRels), {}, {}, {});
    std::normal_distribution<double> g(0.0, 1.0);
    auto fill = [&](int rows) {
        Matrix m(rows, kDim);
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
        return m;
    };
    c.store.entity = Parameter("entity", fill(2 * kSide));
    c.store.relation = Parameter("relation", fill(2 * kRels));
    c.store.mask = Parameter("mask", fill(1));
    c.source = 0;
    c.target = kSide;
    return c;
}

RefMatch reference_for(const HolisticCase& c, const RelationAlignTable& align) {
    auto edges = [&](const KnowledgeGraph& kg, EntityId center) {
        const auto f = brute_functionality(kg.triples());
        std::vector<RefEdge> out;
        for (const auto& t : kg.triples()) {
            // A self-loop shows up once in each direction.
            if (t.subject == center) out.push_back({f.rel_f_inv.at(t.relation), t.relation, true,
                                                    c.store.entity.value.row(t.object)});
            if (t.object == center) out.push_back({f.rel_f.at(t.relation), t.relation, false,
                                                   c.store.entity.value.row(t.subject)});
        }
        return out;
    };
    // Same (relation, neighbor, direction) order as the library neighborhood.
    auto sorted = [&](const KnowledgeGraph& kg, EntityId center) {
        auto e = edges(kg, center);
        std::vector<std::size_t> idx(e.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<std::tuple<int, int, int>> keys;
        for (const auto& t : kg.triples()) {
            if (t.subject == center) keys.emplace_back(t.relation, t.object, 0);
            if (t.object == center) keys.emplace_back(t.relation, t.subject, 1);
        }
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
        std::vector<RefEdge> out;
        for (std::size_t i : idx) out.push_back(e[i]);
        return out;
    };
    const auto orient = [](bool outgoing) { return outgoing ? Orientation::forward : Orientation::inverse; };
    return reference_match(
        sorted(c.task.source, c.source), sorted(c.task.target, c.target),
        [&](const RefEdge& a, const RefEdge& b) {
            return align.align(a.relation, orient(a.outgoing), b.relation, orient(b.outgoing));
        },
        0.6);
}

}  // namespace imea::oracle
