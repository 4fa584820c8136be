#include "imea/holistic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>

namespace imea {

std::vector<RelationSignature> approximate_relation_embeddings(const KnowledgeGraph& kg, const EmbeddingStore& store,
                                                               const FunctionalityTable& functionality) {
    const auto nrel = static_cast<std::size_t>(kg.relations().size());
    std::vector<std::set<EntityId>> subjects(nrel), objects(nrel);
    for (const auto& t : kg.triples()) {
        const auto r = static_cast<std::size_t>(t.relation - kg.relations().begin);
        subjects[r].insert(t.subject);
        objects[r].insert(t.object);
    }
    const auto d = store.entity.value.cols();
    std::vector<RelationSignature> out;
    out.reserve(2 * nrel);
    for (std::size_t r = 0; r < nrel; ++r) {
        const RelationId rel = kg.relations().begin + static_cast<RelationId>(r);
        if (subjects[r].empty()) throw Error("relation " + std::to_string(rel) + " has no triples");
        RowVector s = RowVector::Zero(d), o = RowVector::Zero(d);
        for (EntityId e : subjects[r]) s += functionality.ent_f(e) * store.entity.value.row(e);
        for (EntityId e : objects[r]) o += functionality.ent_f_inv(e) * store.entity.value.row(e);
        RowVector fwd(2 * d), inv(2 * d);
        fwd << s, o;
        inv << o, s;
        out.push_back({rel, Orientation::forward, std::move(fwd)});
        out.push_back({rel, Orientation::inverse, std::move(inv)});
    }
    return out;
}

double cosine(const RowVector& a, const RowVector& b) {
    const double na = a.squaredNorm(), nb = b.squaredNorm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / std::sqrt(na * nb), -1.0, 1.0);
}

double relation_align(const RelationSignature& a, const RelationSignature& b) {
    return cosine(a.embedding, b.embedding);
}

RelationAlignTable::RelationAlignTable(const AlignmentTask& task, const EmbeddingStore& store)
    : source_rels_(task.source.relations()),
      target_rels_(task.target.relations()),
      source_sigs_(approximate_relation_embeddings(task.source, store, task.functionality)),
      target_sigs_(approximate_relation_embeddings(task.target, store, task.functionality)) {
    const auto ns = source_rels_.size(), nt = target_rels_.size();
    same_.resize(ns, nt);
    cross_.resize(ns, nt);
    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < nt; ++j) {
            const auto& fi = source_sigs_[static_cast<std::size_t>(2 * i)];
            same_(i, j) = relation_align(fi, target_sigs_[static_cast<std::size_t>(2 * j)]);
            cross_(i, j) = relation_align(fi, target_sigs_[static_cast<std::size_t>(2 * j + 1)]);
        }
    }
}

double RelationAlignTable::align(RelationId source_rel, Orientation source_orient, RelationId target_rel,
                                 Orientation target_orient) const {
    if (!source_rels_.contains(source_rel) || !target_rels_.contains(target_rel)) {
        throw LookupError("relation pair (" + std::to_string(source_rel) + ", " + std::to_string(target_rel) +
                          ") is not source x target");
    }
    const auto i = source_rel - source_rels_.begin, j = target_rel - target_rels_.begin;
    return source_orient == target_orient ? same_(i, j) : cross_(i, j);
}

double edge_weight(const Edge& edge, const FunctionalityTable& functionality) {
    return edge.direction == Direction::out ? functionality.rel_f_inv(edge.relation)
                                            : functionality.rel_f(edge.relation);
}

Orientation edge_orientation(const Edge& edge) {
    return edge.direction == Direction::out ? Orientation::forward : Orientation::inverse;
}

double pair_match_score(const Edge& source_edge, const Edge& target_edge, const EmbeddingStore& store,
                        const FunctionalityTable& functionality, const RelationAlignTable& align) {
    const double w = edge_weight(source_edge, functionality) * edge_weight(target_edge, functionality);
    const double a = align.align(source_edge.relation, edge_orientation(source_edge), target_edge.relation,
                                 edge_orientation(target_edge));
    const double c = cosine(store.entity.value.row(source_edge.neighbor), store.entity.value.row(target_edge.neighbor));
    return w * a * c;
}

MatchResult match_scores(const Matrix& phi, std::span<const double> source_weights,
                         std::span<const double> target_weights, const MatchOptions& options) {
    MatchResult res;
    const auto n = phi.rows(), m = phi.cols();
    if (static_cast<std::size_t>(n) != source_weights.size() || static_cast<std::size_t>(m) != target_weights.size()) {
        throw Error("match_scores: weight count does not match the score matrix");
    }
    if (n == 0 || m == 0) {
        res.empty_neighborhood = true;
        return res;
    }
    auto pair = [&](Eigen::Index i, Eigen::Index j) {
        return MatchPair{static_cast<int>(i), static_cast<int>(j), phi(i, j),
                         source_weights[static_cast<std::size_t>(i)] * target_weights[static_cast<std::size_t>(j)]};
    };
    if (n <= m) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            for (Eigen::Index j = 1; j < m; ++j) {
                if (phi(i, j) > phi(i, best)) best = j;
            }
            res.psi.push_back(pair(i, best));
        }
    } else {
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::Index best = 0;
            for (Eigen::Index i = 1; i < n; ++i) {
                if (phi(i, j) > phi(best, j)) best = i;
            }
            res.psi.push_back(pair(best, j));
        }
    }

    double max_phi = res.psi.front().phi, sum_phi = 0.0;
    for (const auto& p : res.psi) {
        max_phi = std::max(max_phi, p.phi);
        sum_phi += p.phi;
        res.union_score += p.weight;
    }
    res.eta = std::max(options.eta_floor, 0.5 * (max_phi + sum_phi / static_cast<double>(res.psi.size())));
    for (const auto& p : res.psi) {
        if (options.inclusive_threshold ? p.phi >= res.eta : p.phi > res.eta) {
            res.theta.push_back(p);
            res.intersection += p.phi;
        }
    }
    res.prob = (res.theta.empty() || res.union_score <= 0.0) ? 0.0 : res.intersection / res.union_score;
    return res;
}

MatchResult match_neighborhoods(EntityId source, EntityId target, const AlignmentTask& task,
                                const EmbeddingStore& store, const RelationAlignTable& align,
                                const MatchOptions& options) {
    const auto ns = neighborhood(task.source, source);
    const auto nt = neighborhood(task.target, target);
    Matrix phi(static_cast<Eigen::Index>(ns.size()), static_cast<Eigen::Index>(nt.size()));
    std::vector<double> ws, wt;
    for (const auto& e : ns) ws.push_back(edge_weight(e, task.functionality));
    for (const auto& e : nt) wt.push_back(edge_weight(e, task.functionality));
    for (std::size_t i = 0; i < ns.size(); ++i) {
        for (std::size_t j = 0; j < nt.size(); ++j) {
            phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                pair_match_score(ns[i], nt[j], store, task.functionality, align);
        }
    }
    auto res = match_scores(phi, ws, wt, options);
    res.source = source;
    res.target = target;
    return res;
}

std::optional<Polarity> classify_evidence(double prob, double gamma_pos, double gamma_neg) {
    if (prob >= gamma_pos) return Polarity::positive;
    if (prob <= gamma_neg) return Polarity::negative;
    return std::nullopt;
}

std::vector<AlignmentEvidence> infer_evidence(std::span<const Link> candidates, const AlignmentTask& task,
                                              const EmbeddingStore& store, const RelationAlignTable& align,
                                              double gamma_pos, double gamma_neg, const MatchOptions& options) {
    std::vector<AlignmentEvidence> out;
    for (const auto& c : candidates) {
        const auto res = match_neighborhoods(c.source, c.target, task, store, align, options);
        if (auto pol = classify_evidence(res.prob, gamma_pos, gamma_neg)) {
            out.push_back({c.source, c.target, res.prob, *pol});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    return out;
}

void write_evidence(const std::vector<AlignmentEvidence>& evidence, const AlignmentTask& task,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << std::setprecision(6);
    for (const auto& e : evidence) {
        out << task.entity_uris.at(static_cast<std::size_t>(e.source)) << '\t'
            << task.entity_uris.at(static_cast<std::size_t>(e.target)) << '\t' << e.prob << '\t'
            << (e.polarity == Polarity::positive ? "positive" : "negative") << '\n';
    }
}

}  // namespace imea
