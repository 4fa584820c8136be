#include "imea/evaluation.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iomanip>

namespace imea {

Matrix normalize_rows(const Matrix& m) {
    Matrix out = m;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double n = out.row(r).norm();
        if (n > 0.0) out.row(r) /= n;
    }
    return out;
}

std::vector<std::size_t> rank_links(const Matrix& embeddings, const AlignmentTask& task, std::span<const Link> links,
                                    RankDirection direction) {
    const bool forward = direction == RankDirection::source_to_target;
    const IdRange candidates = forward ? task.target.entities() : task.source.entities();
    auto check = [&](EntityId e) {
        if (e < 0 || e >= embeddings.rows()) throw Error("no embedding for entity " + std::to_string(e));
    };
    check(candidates.end - 1);
    const Matrix cand = normalize_rows(embeddings.middleRows(candidates.begin, candidates.size()));

    std::vector<std::size_t> ranks;
    ranks.reserve(links.size());
    for (const auto& l : links) {
        const EntityId query = forward ? l.source : l.target;
        const EntityId truth = forward ? l.target : l.source;
        check(query);
        check(truth);
        if (!candidates.contains(truth)) throw Error("link target is not in the candidate KG");
        RowVector q = embeddings.row(query);
        if (const double n = q.norm(); n > 0.0) q /= n;
        const Eigen::VectorXd sims = cand * q.transpose();
        const auto t = static_cast<Eigen::Index>(truth - candidates.begin);
        const double st = sims(t);
        std::size_t rank = 1;
        for (Eigen::Index j = 0; j < sims.size(); ++j) {
            if (sims(j) > st || (sims(j) == st && j < t)) ++rank;
        }
        ranks.push_back(rank);
    }
    return ranks;
}

Metrics metrics_from_ranks(std::span<const std::size_t> ranks) {
    Metrics m;
    m.n_queries = ranks.size();
    if (ranks.empty()) return m;
    for (auto r : ranks) {
        m.hits_at_1 += r <= 1 ? 1.0 : 0.0;
        m.hits_at_5 += r <= 5 ? 1.0 : 0.0;
        m.mrr += 1.0 / static_cast<double>(r);
    }
    const auto n = static_cast<double>(ranks.size());
    m.hits_at_1 /= n;
    m.hits_at_5 /= n;
    m.mrr /= n;
    return m;
}

Metrics evaluate(const Matrix& embeddings, const AlignmentTask& task, std::span<const Link> links,
                 RankDirection direction) {
    if (links.empty()) throw Error("no links to evaluate");
    const auto ranks = rank_links(embeddings, task, links, direction);
    return metrics_from_ranks(ranks);
}

Metrics evaluate(const EmbeddingStore& store, const AlignmentTask& task, std::span<const Link> links,
                 RankDirection direction) {
    return evaluate(store.entity.value, task, links, direction);
}

Matrix entity_representations(const Model& model, const AlignmentTask& task, Representation rep) {
    Matrix out = model.store.entity.value;
    if (rep == Representation::input) return out;
    for (EntityId e = 0; e < static_cast<EntityId>(task.num_entities()); ++e) {
        const auto edges = neighborhood(task.kg_of(e), e);
        if (edges.empty()) continue;
        std::vector<EntityId> tokens;
        for (const auto& edge : edges) tokens.push_back(edge.neighbor);
        out.row(e) = neighborhood_context(encode(model, tokens, false));
    }
    return out;
}

void predict_alignment(const Matrix& embeddings, const AlignmentTask& task, const std::filesystem::path& path,
                       std::size_t top) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string() + ": " + std::strerror(errno));
    out << "# source_uri\trank\ttarget_uri\tsimilarity\n";
    const IdRange targets = task.target.entities();
    const Matrix cand = normalize_rows(embeddings.middleRows(targets.begin, targets.size()));
    const std::size_t keep = std::min<std::size_t>(top, static_cast<std::size_t>(targets.size()));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(targets.size()));
    out << std::setprecision(6);
    for (const auto& l : task.test) {
        RowVector q = embeddings.row(l.source);
        if (const double n = q.norm(); n > 0.0) q /= n;
        const Eigen::VectorXd sims = cand * q.transpose();
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<Eigen::Index>(j);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                          [&](Eigen::Index a, Eigen::Index b) { return sims(a) != sims(b) ? sims(a) > sims(b) : a < b; });
        for (std::size_t k = 0; k < keep; ++k) {
            out << task.entity_uris[static_cast<std::size_t>(l.source)] << '\t' << (k + 1) << '\t'
                << task.entity_uris[static_cast<std::size_t>(targets.begin + order[k])] << '\t' << sims(order[k])
                << '\n';
        }
    }
    if (!out) throw Error("failed writing " + path.string());
}

void write_metrics(const Metrics& m, std::ostream& out) {
    out << std::setprecision(6) << "hits@1\t" << m.hits_at_1 << "\nhits@5\t" << m.hits_at_5 << "\nmrr\t" << m.mrr
        << "\nn_queries\t" << m.n_queries << '\n';
}

void write_metrics(const Metrics& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_metrics(m, out);
}

}  // namespace imea
