#include "imea/informer.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "imea/evaluation.hpp"

namespace imea {

std::vector<Link> CandidateSet::links() const {
    std::vector<Link> out;
    for (const auto& [s, cands] : per_source) {
        for (const auto& c : cands) out.push_back({s, c.target});
    }
    return out;
}

CandidateSet select_candidates(const EmbeddingStore& store, std::span<const EntityId> sources,
                               std::span<const EntityId> targets, std::size_t k) {
    if (k == 0) throw Error("k must be at least 1");
    const auto& emb = store.entity.value;
    auto rows = [&](std::span<const EntityId> ids) {
        Matrix m(static_cast<Eigen::Index>(ids.size()), emb.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || ids[i] >= emb.rows()) throw LookupError("no embedding for entity " + std::to_string(ids[i]));
            m.row(static_cast<Eigen::Index>(i)) = emb.row(ids[i]);
        }
        return normalize_rows(m);
    };
    const Matrix sim = rows(sources) * rows(targets).transpose();

    CandidateSet out;
    const std::size_t keep = std::min(k, targets.size());
    std::vector<std::size_t> order(targets.size());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double sa = sim(r, static_cast<Eigen::Index>(a));
                              const double sb = sim(r, static_cast<Eigen::Index>(b));
                              return sa != sb ? sa > sb : targets[a] < targets[b];
                          });
        std::vector<Candidate> cands;
        for (std::size_t j = 0; j < keep; ++j) {
            cands.push_back({targets[order[j]], sim(r, static_cast<Eigen::Index>(order[j]))});
        }
        out.per_source.emplace_back(sources[i], std::move(cands));
    }
    return out;
}

CandidateSet select_candidates(const EmbeddingStore& store, const AlignmentTask& task, std::size_t k) {
    std::vector<EntityId> sources, targets;
    for (EntityId e = task.source.entities().begin; e < task.source.entities().end; ++e) sources.push_back(e);
    for (EntityId e = task.target.entities().begin; e < task.target.entities().end; ++e) targets.push_back(e);
    return select_candidates(store, sources, targets, k);
}

void EvidenceStore::add(const AlignmentEvidence& e) {
    all_.push_back(e);
    by_entity_[e.source].push_back(e);
    if (e.target != e.source) by_entity_[e.target].push_back(e);
}

std::span<const AlignmentEvidence> EvidenceStore::for_entity(EntityId e) const {
    auto it = by_entity_.find(e);
    if (it == by_entity_.end()) return {};
    return it->second;
}

std::size_t EvidenceStore::positives() const {
    return static_cast<std::size_t>(
        std::count_if(all_.begin(), all_.end(), [](const auto& e) { return e.polarity == Polarity::positive; }));
}

EntityId counterpart_of(const AlignmentEvidence& e, EntityId target) {
    if (e.source == target) return e.target;
    if (e.target == target) return e.source;
    return -1;
}

SoftLabelVector edit_soft_labels(SoftLabelVector base, EntityId target, std::span<const AlignmentEvidence> evidence,
                                 bool renormalize) {
    const double cap = base.mass(target);
    bool edited = false;
    for (const auto& e : evidence) {
        const EntityId c = counterpart_of(e, target);
        if (c < 0 || c == target) continue;
        base.set(c, e.polarity == Polarity::positive ? std::min(cap, e.prob) : 0.0);
        edited = true;
    }
    if (edited && renormalize) base.normalize();
    return base;
}

EvidenceStore informing_round(const AlignmentTask& task, const EmbeddingStore& store, const InformerConfig& config) {
    std::unordered_set<EntityId> seeded;
    if (config.exclude_seed) {
        for (const auto& l : task.seed) {
            seeded.insert(l.source);
            seeded.insert(l.target);
        }
    }
    auto collect = [&](const KnowledgeGraph& kg) {
        std::vector<EntityId> ids;
        for (EntityId e = kg.entities().begin; e < kg.entities().end; ++e) {
            if (!seeded.contains(e) && kg.degree(e) > 0) ids.push_back(e);
        }
        return ids;
    };
    const auto sources = collect(task.source);
    const auto targets = collect(task.target);

    std::vector<Link> pairs;
    if (!sources.empty() && !targets.empty()) {
        pairs = select_candidates(store, sources, targets, config.topk).links();
        if (config.bidirectional) {
            for (const auto& l : select_candidates(store, targets, sources, config.topk).links()) {
                pairs.push_back({l.target, l.source});
            }
            std::sort(pairs.begin(), pairs.end());
            pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        }
    }

    const RelationAlignTable align(task, store);
    EvidenceStore out;
    for (const auto& e : infer_evidence(pairs, task, store, align, config.gamma_pos, config.gamma_neg, config.match)) {
        out.add(e);
    }
    return out;
}

}  // namespace imea
