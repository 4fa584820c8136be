#include "imea/sampling.hpp"

#include <algorithm>

namespace imea {

SeedIndex::SeedIndex(const std::vector<Link>& seed) {
    for (const auto& l : seed) {
        map_[l.source] = l.target;
        map_[l.target] = l.source;
    }
}

EntityId SeedIndex::counterpart(EntityId e) const {
    auto it = map_.find(e);
    return it == map_.end() ? -1 : it->second;
}

NeighborSample sample_neighbors(const KnowledgeGraph& kg, EntityId e, std::size_t n, Rng& rng) {
    if (n == 0) throw SamplingError("neighbor count must be positive");
    const auto& out = kg.out_edges(e);
    const auto& in = kg.in_edges(e);
    const std::size_t degree = out.size() + in.size();
    if (degree == 0) throw SamplingError("entity " + std::to_string(e) + " has no neighbors");

    auto at = [&](std::size_t i) { return i < out.size() ? out[i].second : in[i - out.size()].second; };

    NeighborSample sample{e, {}};
    sample.neighbors.reserve(n);
    if (degree >= n) {
        // Partial Fisher-Yates over edge indices.
        std::vector<std::size_t> idx(degree);
        for (std::size_t i = 0; i < degree; ++i) idx[i] = i;
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, degree - 1);
            std::swap(idx[i], idx[pick(rng)]);
            sample.neighbors.push_back(at(idx[i]));
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, degree - 1);
        for (std::size_t i = 0; i < n; ++i) sample.neighbors.push_back(at(pick(rng)));
    }
    return sample;
}

namespace {

struct Step {
    EntityId next;
    bool bridge;
};

void collect_steps(const AlignmentTask& task, const SeedIndex& seeds, EntityId e, bool after_bridge,
                   bool inverse_edges, std::vector<Step>& steps) {
    steps.clear();
    const auto& kg = task.kg_of(e);
    for (const auto& [r, o] : kg.out_edges(e)) steps.push_back({o, false});
    if (inverse_edges) {
        for (const auto& [r, s] : kg.in_edges(e)) steps.push_back({s, false});
    }
    if (!after_bridge) {
        if (auto c = seeds.counterpart(e); c >= 0) steps.push_back({c, true});
    }
}

}  // namespace

std::vector<std::vector<EntityId>> generate_paths(const AlignmentTask& task, const SeedIndex& seeds,
                                                  const WalkOptions& options, Rng& rng) {
    if (options.length < 2) throw SamplingError("path length must be at least 2");
    std::vector<std::vector<EntityId>> paths;
    std::vector<Step> steps;
    std::bernoulli_distribution swap(options.swap_prob);
    const auto n = static_cast<EntityId>(task.num_entities());

    for (EntityId start = 0; start < n; ++start) {
        for (std::size_t w = 0; w < options.walks_per_entity; ++w) {
            std::vector<EntityId> path{start};
            bool after_bridge = false;
            while (path.size() < options.length) {
                collect_steps(task, seeds, path.back(), after_bridge, options.inverse_edges, steps);
                if (steps.empty()) break;
                std::uniform_int_distribution<std::size_t> pick(0, steps.size() - 1);
                const auto& s = steps[pick(rng)];
                path.push_back(s.next);
                after_bridge = s.bridge;
            }
            if (path.size() < options.length) continue;

            std::vector<EntityId> swapped = path;
            bool fired = false;
            for (auto& tok : swapped) {
                if (auto c = seeds.counterpart(tok); c >= 0 && swap(rng)) {
                    tok = c;
                    fired = true;
                }
            }
            paths.push_back(std::move(path));
            if (fired) paths.push_back(std::move(swapped));
        }
    }
    return paths;
}

bool is_valid_walk(const AlignmentTask& task, const SeedIndex& seeds, const std::vector<EntityId>& path,
                   bool inverse_edges) {
    auto has_edge = [](const auto& edges, EntityId target) {
        return std::any_of(edges.begin(), edges.end(), [&](const auto& p) { return p.second == target; });
    };
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const EntityId a = path[i], b = path[i + 1];
        if (seeds.counterpart(a) == b) continue;
        const auto& kg = task.kg_of(a);
        if (!kg.contains(b)) return false;
        if (has_edge(kg.out_edges(a), b)) continue;
        if (inverse_edges && has_edge(kg.in_edges(a), b)) continue;
        return false;
    }
    return true;
}

PathSample mask_path_at(std::vector<EntityId> path, std::size_t pos, const SeedIndex& seeds) {
    if (path.size() < 2) throw SamplingError("path must have at least 2 tokens");
    if (pos >= path.size()) throw SamplingError("mask position out of range");
    PathSample sample;
    sample.mask_pos = pos;
    sample.labels.push_back(path[pos]);
    if (auto c = seeds.counterpart(path[pos]); c >= 0) sample.labels.push_back(c);
    sample.tokens = std::move(path);
    return sample;
}

PathSample mask_path(std::vector<EntityId> path, const SeedIndex& seeds, Rng& rng) {
    if (path.size() < 2) throw SamplingError("path must have at least 2 tokens");
    std::uniform_int_distribution<std::size_t> pick(0, path.size() - 1);
    const auto pos = pick(rng);
    return mask_path_at(std::move(path), pos, seeds);
}

}  // namespace imea
