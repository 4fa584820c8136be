#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "imea/evaluation.hpp"

namespace imea {

AlignmentTask generate_synthetic_pair(const SynthSpec& spec) {
    const int n = spec.n_entities, nr = spec.n_relations;
    if (n < 2 || nr < 1) throw Error("synthetic KG needs at least 2 entities and 1 relation");
    if (spec.n_triples < n - 1) {
        throw Error("infeasible synthetic spec: " + std::to_string(spec.n_triples) + " triples cannot connect " +
                    std::to_string(n) + " entities");
    }
    const double max_triples = static_cast<double>(n) * (n - 1) * nr;
    if (spec.n_triples > max_triples) throw Error("infeasible synthetic spec: too many triples");
    for (double f : {spec.triple_dropout, spec.seed_fraction, spec.valid_fraction}) {
        if (!(f >= 0.0 && f <= 1.0)) throw Error("synthetic fractions must be in [0, 1]");
    }
    if (spec.seed_fraction + spec.valid_fraction > 1.0) throw Error("seed and valid fractions exceed 1");

    Rng rng(spec.random_seed);
    std::uniform_int_distribution<int> pick_entity(0, n - 1), pick_relation(0, nr - 1);
    std::bernoulli_distribution coin(0.5);

    std::set<Triple> source;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 1; i < n; ++i) {
        const int a = order[static_cast<std::size_t>(i)];
        const int b = order[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, i - 1)(rng))];
        const int r = pick_relation(rng);
        source.insert(coin(rng) ? Triple{a, r, b} : Triple{b, r, a});
    }
    while (static_cast<int>(source.size()) < spec.n_triples) {
        const int s = pick_entity(rng), o = pick_entity(rng);
        if (s == o) continue;
        source.insert({s, pick_relation(rng), o});
    }

    std::vector<int> ent_perm(static_cast<std::size_t>(n)), rel_perm(static_cast<std::size_t>(nr));
    std::iota(ent_perm.begin(), ent_perm.end(), 0);
    std::iota(rel_perm.begin(), rel_perm.end(), 0);
    std::shuffle(ent_perm.begin(), ent_perm.end(), rng);
    std::shuffle(rel_perm.begin(), rel_perm.end(), rng);

    // Dropout in random order, never isolating an endpoint.
    std::vector<Triple> candidates(source.begin(), source.end());
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::vector<int> degree(static_cast<std::size_t>(n), 0);
    for (const auto& t : candidates) {
        ++degree[static_cast<std::size_t>(t.subject)];
        ++degree[static_cast<std::size_t>(t.object)];
    }
    std::bernoulli_distribution drop(spec.triple_dropout);
    std::vector<Triple> kept;
    for (const auto& t : candidates) {
        auto& ds = degree[static_cast<std::size_t>(t.subject)];
        auto& d_o = degree[static_cast<std::size_t>(t.object)];
        if (drop(rng) && ds > 1 && d_o > 1) {
            --ds;
            --d_o;
        } else {
            kept.push_back(t);
        }
    }

    // Relation vocabularies only hold relations that still have triples.
    auto compact = [nr](const std::vector<Triple>& triples, auto&& label) {
        std::vector<bool> used(static_cast<std::size_t>(nr), false);
        for (const auto& t : triples) used[static_cast<std::size_t>(label(t.relation))] = true;
        std::vector<int> ids(static_cast<std::size_t>(nr), -1);
        int count = 0;
        for (int p = 0; p < nr; ++p) {
            if (used[static_cast<std::size_t>(p)]) ids[static_cast<std::size_t>(p)] = count++;
        }
        return std::pair{ids, count};
    };
    const std::vector<Triple> source_list(source.begin(), source.end());
    const auto [source_rel, n_source_rel] = compact(source_list, [](int r) { return r; });
    const auto [target_rel, n_target_rel] =
        compact(kept, [&](int r) { return rel_perm[static_cast<std::size_t>(r)]; });

    std::vector<std::string> entity_uris, relation_uris;
    for (int e = 0; e < n; ++e) entity_uris.push_back("http://kg1.example.org/entity/E" + std::to_string(e));
    for (int k = 0; k < n; ++k) entity_uris.push_back("http://kg2.example.org/entity/T" + std::to_string(k));
    for (int r = 0; r < nr; ++r) {
        if (source_rel[static_cast<std::size_t>(r)] >= 0) {
            relation_uris.push_back("http://kg1.example.org/relation/R" + std::to_string(r));
        }
    }
    for (int p = 0; p < nr; ++p) {
        if (target_rel[static_cast<std::size_t>(p)] >= 0) {
            relation_uris.push_back("http://kg2.example.org/relation/P" + std::to_string(p));
        }
    }

    std::vector<Triple> source_triples;
    for (const auto& t : source_list) {
        source_triples.push_back({t.subject, source_rel[static_cast<std::size_t>(t.relation)], t.object});
    }
    auto target_entity = [&](int e) { return n + ent_perm[static_cast<std::size_t>(e)]; };
    std::vector<Triple> target;
    for (const auto& t : kept) {
        const int p = rel_perm[static_cast<std::size_t>(t.relation)];
        target.push_back({target_entity(t.subject), n_source_rel + target_rel[static_cast<std::size_t>(p)],
                          target_entity(t.object)});
    }

    std::vector<Link> links;
    for (int e = 0; e < n; ++e) links.push_back({e, target_entity(e)});
    std::shuffle(links.begin(), links.end(), rng);
    const auto n_seed = static_cast<std::size_t>(std::lround(spec.seed_fraction * n));
    const auto n_valid = static_cast<std::size_t>(std::lround(spec.valid_fraction * n));
    std::vector<Link> seed(links.begin(), links.begin() + static_cast<std::ptrdiff_t>(n_seed));
    std::vector<Link> valid(links.begin() + static_cast<std::ptrdiff_t>(n_seed),
                            links.begin() + static_cast<std::ptrdiff_t>(n_seed + n_valid));
    std::vector<Link> test(links.begin() + static_cast<std::ptrdiff_t>(n_seed + n_valid), links.end());

    return make_task(std::move(entity_uris), std::move(relation_uris), IdRange{0, n}, IdRange{0, n_source_rel},
                     std::move(source_triples), IdRange{n, 2 * n},
                     IdRange{n_source_rel, n_source_rel + n_target_rel}, std::move(target), std::move(seed), std::move(valid),
                     std::move(test));
}

}  // namespace imea
