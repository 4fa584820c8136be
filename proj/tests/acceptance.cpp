// End-to-end acceptance runner: one PASS/FAIL line per criterion.
// Usage: imea_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "oracles.hpp"

namespace imea {
namespace {

// Pinned tolerances and limits.
constexpr double kGradStep = 1e-4;
constexpr double kGradMaxRelError = 1e-4;
constexpr double kGradFloor = 1e-6;
constexpr double kGradSeconds = 30.0;
constexpr int kFunctionalityKgs = 100;
constexpr double kFunctionalitySeconds = 5.0;
constexpr int kHolisticPairs = 200;
constexpr double kHolisticSeconds = 10.0;
constexpr double kLabelSumTolerance = 1e-9;
constexpr int kPermutations = 20;
constexpr double kPermutationTolerance = 1e-6;
constexpr double kMirrorHits1 = 0.8;
constexpr double kMirrorMrr = 0.85;
constexpr double kMirrorSeconds = 600.0;
constexpr double kAblationSlack = 0.01;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome gradient_oracle() {
    const auto start = Clock::now();
    const auto task = oracle::toy_task();
    Rng rng(7);
    Model model({8, 1, 2, 32, static_cast<int>(task.num_entities()), static_cast<int>(task.num_relations())}, rng);
    std::ostringstream detail;
    double worst = 0.0;
    const std::pair<oracle::LossKind, const char*> kinds[] = {{oracle::LossKind::neighbor, "neighbor"},
                                                             {oracle::LossKind::path, "path"},
                                                             {oracle::LossKind::relation, "relation"},
                                                             {oracle::LossKind::combined, "combined"}};
    for (const auto& [kind, name] : kinds) {
        const auto r = oracle::gradient_check(task, model, kind, kGradStep, kGradFloor, 11);
        worst = std::max(worst, r.max_rel_error);
        detail << name << "=" << fmt("%.2e", r.max_rel_error) << " ";
    }
    const double secs = seconds_since(start);
    detail << fmt("(%zu params, %.1fs)", model.parameters().size(), secs);
    return {worst < kGradMaxRelError && secs < kGradSeconds, detail.str()};
}

Outcome functionality_oracle() {
    const auto start = Clock::now();
    Rng rng(21);
    int mismatches = 0;
    for (int k = 0; k < kFunctionalityKgs; ++k) {
        const int n = 2 + static_cast<int>(rng() % 20), nr = 1 + static_cast<int>(rng() % 5);
        const int m = nr + static_cast<int>(rng() % static_cast<std::uint64_t>(50 - nr + 1));
        const auto kg = oracle::random_kg(n, nr, m, rng);
        const auto brute = oracle::brute_functionality(kg.triples());
        const auto rel = compute_relation_functionality(kg);
        const auto ent = compute_entity_functionality(kg);
        auto same = [](const auto& got, const auto& want) {
            if (got.size() != want.size()) return false;
            for (const auto& [key, v] : want) {
                auto it = got.find(key);
                if (it == got.end() || it->second != v) return false;
            }
            return true;
        };
        if (!same(rel.f, brute.rel_f) || !same(rel.f_inv, brute.rel_f_inv) || !same(ent.f, brute.ent_f) ||
            !same(ent.f_inv, brute.ent_f_inv)) {
            ++mismatches;
        }
    }
    const double secs = seconds_since(start);
    return {mismatches == 0 && secs < kFunctionalitySeconds,
            fmt("%d/%d KGs mismatched (%.2fs)", mismatches, kFunctionalityKgs, secs)};
}

Outcome holistic_oracle() {
    const auto start = Clock::now();
    Rng rng(31);
    int mismatches = 0, out_of_range = 0;
    for (int t = 0; t < kHolisticPairs; ++t) {
        const auto c = oracle::random_holistic_case(rng);
        const RelationAlignTable align(c.task, c.store);
        const auto got = match_neighborhoods(c.source, c.target, c.task, c.store, align);
        const auto ref = oracle::reference_for(c, align);
        bool same = got.psi.size() == ref.psi.size() && got.theta.size() == ref.theta.size() &&
                    got.intersection == ref.intersection && got.union_score == ref.union_score &&
                    got.prob == ref.prob;
        for (std::size_t k = 0; same && k < ref.psi.size(); ++k) {
            same = got.psi[k].i == ref.psi[k].first && got.psi[k].j == ref.psi[k].second;
        }
        for (std::size_t k = 0; same && k < ref.theta.size(); ++k) {
            same = got.theta[k].i == ref.theta[k].first && got.theta[k].j == ref.theta[k].second;
        }
        mismatches += same ? 0 : 1;
        out_of_range += (got.prob >= 0.0 && got.prob <= 1.0) ? 0 : 1;
    }
    const double secs = seconds_since(start);
    return {mismatches == 0 && out_of_range == 0 && secs < kHolisticSeconds,
            fmt("%d/%d pairs mismatched, %d probs outside [0,1] (%.2fs)", mismatches, kHolisticPairs, out_of_range,
                secs)};
}

Outcome soft_label_fidelity() {
    SoftLabelVector base(5, 0.05);
    base.set(0, 0.8);
    const std::vector<AlignmentEvidence> ev = {{0, 1, 0.5, Polarity::positive}, {0, 2, 0.9, Polarity::positive}};
    const std::vector<double> expected = {0.8, 0.5, 0.8, 0.05, 0.05};
    const auto pre = edit_soft_labels(base, 0, ev, false).dense();
    const auto post = edit_soft_labels(base, 0, ev).dense();
    const double sum = std::accumulate(post.begin(), post.end(), 0.0);
    std::ostringstream d;
    d << "pre=[";
    for (std::size_t i = 0; i < pre.size(); ++i) d << (i ? "," : "") << pre[i];
    d << "] sum=" << fmt("%.17g", sum);
    return {pre == expected && std::abs(sum - 1.0) <= kLabelSumTolerance, d.str()};
}

Outcome permutation_invariance() {
    Rng rng(41);
    const Model model({32, 2, 4, 128, 50, 4}, rng);
    std::vector<EntityId> tokens = {3, 17, 22, 30, 44};
    const RowVector base = neighborhood_context(encode(model, tokens, false));
    double worst = 0.0;
    for (int i = 0; i < kPermutations; ++i) {
        std::shuffle(tokens.begin(), tokens.end(), rng);
        const RowVector c = neighborhood_context(encode(model, tokens, false));
        worst = std::max(worst, (c - base).cwiseAbs().maxCoeff());
    }
    return {worst <= kPermutationTolerance, fmt("max deviation %.2e over %d permutations", worst, kPermutations)};
}

SynthSpec mirror_spec(double dropout) {
    SynthSpec spec;
    spec.n_entities = 200;
    spec.n_relations = 8;
    spec.n_triples = 600;
    spec.triple_dropout = dropout;
    spec.seed_fraction = 0.2;
    spec.random_seed = 1;
    return spec;
}

// Desk-scale training setup for the synthetic mirror.
TrainConfig mirror_config(std::uint64_t seed, bool informed) {
    TrainConfig c;
    c.dim = 32;
    c.layers = 2;
    c.heads = 4;
    c.n_neighbors = 3;
    c.path_len = 5;
    c.epochs = 100;
    c.patience = 100;
    c.batch_size = 32;
    c.lr = 0.005;
    c.soft_label_s = 0.3;
    c.lambda_rel = 0.1;
    c.inverse_walks = true;
    c.walks_per_entity = 20;
    c.center_embeddings = true;
    c.informed = informed;
    c.informer.match.eta_floor = 0.3;
    c.informer.gamma_pos = 0.3;
    c.seed = seed;
    return c;
}

Metrics train_and_test(const AlignmentTask& task, const TrainConfig& config) {
    Trainer trainer(task, config);
    trainer.fit();
    return evaluate(trainer.model().store, task, task.test);
}

Outcome synthetic_mirror() {
    const auto start = Clock::now();
    const auto task = generate_synthetic_pair(mirror_spec(0.2));
    const auto m = train_and_test(task, mirror_config(1, true));
    const double secs = seconds_since(start);
    return {m.hits_at_1 >= kMirrorHits1 && m.mrr >= kMirrorMrr && secs <= kMirrorSeconds,
            fmt("hits@1=%.4f (>= %.2f) mrr=%.4f (>= %.2f) %.0fs", m.hits_at_1, kMirrorHits1, m.mrr, kMirrorMrr, secs)};
}

Outcome informing_ablation() {
    const auto task = generate_synthetic_pair(mirror_spec(0.3));
    bool per_seed = true;
    double sum_inf = 0.0, sum_plain = 0.0;
    std::ostringstream d;
    for (std::uint64_t seed : {1, 2, 3}) {
        const double inf = train_and_test(task, mirror_config(seed, true)).hits_at_1;
        const double plain = train_and_test(task, mirror_config(seed, false)).hits_at_1;
        per_seed = per_seed && inf >= plain - kAblationSlack;
        sum_inf += inf;
        sum_plain += plain;
        d << fmt("seed%d %.4f/%.4f ", static_cast<int>(seed), inf, plain);
    }
    d << fmt("mean informed %.4f vs uninformed %.4f", sum_inf / 3.0, sum_plain / 3.0);
    return {per_seed && sum_inf >= sum_plain, d.str()};
}

Outcome identity_sanity() {
    const auto task = make_task({"a", "b", "a'", "b'"}, {"r", "r'"}, {0, 2}, {0, 1}, {{0, 0, 1}}, {2, 4}, {1, 2},
                                {{2, 1, 3}}, {}, {}, {{0, 2}, {1, 3}});
    EmbeddingStore store;
    store.entity = Parameter("entity", Matrix{{0.3, -1.2}, {0.8, 0.4}, {0.3, -1.2}, {0.8, 0.4}});
    store.relation = Parameter("relation", Matrix::Zero(2, 2));
    store.mask = Parameter("mask", Matrix::Zero(1, 2));
    const double prob = match_neighborhoods(0, 2, task, store, RelationAlignTable(task, store)).prob;

    const auto mirror = generate_synthetic_pair(mirror_spec(0.2));
    Rng rng(51);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix emb(static_cast<Eigen::Index>(mirror.num_entities()), 32);
    for (Eigen::Index k = 0; k < emb.size(); ++k) emb.data()[k] = g(rng);
    for (const auto* links : {&mirror.seed, &mirror.valid, &mirror.test}) {
        for (const auto& l : *links) emb.row(l.target) = emb.row(l.source);
    }
    const double hits = evaluate(emb, mirror, mirror.test).hits_at_1;
    return {prob == 1.0 && hits == 1.0, fmt("prob=%.17g hits@1=%.4f", prob, hits)};
}

}  // namespace
}  // namespace imea

int main(int argc, char** argv) {
    using namespace imea;
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"gradient oracle", gradient_oracle},
        {"functionality oracle", functionality_oracle},
        {"holistic oracle", holistic_oracle},
        {"soft-label fidelity", soft_label_fidelity},
        {"permutation invariance", permutation_invariance},
        {"synthetic mirror end-to-end", synthetic_mirror},
        {"informing ablation", informing_ablation},
        {"identity sanity", identity_sanity},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!selected.empty() && !selected.contains(id)) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[k].first << ": "
                  << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
