// imea: command-line front end for preparing data, training, evaluating and
// exporting alignments.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

#include "imea/config.hpp"
#include "imea/evaluation.hpp"
#include "imea/holistic.hpp"
#include "imea/informer.hpp"
#include "imea/kg.hpp"
#include "imea/training.hpp"

namespace fs = std::filesystem;
using namespace imea;

namespace {

void write_functionality(const AlignmentTask& task, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    const auto& f = task.functionality;
    out << std::setprecision(10);
    for (RelationId r = 0; r < static_cast<RelationId>(task.num_relations()); ++r) {
        out << "relation\t" << task.relation_uris[static_cast<std::size_t>(r)] << '\t' << f.rel_f(r) << '\t'
            << f.rel_f_inv(r) << '\n';
    }
    for (EntityId e = 0; e < static_cast<EntityId>(task.num_entities()); ++e) {
        out << "entity\t" << task.entity_uris[static_cast<std::size_t>(e)] << '\t';
        if (f.has_ent_f(e)) {
            out << f.ent_f(e);
        } else {
            out << '-';
        }
        out << '\t';
        if (f.has_ent_f_inv(e)) {
            out << f.ent_f_inv(e);
        } else {
            out << '-';
        }
        out << '\n';
    }
}

Model load_model(const fs::path& model_dir, const AlignmentTask& task) {
    check_vocab(task, model_dir / "vocab.tsv");
    return load_checkpoint(model_dir / "model.ckpt");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-context entity alignment with holistic reasoning"};
    app.require_subcommand(1);

    std::string data, fold = "1", config_path, out, model_dir, split = "test", direction = "s2t",
                representation = "input", metrics_path, evidence_path;
    std::size_t top = 10;

    auto* prepare = app.add_subcommand("prepare", "Compute and cache functionality tables");
    prepare->add_option("--data", data, "OpenEA dataset directory")->required();
    prepare->add_option("--fold", fold, "Fold number or path relative to the dataset");

    auto* train = app.add_subcommand("train", "Train the encoder");
    train->add_option("--data", data)->required();
    train->add_option("--fold", fold);
    train->add_option("--config", config_path, "key = value configuration file")->required();
    train->add_option("--out", out, "Model output directory")->required();

    auto* eval = app.add_subcommand("eval", "Hits@1, Hits@5 and MRR on a split");
    eval->add_option("--model", model_dir)->required();
    eval->add_option("--data", data)->required();
    eval->add_option("--fold", fold);
    eval->add_option("--split", split)->check(CLI::IsMember({"valid", "test"}));
    eval->add_option("--direction", direction)->check(CLI::IsMember({"s2t", "t2s"}));
    eval->add_option("--representation", representation)->check(CLI::IsMember({"input", "pooled"}));
    eval->add_option("--metrics", metrics_path, "Key-value metrics file (default MODEL/metrics_SPLIT.txt)");

    auto* infer = app.add_subcommand("infer", "Write ranked predictions for the test sources");
    infer->add_option("--model", model_dir)->required();
    infer->add_option("--data", data)->required();
    infer->add_option("--fold", fold);
    infer->add_option("--out", out)->required();
    infer->add_option("--top", top);
    infer->add_option("--evidence", evidence_path, "Also export holistic evidence to this file");

    SynthSpec spec;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic KG pair in OpenEA layout");
    synth->add_option("--entities", spec.n_entities)->required();
    synth->add_option("--triples", spec.n_triples)->required();
    synth->add_option("--relations", spec.n_relations);
    synth->add_option("--dropout", spec.triple_dropout)->required();
    synth->add_option("--seed-frac", spec.seed_fraction)->required();
    synth->add_option("--seed", spec.random_seed);
    synth->add_option("--out", out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*prepare) {
            const auto task = load_openea(data, fold);
            write_functionality(task, fs::path(data) / "functionality.tsv");
            std::cout << "entities\t" << task.num_entities() << "\nrelations\t" << task.num_relations()
                      << "\ntriples\t" << task.source.triples().size() + task.target.triples().size() << '\n';
        } else if (*train) {
            const auto task = load_openea(data, fold);
            const auto config = load_config(config_path);
            fs::create_directories(out);
            {
                std::ofstream cfg(fs::path(out) / "config.txt");
                cfg << format_config(config);
            }
            std::ofstream log(fs::path(out) / "train.log");
            Trainer trainer(task, config);
            struct Tee : std::streambuf {
                std::streambuf *a, *b;
                Tee(std::streambuf* x, std::streambuf* y) : a(x), b(y) {}
                int overflow(int c) override {
                    if (c == EOF) return !EOF;
                    return (a->sputc(static_cast<char>(c)) == EOF || b->sputc(static_cast<char>(c)) == EOF) ? EOF : c;
                }
                int sync() override { return (a->pubsync() | b->pubsync()) == 0 ? 0 : -1; }
            } tee(std::cout.rdbuf(), log.rdbuf());
            std::ostream both(&tee);
            trainer.fit(&both);
            save_checkpoint(trainer.model(), fs::path(out) / "model.ckpt");
            save_vocab(task, fs::path(out) / "vocab.tsv");
        } else if (*eval) {
            const auto task = load_openea(data, fold);
            const auto model = load_model(model_dir, task);
            const auto rep = representation == "input" ? Representation::input : Representation::encoder_pooled;
            const auto& links = split == "valid" ? task.valid : task.test;
            const auto m = evaluate(entity_representations(model, task, rep), task, links,
                                    direction == "s2t" ? RankDirection::source_to_target
                                                       : RankDirection::target_to_source);
            write_metrics(m, std::cout);
            write_metrics(m, metrics_path.empty() ? fs::path(model_dir) / ("metrics_" + split + ".txt")
                                                  : fs::path(metrics_path));
        } else if (*infer) {
            const auto task = load_openea(data, fold);
            const auto model = load_model(model_dir, task);
            predict_alignment(model.store.entity.value, task, out, top);
            if (!evidence_path.empty()) {
                const auto config = load_config(fs::path(model_dir) / "config.txt");
                write_evidence(informing_round(task, model.store, config.informer).all(), task, evidence_path);
            }
        } else if (*synth) {
            const auto task = generate_synthetic_pair(spec);
            save_openea(task, out, fold);
            std::cout << "entities\t" << spec.n_entities << "\nseed\t" << task.seed.size() << "\nvalid\t"
                      << task.valid.size() << "\ntest\t" << task.test.size() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
