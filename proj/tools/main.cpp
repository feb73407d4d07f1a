#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lg4av/checkpoint.hpp"
#include "lg4av/corpus.hpp"
#include "lg4av/error.hpp"
#include "lg4av/experiment.hpp"
#include "lg4av/synthetic.hpp"

namespace fs = std::filesystem;
using namespace lg4av;

namespace {

void print_report(const std::string& label, const eval::MetricReport& r) {
    std::printf("%-24s auc %.4f  acc %.4f  f1 %.4f  n %zu  t %.4f\n", label.c_str(), r.auc, r.accuracy, r.f1,
                r.n_examples, r.threshold_used);
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

void add_encoder_options(CLI::App* app, encoder::EncoderConfig& c) {
    app->add_option("--hidden", c.hidden, "encoder width h")->capture_default_str();
    app->add_option("--heads", c.heads, "attention heads")->capture_default_str();
    app->add_option("--layers", c.layers, "encoder blocks")->capture_default_str();
    app->add_option("--max-len", c.max_len, "maximum sequence length including the classification token")
        ->capture_default_str();
    app->add_option("--out-dim", c.out_dim, "document representation size s")->capture_default_str();
}

void add_prepare_options(CLI::App* app, experiment::PrepareConfig& c) {
    app->add_option("--train-until", c.split.train_until, "last training year")->capture_default_str();
    app->add_option("--val-year", c.split.val_year, "validation year")->capture_default_str();
    app->add_option("--test-from", c.split.test_from, "first test year")->capture_default_str();
    app->add_option("--k", c.k, "propagation depth")->capture_default_str();
    app->add_option("--vocab-min-freq", c.vocab_min_freq)->capture_default_str();
    app->add_option("--vocab-max-size", c.vocab_max_size)->capture_default_str();
    app->add_option("--encoder-seed", c.encoder_seed, "seed of the shared initial encoder")->capture_default_str();
    app->add_option("--data-seed", c.data_seed, "seed of validation/test negatives")->capture_default_str();
    add_encoder_options(app, c.encoder);
}

void add_train_options(CLI::App* app, model::TrainConfig& c) {
    app->add_option("--epochs", c.epochs)->capture_default_str();
    app->add_option("--lr", c.lr, "peak learning rate, decayed linearly to 0")->capture_default_str();
    app->add_option("--weight-decay", c.weight_decay)->capture_default_str();
    app->add_option("--batch-size", c.batch_size)->capture_default_str();
    app->add_option("--grad-accum", c.grad_accum)->capture_default_str();
    app->add_option("--dropout", c.dropout)->capture_default_str();
}

model::Variant parse_variant(const std::string& s) { return model::variant_from_string(s); }

// Reports of every run directory below `dir` (or `dir` itself), ordered by seed.
std::vector<std::pair<std::uint64_t, eval::MetricReport>> collect_reports(const fs::path& dir,
                                                                          const std::string& split) {
    std::vector<fs::path> files;
    if (fs::exists(dir / "report.json")) {
        files.push_back(dir / "report.json");
    } else {
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_directory() && fs::exists(e.path() / "report.json")) files.push_back(e.path() / "report.json");
        }
    }
    std::vector<std::pair<std::uint64_t, eval::MetricReport>> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        const auto j = nlohmann::json::parse(in);
        if (!j.contains("seed")) throw Error(f.string() + ": not a run report");
        const auto seed = j.at("seed").get<std::uint64_t>();
        out.emplace_back(seed, experiment::read_report(f, split));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Authorship verification with co-author graphs and author-specific classification tokens"};
    app.set_config("--config", "", "TOML/INI file with option values");
    app.require_subcommand(1);

    // generate
    synth::SyntheticSpec spec;
    fs::path gen_out;
    auto* gen = app.add_subcommand("generate", "write a synthetic topic-structured corpus");
    gen->add_option("--out", gen_out, "corpus JSONL")->required();
    gen->add_option("--topics", spec.n_topics)->capture_default_str();
    gen->add_option("--authors-per-topic", spec.authors_per_topic)->capture_default_str();
    gen->add_option("--vocab-per-topic", spec.vocab_per_topic)->capture_default_str();
    gen->add_option("--shared-vocab", spec.shared_vocab)->capture_default_str();
    gen->add_option("--docs-per-author", spec.docs_per_author)->capture_default_str();
    gen->add_option("--new-authors-per-topic", spec.new_authors_per_topic)->capture_default_str();
    gen->add_option("--intra-edge-prob", spec.intra_topic_edge_prob)->capture_default_str();
    gen->add_option("--cross-edge-prob", spec.cross_topic_edge_prob)->capture_default_str();
    gen->add_option("--coauthor-prob", spec.coauthor_prob)->capture_default_str();
    gen->add_option("--max-coauthors", spec.max_coauthors)->capture_default_str();
    gen->add_option("--noise-rate", spec.noise_rate, "share of words from the shared block")->capture_default_str();
    gen->add_option("--signature-size", spec.signature_size)->capture_default_str();
    gen->add_option("--signature-rate", spec.signature_rate)->capture_default_str();
    gen->add_option("--drift-rate", spec.drift_rate)->capture_default_str();
    gen->add_option("--title-words", spec.title_words)->capture_default_str();
    gen->add_option("--abstract-words", spec.abstract_words)->capture_default_str();
    gen->add_option("--seed", spec.seed)->capture_default_str();

    // prepare
    experiment::PrepareConfig prep_cfg;
    fs::path prep_corpus, prep_out;
    auto* prep = app.add_subcommand("prepare", "split, build the graph, compute and propagate author features");
    prep->add_option("--corpus", prep_corpus)->required()->check(CLI::ExistingFile);
    prep->add_option("--out", prep_out, "prepared directory")->required();
    add_prepare_options(prep, prep_cfg);

    // train
    model::TrainConfig train_cfg;
    fs::path train_prepared, train_out;
    std::string train_variant = "full";
    int train_k = -1;
    auto* trn = app.add_subcommand("train", "train one variant with one seed");
    trn->add_option("--prepared", train_prepared)->required()->check(CLI::ExistingDirectory);
    trn->add_option("--out", train_out, "run directory")->required();
    trn->add_option("--variant", train_variant, "full, k0 or frozen")->capture_default_str();
    trn->add_option("--k", train_k, "propagation depth (default: the prepared depth)");
    trn->add_option("--seed", train_cfg.seed)->capture_default_str();
    add_train_options(trn, train_cfg);

    // evaluate
    fs::path ev_prepared, ev_ckpt, ev_out;
    std::string ev_split = "test";
    auto* ev = app.add_subcommand("evaluate", "score a checkpoint on the validation or test pairs");
    ev->add_option("--prepared", ev_prepared)->required()->check(CLI::ExistingDirectory);
    ev->add_option("--checkpoint", ev_ckpt)->required()->check(CLI::ExistingFile);
    ev->add_option("--split", ev_split)->check(CLI::IsMember({"val", "test"}))->capture_default_str();
    ev->add_option("--out", ev_out, "report JSON");

    // baseline
    fs::path bl_prepared, bl_out;
    auto* bl = app.add_subcommand("baseline", "fit, tune and evaluate the character n-gram baseline");
    bl->add_option("--prepared", bl_prepared)->required()->check(CLI::ExistingDirectory);
    bl->add_option("--out", bl_out, "output directory")->required();

    // new-authors
    fs::path na_prepared, na_ckpt, na_out;
    auto* na = app.add_subcommand("new-authors", "evaluate a trained checkpoint on authors unseen in training");
    na->add_option("--prepared", na_prepared)->required()->check(CLI::ExistingDirectory);
    na->add_option("--checkpoint", na_ckpt)->required()->check(CLI::ExistingFile);
    na->add_option("--out", na_out, "report JSON");

    // compare
    fs::path cmp_a, cmp_b;
    std::string cmp_split = "test";
    auto* cmp = app.add_subcommand("compare", "paired t-test between two sets of runs, paired by seed");
    cmp->add_option("a", cmp_a, "directory of run directories")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("b", cmp_b, "directory of run directories")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("--split", cmp_split)->check(CLI::IsMember({"val", "test"}))->capture_default_str();

    // experiment
    experiment::ExperimentConfig exp_cfg;
    std::size_t exp_seed_count = 10;
    std::vector<std::string> exp_variants = {"full", "frozen"};
    bool exp_no_baseline = false, exp_no_new = false, exp_no_ckpt = false;
    auto* exp = app.add_subcommand("experiment", "the whole pipeline over variants and seeds");
    exp->add_option("--corpus", exp_cfg.corpus)->required()->check(CLI::ExistingFile);
    exp->add_option("--out", exp_cfg.out_dir)->required();
    exp->add_option("--seeds", exp_seed_count, "runs per variant, seeds 0..n-1")->capture_default_str();
    exp->add_option("--variants", exp_variants)->delimiter(',')->capture_default_str();
    exp->add_flag("--no-baseline", exp_no_baseline);
    exp->add_flag("--no-new-authors", exp_no_new);
    exp->add_flag("--no-checkpoints", exp_no_ckpt);
    add_prepare_options(exp, exp_cfg.prepare);
    add_train_options(exp, exp_cfg.train);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto docs = synth::generate_synthetic(spec);
            if (gen_out.has_parent_path()) fs::create_directories(gen_out.parent_path());
            std::ofstream out(gen_out, std::ios::binary);
            corpus::write_corpus(out, docs);
            std::printf("%zu documents -> %s\n", docs.size(), gen_out.c_str());
        } else if (*prep) {
            auto p = experiment::prepare(corpus::load_corpus(prep_corpus), prep_cfg);
            experiment::save_prepared(p, prep_corpus, prep_out);
            std::printf("authors %zu  edges %zu  train docs %zu  val pairs %zu  test pairs %zu\n", p.graph.order(),
                        p.graph.size(), p.train_pool.size(), p.val_examples.pairs.size(),
                        p.test_examples.pairs.size());
        } else if (*trn) {
            const auto p = experiment::load_prepared(train_prepared);
            const int k = train_k < 0 ? p.base.k() : train_k;
            const auto r = experiment::run_training(p, parse_variant(train_variant), k, train_cfg);
            experiment::save_run(r, train_out);
            for (std::size_t e = 0; e < r.training.epoch_loss.size(); ++e) {
                std::printf("epoch %zu  loss %.6f\n", e + 1, r.training.epoch_loss[e]);
            }
            print_report("val", r.val);
            print_report("test", r.test);
        } else if (*ev) {
            const auto p = experiment::load_prepared(ev_prepared);
            const auto m = checkpoint::load(ev_ckpt);
            const auto& examples = ev_split == "val" ? p.val_examples : p.test_examples;
            const auto r = experiment::evaluate_model(m, p.index, examples);
            print_report(ev_split, r);
            if (!ev_out.empty()) write_file(ev_out, experiment::report_json(r));
        } else if (*bl) {
            const auto p = experiment::load_prepared(bl_prepared);
            const auto b = experiment::run_baseline(p);
            std::printf("n* %d  t* %.6f\n", b.tuned.n, b.tuned.threshold);
            print_report("val", b.val);
            print_report("test", b.test);
            write_file(bl_out / "tuned.json", ngram::dump_json(b.tuned) + "\n");
            write_file(bl_out / "report_val.json", experiment::report_json(b.val));
            write_file(bl_out / "report_test.json", experiment::report_json(b.test));
        } else if (*na) {
            const auto p = experiment::load_prepared(na_prepared);
            const auto setup = experiment::new_author_setup(p);
            std::printf("new authors %zu (%zu with old co-authors)  test pairs %zu\n", setup.new_authors.size(),
                        setup.with_old_neighbors, setup.test_examples.pairs.size());
            const auto r = experiment::evaluate_new_authors(p, setup, checkpoint::load(na_ckpt));
            print_report("new authors", r);
            if (!na_out.empty()) write_file(na_out, experiment::report_json(r));
        } else if (*cmp) {
            const auto a = collect_reports(cmp_a, cmp_split);
            const auto b = collect_reports(cmp_b, cmp_split);
            if (a.size() != b.size()) throw Error("run sets differ in size");
            std::vector<eval::MetricReport> ra, rb;
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a[i].first != b[i].first) throw Error("seed lists differ");
                ra.push_back(a[i].second);
                rb.push_back(b[i].second);
            }
            std::printf("%-10s %10s %10s %10s %10s\n", "metric", "mean a", "mean b", "t", "p");
            for (const auto& c : experiment::compare_reports(ra, rb)) {
                if (c.test.degenerate) {
                    std::printf("%-10s %10.4f %10.4f %10s %10s\n", c.metric.c_str(), c.mean_a, c.mean_b, "degenerate",
                                "-");
                } else {
                    std::printf("%-10s %10.4f %10.4f %10.4f %10.4g\n", c.metric.c_str(), c.mean_a, c.mean_b, c.test.t,
                                c.test.p_two_sided);
                }
            }
        } else if (*exp) {
            exp_cfg.seeds.clear();
            for (std::size_t s = 0; s < exp_seed_count; ++s) exp_cfg.seeds.push_back(s);
            exp_cfg.variants.clear();
            for (const auto& v : exp_variants) exp_cfg.variants.push_back(parse_variant(v));
            exp_cfg.baseline = !exp_no_baseline;
            exp_cfg.new_authors = !exp_no_new;
            exp_cfg.write_checkpoints = !exp_no_ckpt;
            exp_cfg.progress = [](const std::string& msg) {
                std::printf("%s\n", msg.c_str());
                std::fflush(stdout);
            };
            const auto s = experiment::run_experiment(exp_cfg);
            for (const auto& [variant, reports] : s.test_reports) {
                std::printf("%-10s mean test auc %.4f over %zu runs\n", model::to_string(variant).c_str(),
                            experiment::mean_auc(reports), reports.size());
                if (s.new_author_reports.contains(variant)) {
                    std::printf("%-10s mean new-author auc %.4f\n", model::to_string(variant).c_str(),
                                experiment::mean_auc(s.new_author_reports.at(variant)));
                }
            }
            if (s.baseline) print_report("n-gram test", s.baseline->test);
            if (s.baseline_new_authors) print_report("n-gram new authors", *s.baseline_new_authors);
            std::printf("summary -> %s\n", (exp_cfg.out_dir / "summary.json").c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
