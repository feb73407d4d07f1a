#include "lg4av/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lg4av/checkpoint.hpp"
#include "lg4av/error.hpp"
#include "lg4av/random.hpp"

namespace lg4av::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

corpus::DocIdSet docs_with_author_in(const corpus::AuthorshipIndex& index, const corpus::DocIdSet& docs,
                                     const std::set<AuthorId>& authors) {
    corpus::DocIdSet out;
    for (const auto& d : docs) {
        const auto& doc = index.doc(d);
        if (std::any_of(doc.authors.begin(), doc.authors.end(), [&](const auto& a) { return authors.contains(a); })) {
            out.insert(d);
        }
    }
    return out;
}

json encoder_config_json(const encoder::EncoderConfig& c) {
    return {{"hidden", c.hidden}, {"heads", c.heads},     {"layers", c.layers},  {"ffn", c.ffn},
            {"max_len", c.max_len}, {"out_dim", c.out_dim}, {"ln_eps", c.ln_eps}, {"init_std", c.init_std}};
}

encoder::EncoderConfig encoder_config_from(const json& j) {
    encoder::EncoderConfig c;
    c.hidden = j.at("hidden");
    c.heads = j.at("heads");
    c.layers = j.at("layers");
    c.ffn = j.at("ffn");
    c.max_len = j.at("max_len");
    c.out_dim = j.at("out_dim");
    c.ln_eps = j.at("ln_eps");
    c.init_std = j.at("init_std");
    return c;
}

json report_to_json(const eval::MetricReport& r) {
    return {{"auc", r.auc}, {"accuracy", r.accuracy}, {"f1", r.f1}, {"n_examples", r.n_examples},
            {"threshold", r.threshold_used}};
}

eval::MetricReport report_from_json(const json& j) {
    eval::MetricReport r;
    r.auc = j.at("auc");
    r.accuracy = j.at("accuracy");
    r.f1 = j.at("f1");
    r.n_examples = j.at("n_examples");
    r.threshold_used = j.at("threshold");
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

corpus::ExampleSet read_examples_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return corpus::read_examples(in);
}

std::vector<ngram::ScoredPair> scored_pairs(const corpus::AuthorshipIndex& index, const corpus::ExampleSet& ex) {
    std::vector<ngram::ScoredPair> out;
    out.reserve(ex.pairs.size());
    for (const auto& p : ex.pairs) out.push_back({p.author, index.doc(p.doc).body, p.label});
    return out;
}

std::vector<int> labels_of(const corpus::ExampleSet& ex) {
    std::vector<int> y;
    y.reserve(ex.pairs.size());
    for (const auto& p : ex.pairs) y.push_back(p.label);
    return y;
}

}  // namespace

std::set<AuthorId> Prepared::authors() const {
    return {graph.node_ids().begin(), graph.node_ids().end()};
}

Prepared prepare(corpus::AuthorshipIndex index, const PrepareConfig& cfg) {
    cfg.split.validate();
    Prepared p;
    p.config = cfg;
    p.index = std::move(index);
    p.split = corpus::temporal_split(p.index, cfg.split);
    p.graph = graph::largest_connected_component(graph::build_coauthor_graph(p.index, cfg.split.train_until));
    const auto authors = p.authors();
    p.train_pool = docs_with_author_in(p.index, p.split.train, authors);
    p.val_pool = docs_with_author_in(p.index, p.split.val, authors);
    p.test_pool = docs_with_author_in(p.index, p.split.test, authors);

    std::vector<std::string> bodies;
    for (const auto& d : p.train_pool) bodies.push_back(p.index.doc(d).body);
    auto vocab = encoder::build_vocabulary(bodies, cfg.vocab_min_freq, cfg.vocab_max_size, p.graph.node_ids());
    auto enc = encoder::init_encoder(cfg.encoder, vocab, cfg.encoder_seed);
    const Matrix raw = model::mean_cls_features(enc, vocab, p.index, p.graph.node_ids(), p.train_pool);
    const Matrix x = model::fit_column_scaling(raw).apply(raw);
    auto features = graph::propagate(graph::normalize_adjacency(p.graph), x, cfg.k);
    p.base = model::Lg4avModel(std::move(vocab), std::move(enc), std::move(features), model::Variant::full);

    if (!p.val_pool.empty()) {
        p.val_examples = corpus::build_examples(p.index, authors, p.val_pool, corpus::Split::val,
                                                derive_seed(cfg.data_seed, "val"));
    }
    if (!p.test_pool.empty()) {
        p.test_examples = corpus::build_examples(p.index, authors, p.test_pool, corpus::Split::test,
                                                 derive_seed(cfg.data_seed, "test"));
    }
    return p;
}

void save_prepared(const Prepared& p, const fs::path& corpus_path, const fs::path& dir) {
    fs::create_directories(dir);
    checkpoint::save(dir / "base.ckpt", p.base);
    {
        std::ofstream out(dir / "vocab.txt");
        encoder::write_vocabulary(out, p.base.vocab());
    }
    {
        std::ofstream out(dir / "nodes.txt");
        graph::write_node_manifest(out, p.graph);
    }
    {
        std::ofstream out(dir / "graph.tsv");
        graph::write_edge_list(out, p.graph);
    }
    {
        std::ofstream out(dir / "examples_val.jsonl");
        corpus::write_examples(out, p.val_examples);
    }
    {
        std::ofstream out(dir / "examples_test.jsonl");
        corpus::write_examples(out, p.test_examples);
    }
    const auto& c = p.config;
    json j = {{"corpus", fs::absolute(corpus_path).string()},
              {"split", {{"train_until", c.split.train_until}, {"val_year", c.split.val_year}, {"test_from", c.split.test_from}}},
              {"vocab_min_freq", c.vocab_min_freq},
              {"vocab_max_size", c.vocab_max_size},
              {"encoder", encoder_config_json(c.encoder)},
              {"encoder_seed", c.encoder_seed},
              {"k", c.k},
              {"data_seed", c.data_seed},
              {"authors", p.graph.order()},
              {"edges", p.graph.size()},
              {"train_docs", p.train_pool.size()},
              {"val_examples", p.val_examples.pairs.size()},
              {"test_examples", p.test_examples.pairs.size()}};
    write_text(dir / "prepare.json", j.dump(2) + "\n");
}

Prepared load_prepared(const fs::path& dir) {
    std::ifstream in(dir / "prepare.json");
    if (!in) throw Error("not a prepared directory: " + dir.string());
    const json j = json::parse(in);
    PrepareConfig cfg;
    cfg.split.train_until = j.at("split").at("train_until");
    cfg.split.val_year = j.at("split").at("val_year");
    cfg.split.test_from = j.at("split").at("test_from");
    cfg.vocab_min_freq = j.at("vocab_min_freq");
    cfg.vocab_max_size = j.at("vocab_max_size");
    cfg.encoder = encoder_config_from(j.at("encoder"));
    cfg.encoder_seed = j.at("encoder_seed");
    cfg.k = j.at("k");
    cfg.data_seed = j.at("data_seed");

    Prepared p;
    p.config = cfg;
    p.index = corpus::load_corpus(fs::path(j.at("corpus").get<std::string>()));
    p.split = corpus::temporal_split(p.index, cfg.split);
    {
        std::ifstream nodes(dir / "nodes.txt");
        std::ifstream edges(dir / "graph.tsv");
        p.graph = graph::read_graph(nodes, edges);
    }
    const auto authors = p.authors();
    p.train_pool = docs_with_author_in(p.index, p.split.train, authors);
    p.val_pool = docs_with_author_in(p.index, p.split.val, authors);
    p.test_pool = docs_with_author_in(p.index, p.split.test, authors);
    p.base = checkpoint::load(dir / "base.ckpt");
    p.val_examples = read_examples_file(dir / "examples_val.jsonl");
    p.test_examples = read_examples_file(dir / "examples_test.jsonl");
    p.val_examples.seed = derive_seed(p.config.data_seed, "val");
    p.test_examples.seed = derive_seed(p.config.data_seed, "test");
    return p;
}

eval::MetricReport evaluate_model(const model::Lg4avModel& m, const corpus::AuthorshipIndex& index,
                                  const corpus::ExampleSet& examples, double threshold) {
    std::vector<std::pair<AuthorId, corpus::Document>> pairs;
    pairs.reserve(examples.pairs.size());
    for (const auto& e : examples.pairs) pairs.emplace_back(e.author, index.doc(e.doc));
    const auto scores = model::verify(m, pairs);
    return eval::evaluate_scores(scores, labels_of(examples), threshold);
}

RunResult run_training(const Prepared& p, model::Variant variant, int k, const model::TrainConfig& cfg) {
    if (variant == model::Variant::k0) k = 0;
    if (k < 0 || k > p.base.k()) {
        throw Error("k = " + std::to_string(k) + " exceeds the prepared propagation depth " + std::to_string(p.base.k()));
    }
    auto features = p.base.features();
    features.matrices.resize(static_cast<std::size_t>(k) + 1);
    features.k = k;

    RunResult r;
    r.variant = variant;
    r.seed = cfg.seed;
    r.k = k;
    r.model = model::Lg4avModel(p.base.vocab(), p.base.encoder(), std::move(features), variant);
    const auto train_set = corpus::build_examples(p.index, p.authors(), p.train_pool, corpus::Split::train,
                                                  derive_seed(cfg.seed, "train"));
    const auto examples = model::make_training_examples(r.model, p.index, train_set);
    r.training = model::train(r.model, examples, cfg);
    r.trainable_parameters = model::trainable_parameter_count(r.model);
    if (!p.val_examples.pairs.empty()) r.val = evaluate_model(r.model, p.index, p.val_examples);
    if (!p.test_examples.pairs.empty()) r.test = evaluate_model(r.model, p.index, p.test_examples);
    return r;
}

BaselineResult run_baseline(const Prepared& p, const std::vector<int>& n_grid) {
    std::vector<std::string> corpus_bodies;
    for (const auto& d : p.train_pool) corpus_bodies.push_back(p.index.doc(d).body);
    std::map<std::string, std::string> superdocs;
    for (const auto& a : p.graph.node_ids()) superdocs[a] = corpus::superdocument(p.index, a, p.train_pool);

    BaselineResult b;
    const auto val = scored_pairs(p.index, p.val_examples);
    b.tuned = ngram::tune(corpus_bodies, superdocs, val, n_grid);
    b.val = eval::evaluate_scores(ngram::score_pairs(b.tuned.vectorizer, superdocs, val), labels_of(p.val_examples),
                                  b.tuned.threshold);
    const auto test = scored_pairs(p.index, p.test_examples);
    b.test = eval::evaluate_scores(ngram::score_pairs(b.tuned.vectorizer, superdocs, test),
                                   labels_of(p.test_examples), b.tuned.threshold);
    return b;
}

NewAuthorSetup new_author_setup(const Prepared& p) {
    const int val_year = p.config.split.val_year;
    std::map<AuthorId, int> first_year;
    for (const auto& [id, doc] : p.index.all_docs()) {
        for (const auto& a : doc.authors) {
            auto [it, inserted] = first_year.emplace(a, doc.year);
            if (!inserted) it->second = std::min(it->second, doc.year);
        }
    }
    const auto old = p.authors();
    NewAuthorSetup s;
    for (const auto& [a, y] : first_year) {
        if (y == val_year && !old.contains(a)) s.new_authors.push_back(a);
    }
    const std::set<AuthorId> fresh(s.new_authors.begin(), s.new_authors.end());

    const auto g = graph::build_coauthor_graph(p.index, val_year);
    for (auto [i, j] : g.edges()) {
        const auto& a = g.node_ids()[i];
        const auto& b = g.node_ids()[j];
        const bool a_in = old.contains(a) || fresh.contains(a);
        const bool b_in = old.contains(b) || fresh.contains(b);
        if (a_in && b_in) s.edges.emplace(a, b);
    }
    for (const auto& a : s.new_authors) {
        bool has_old = false;
        for (const auto& d : p.index.docs_of(a)) {
            const auto& doc = p.index.doc(d);
            if (doc.year == val_year) s.known_docs.insert(d);
            if (doc.year > val_year) s.test_pool.insert(d);
        }
        for (const auto& [x, y] : s.edges) {
            if ((x == a && old.contains(y)) || (y == a && old.contains(x))) has_old = true;
        }
        s.with_old_neighbors += has_old ? 1 : 0;
    }
    if (!s.test_pool.empty()) {
        s.test_examples = corpus::build_examples(p.index, fresh, s.test_pool, corpus::Split::test,
                                                 derive_seed(p.config.data_seed, "new-authors"));
    }
    return s;
}

eval::MetricReport evaluate_new_authors(const Prepared& p, const NewAuthorSetup& setup, model::Lg4avModel trained) {
    if (setup.new_authors.empty() || setup.test_examples.pairs.empty()) {
        throw Error("new-author protocol: no new authors with test documents");
    }
    // features for new authors come from the same untrained encoder and scaling as the old ones
    const auto scaling = model::fit_column_scaling(
        model::mean_cls_features(p.base.encoder(), p.base.vocab(), p.index, p.graph.node_ids(), p.train_pool));
    const Matrix x_new = scaling.apply(model::mean_cls_features(p.base.encoder(), p.base.vocab(), p.index,
                                                                setup.new_authors, setup.known_docs));
    const Matrix& x_old = trained.features().matrices.front();
    auto extended = graph::extend_graph(p.graph, setup.new_authors, setup.edges, x_old, x_new, trained.k());
    model::prepare_new_authors(trained, setup.new_authors, extended);
    return evaluate_model(trained, p.index, setup.test_examples);
}

eval::MetricReport baseline_new_authors(const Prepared& p, const NewAuthorSetup& setup, const BaselineResult& b) {
    std::map<std::string, std::string> superdocs;
    for (const auto& a : setup.new_authors) superdocs[a] = corpus::superdocument(p.index, a, setup.known_docs);
    const auto pairs = scored_pairs(p.index, setup.test_examples);
    return eval::evaluate_scores(ngram::score_pairs(b.tuned.vectorizer, superdocs, pairs),
                                 labels_of(setup.test_examples), b.tuned.threshold);
}

double mean_auc(const std::vector<eval::MetricReport>& reports) {
    if (reports.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : reports) s += r.auc;
    return s / static_cast<double>(reports.size());
}

std::string report_json(const eval::MetricReport& r) { return report_to_json(r).dump(2) + "\n"; }

std::string run_report_json(const RunResult& r) {
    json j = {{"variant", model::to_string(r.variant)},
              {"seed", r.seed},
              {"k", r.k},
              {"trainable_parameters", r.trainable_parameters},
              {"optimizer_steps", r.training.optimizer_steps},
              {"epoch_loss", r.training.epoch_loss},
              {"val", report_to_json(r.val)},
              {"test", report_to_json(r.test)}};
    return j.dump(2) + "\n";
}

void write_train_log(std::ostream& out, const model::TrainResult& r) {
    out << "epoch,step,lr,loss\n";
    out.precision(17);
    for (const auto& s : r.steps) out << s.epoch << ',' << s.step << ',' << s.lr << ',' << s.loss << '\n';
}

void save_run(const RunResult& r, const fs::path& dir, bool checkpoint) {
    fs::create_directories(dir);
    if (checkpoint) checkpoint::save(dir / "model.ckpt", r.model);
    std::ofstream log(dir / "train_log.csv");
    write_train_log(log, r.training);
    write_text(dir / "report.json", run_report_json(r));
}

std::vector<Comparison> compare_reports(const std::vector<eval::MetricReport>& a,
                                        const std::vector<eval::MetricReport>& b) {
    if (a.size() != b.size()) throw Error("compare: run sets differ in size");
    std::vector<Comparison> out;
    const std::pair<const char*, double eval::MetricReport::*> metrics[] = {
        {"auc", &eval::MetricReport::auc}, {"accuracy", &eval::MetricReport::accuracy}, {"f1", &eval::MetricReport::f1}};
    for (auto [name, field] : metrics) {
        std::vector<double> xa, xb;
        for (const auto& r : a) xa.push_back(r.*field);
        for (const auto& r : b) xb.push_back(r.*field);
        Comparison c;
        c.metric = name;
        c.test = eval::paired_t_test(xa, xb);
        c.mean_a = std::accumulate(xa.begin(), xa.end(), 0.0) / static_cast<double>(xa.size());
        c.mean_b = std::accumulate(xb.begin(), xb.end(), 0.0) / static_cast<double>(xb.size());
        out.push_back(c);
    }
    return out;
}

eval::MetricReport read_report(const fs::path& report, const std::string& split) {
    std::ifstream in(report);
    if (!in) throw Error("cannot open report " + report.string());
    const json j = json::parse(in);
    return report_from_json(j.contains(split) ? j.at(split) : j);
}

namespace {

json comparison_json(const std::vector<Comparison>& cs) {
    json out = json::array();
    for (const auto& c : cs) {
        out.push_back({{"metric", c.metric},
                       {"mean_a", c.mean_a},
                       {"mean_b", c.mean_b},
                       {"t", c.test.degenerate ? json(nullptr) : json(c.test.t)},
                       {"p_two_sided", c.test.degenerate ? json(nullptr) : json(c.test.p_two_sided)},
                       {"df", c.test.df},
                       {"degenerate", c.test.degenerate}});
    }
    return out;
}

json mean_report(const std::vector<eval::MetricReport>& rs) {
    double auc = 0, acc = 0, f1 = 0;
    for (const auto& r : rs) {
        auc += r.auc;
        acc += r.accuracy;
        f1 += r.f1;
    }
    const double n = rs.empty() ? 1.0 : static_cast<double>(rs.size());
    return {{"auc", auc / n}, {"accuracy", acc / n}, {"f1", f1 / n}, {"runs", rs.size()}};
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
    auto say = [&](const std::string& msg) {
        if (cfg.progress) cfg.progress(msg);
    };
    auto stage = [&](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw Error(std::string("stage ") + name + ": " + e.what());
        }
    };

    auto index = stage("load", [&] { return corpus::load_corpus(cfg.corpus); });
    auto prepared = stage("prepare", [&] { return prepare(std::move(index), cfg.prepare); });
    stage("prepare", [&] {
        save_prepared(prepared, cfg.corpus, cfg.out_dir / "prepared");
        return 0;
    });
    say("prepared: " + std::to_string(prepared.graph.order()) + " authors, " +
        std::to_string(prepared.graph.size()) + " edges, " + std::to_string(prepared.train_pool.size()) +
        " training documents");

    ExperimentSummary summary;
    std::optional<NewAuthorSetup> setup;
    if (cfg.new_authors) {
        setup = stage("new-authors", [&] { return new_author_setup(prepared); });
        summary.new_author_count = setup->new_authors.size();
        summary.new_authors_with_old_neighbors = setup->with_old_neighbors;
    }

    for (auto variant : cfg.variants) {
        for (auto seed : cfg.seeds) {
            auto tc = cfg.train;
            tc.seed = seed;
            auto run = stage("train", [&] { return run_training(prepared, variant, cfg.prepare.k, tc); });
            const auto name = model::to_string(variant) + "_seed" + std::to_string(seed);
            stage("report", [&] {
                save_run(run, cfg.out_dir / "runs" / name, cfg.write_checkpoints);
                return 0;
            });
            say(name + ": test auc " + std::to_string(run.test.auc) + ", val auc " + std::to_string(run.val.auc));
            summary.test_reports[variant].push_back(run.test);
            summary.val_reports[variant].push_back(run.val);
            summary.epoch_losses[variant].push_back(run.training.epoch_loss);
            if (setup && !setup->test_examples.pairs.empty()) {
                auto rep = stage("new-authors", [&] { return evaluate_new_authors(prepared, *setup, std::move(run.model)); });
                summary.new_author_reports[variant].push_back(rep);
            }
        }
    }

    if (cfg.baseline) {
        summary.baseline = stage("baseline", [&] { return run_baseline(prepared); });
        say("baseline: n=" + std::to_string(summary.baseline->tuned.n) + " t=" +
            std::to_string(summary.baseline->tuned.threshold) + " test auc " +
            std::to_string(summary.baseline->test.auc));
        write_text(cfg.out_dir / "baseline.json", ngram::dump_json(summary.baseline->tuned) + "\n");
        if (setup && !setup->test_examples.pairs.empty()) {
            summary.baseline_new_authors = baseline_new_authors(prepared, *setup, *summary.baseline);
        }
    }

    json j;
    for (const auto& [variant, reports] : summary.test_reports) {
        j["variants"][model::to_string(variant)]["test"] = mean_report(reports);
        j["variants"][model::to_string(variant)]["val"] = mean_report(summary.val_reports[variant]);
        if (summary.new_author_reports.contains(variant)) {
            j["variants"][model::to_string(variant)]["new_authors"] = mean_report(summary.new_author_reports[variant]);
        }
    }
    if (cfg.variants.size() > 1) {
        const auto& first = summary.test_reports[cfg.variants.front()];
        for (std::size_t v = 1; v < cfg.variants.size(); ++v) {
            const auto& other = summary.test_reports[cfg.variants[v]];
            if (first.size() >= 2 && first.size() == other.size()) {
                j["comparisons"][model::to_string(cfg.variants.front()) + "_vs_" + model::to_string(cfg.variants[v])] =
                    comparison_json(compare_reports(first, other));
            }
        }
    }
    if (summary.baseline) {
        j["baseline"] = {{"n", summary.baseline->tuned.n},
                         {"threshold", summary.baseline->tuned.threshold},
                         {"val", report_to_json(summary.baseline->val)},
                         {"test", report_to_json(summary.baseline->test)}};
        if (summary.baseline_new_authors) j["baseline"]["new_authors"] = report_to_json(*summary.baseline_new_authors);
    }
    if (setup) {
        j["new_authors"] = {{"count", summary.new_author_count},
                            {"with_old_neighbors", summary.new_authors_with_old_neighbors},
                            {"test_examples", setup->test_examples.pairs.size()}};
    }
    write_text(cfg.out_dir / "summary.json", j.dump(2) + "\n");
    return summary;
}

}  // namespace lg4av::experiment
