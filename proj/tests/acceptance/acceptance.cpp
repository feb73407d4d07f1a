// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/dense_graph.hpp"
#include "../support/ngram_oracle.hpp"
#include "../support/small_experiment.hpp"
#include "../support/tiny.hpp"
#include "lg4av/checkpoint.hpp"
#include "lg4av/error.hpp"
#include "lg4av/experiment.hpp"
#include "lg4av/metrics.hpp"
#include "lg4av/ngram.hpp"
#include "lg4av/synthetic.hpp"

using namespace lg4av;
namespace fs = std::filesystem;
namespace t = lg4av::testing;

namespace {

// Pinned tolerances and calibrated thresholds.
constexpr double kGraphTol = 1e-10;
constexpr double kGraphSeconds = 10.0;
constexpr double kGradTol = 1e-4;
constexpr double kHeadGradTol = 1e-6;
constexpr double kGradSeconds = 60.0;
constexpr double kForwardTol = 1e-9;
constexpr double kTTestTol = 1e-3;
constexpr double kFullAucMin = 0.85;
constexpr double kFrozenGapMin = 0.05;
constexpr double kBenchmarkSeconds = 15.0 * 60.0;
constexpr double kNewAuthorMarginMin = 0.30;
constexpr double kBaselineMarginMin = 0.001;
constexpr double kBenchmarkLr = 2e-3;
constexpr int kBenchmarkSeeds = 10;

/// Collects the reasons a criterion fails; empty means pass.
class Check {
public:
    void require(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    void note(const std::string& s) { notes_.push_back(s); }
    bool ok() const { return failures_.empty(); }
    std::string summary() const {
        std::string out;
        for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
        for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + std::string("failed: ") + f;
        return out;
    }

private:
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double max_abs(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

void graph_invariants(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    std::uniform_real_distribution<double> density(0.0, 0.5);
    double worst_sym = 0, worst_eigen = 0, worst_prop = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = t::random_graph(size(rng), density(rng), rng);
        const auto adj = graph::normalize_adjacency(g);
        const Matrix a = adj.to_dense();
        worst_sym = std::max(worst_sym, max_abs(a, a.transpose()));
        Vector w(static_cast<Eigen::Index>(g.order()));
        for (std::size_t i = 0; i < g.order(); ++i) w(static_cast<Eigen::Index>(i)) = std::sqrt(adj.degree[i]);
        worst_eigen = std::max(worst_eigen, (a * w - w).cwiseAbs().maxCoeff());
        const Matrix x = t::random_matrix(static_cast<Eigen::Index>(g.order()), 3, rng);
        const auto f = graph::propagate(adj, x, 3);
        const Matrix dense = t::dense_normalized(g);
        for (int l = 0; l <= 3; ++l) {
            worst_prop = std::max(worst_prop, max_abs(f.matrices[static_cast<std::size_t>(l)], t::dense_power_times(dense, x, l)));
        }
    }
    const double secs = seconds_since(start);
    c.note("200 graphs, asym " + sci(worst_sym) + ", eigen " + sci(worst_eigen) + ", propagation " + sci(worst_prop) +
           ", " + fmt(secs, 2) + " s");
    c.require(worst_sym == 0.0, "normalized adjacency not symmetric");
    c.require(worst_eigen <= kGraphTol, "sqrt-degree eigenvector residual");
    c.require(worst_prop <= kGraphTol, "propagation differs from dense powers");
    c.require(secs < kGraphSeconds, "runtime");
}

void gradient_correctness(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<t::TinyOptions> configs(4);
    configs[1].hidden = 6;
    configs[1].heads = 3;
    configs[1].seed = 5;
    configs[2].layers = 1;
    configs[2].heads = 1;
    configs[2].k = 2;
    configs[2].seed = 3;
    configs[3].variant = model::Variant::k0;
    configs[3].seed = 8;
    double worst = 0, worst_head = 0;
    std::set<ParamKind> kinds;
    for (const auto& o : configs) {
        auto m = t::tiny_model(o);
        for (const auto& r : t::finite_difference_check(m, t::tiny_examples(m))) {
            kinds.insert(r.kind);
            (r.kind == ParamKind::head ? worst_head : worst) =
                std::max(r.kind == ParamKind::head ? worst_head : worst, r.rel_error);
        }
    }
    const double secs = seconds_since(start);
    c.note("encoder max rel err " + sci(worst) + ", head " + sci(worst_head) + ", " + std::to_string(kinds.size()) +
           " parameter classes, " + fmt(secs, 2) + " s");
    c.require(worst <= kGradTol, "end-to-end gradient");
    c.require(worst_head <= kHeadGradTol, "head gradient");
    c.require(kinds == std::set<ParamKind>{ParamKind::embedding, ParamKind::attention, ParamKind::feed_forward,
                                          ParamKind::layer_norm, ParamKind::projection, ParamKind::head},
              "parameter classes");
    c.require(secs < kGradSeconds, "runtime");
}

void forward_oracle(Check& c) {
    graph::PropagatedFeatures f;
    f.k = 1;
    f.matrices = {Matrix(1, 2), Matrix(1, 2)};
    f.matrices[0] << 1.0, 2.0;
    f.matrices[1] << 0.5, 1.0;
    Vector lm(2);
    lm << 1.0, -1.0;
    const Vector v = model::fuse(f, 0, lm);
    Vector expected(4);
    expected << 1.0, -2.0, 0.5, -1.0;
    const double score = model::sigmoid(v.dot(Vector::Ones(4)));
    c.note("v = (" + fmt(v(0), 1) + ", " + fmt(v(1), 1) + ", " + fmt(v(2), 1) + ", " + fmt(v(3), 1) + "), score " +
           fmt(score, 9));
    c.require(v == expected, "fused vector");
    c.require(std::abs(score - 0.182426) <= 1e-6 && std::abs(score - 1.0 / (1.0 + std::exp(1.5))) <= kForwardTol,
              "sigmoid(-1.5)");

    auto m = t::tiny_model();
    m.head_weights().setZero();
    m.head_bias() = 0.0;
    bool all_half = true;
    for (const auto& e : t::tiny_examples(m)) all_half = all_half && model::forward(m, e.author, e.seq) == 0.5;
    c.require(all_half, "zero head scores 0.5");
}

void metric_oracles(Check& c) {
    std::mt19937_64 rng(99);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 40;
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 9) / 8.0;
            y[i] = static_cast<int>(rng() % 2);
        }
        y[0] = 0;
        y[1] = 1;
        worst = std::max(worst, std::abs(eval::auc(s, y) - t::pair_count_auc(s, y)));
    }
    const std::vector<int> labels = {0, 1, 0, 1};
    const std::vector<double> perfect = {0.1, 0.9, 0.2, 0.8};
    const std::vector<double> tied(4, 0.4);
    const double a_perfect = eval::auc(perfect, labels);
    const double a_tied = eval::auc(tied, labels);
    const std::vector<double> d = {1, 2, 3}, zero = {0, 0, 0};
    const auto tt = eval::paired_t_test(d, zero);
    c.note("1000 instances max diff " + sci(worst) + ", perfect " + fmt(a_perfect, 1) + ", tied " + fmt(a_tied, 1) +
           ", t " + fmt(tt.t) + ", p " + fmt(tt.p_two_sided));
    c.require(worst <= 1e-12, "pair counting");
    c.require(a_perfect == 1.0 && a_tied == 0.5, "perfect/tied");
    c.require(std::abs(tt.t - 3.4641) <= kTTestTol && std::abs(tt.p_two_sided - 0.0742) <= kTTestTol, "t-test reference");
}

std::vector<double> test_scores(const experiment::RunResult& r, const experiment::Prepared& p) {
    std::vector<std::pair<corpus::AuthorId, corpus::Document>> pairs;
    for (const auto& e : p.test_examples.pairs) pairs.emplace_back(e.author, p.index.doc(e.doc));
    return model::verify(r.model, pairs);
}

void ablation_equivalence(Check& c) {
    const auto dir = t::scratch_dir("acceptance_ablation");
    const auto path = t::write_small_corpus(dir);
    const auto p = experiment::prepare(corpus::load_corpus(path), t::small_prepare_config());
    const auto k0 = experiment::run_training(p, model::Variant::k0, p.config.k, t::small_train_config());
    const auto full0 = experiment::run_training(p, model::Variant::full, 0, t::small_train_config());
    const auto a = test_scores(k0, p), b = test_scores(full0, p);
    c.require(a == b && !a.empty(), "k0 and full(k=0) scores differ");

    const auto frozen = experiment::run_training(p, model::Variant::frozen, p.config.k, t::small_train_config());
    const bool encoder_same = t::encoder_bytes(frozen.model.encoder()) == t::encoder_bytes(p.base.encoder());
    std::size_t changed = 0;
    for (Eigen::Index i = 0; i < frozen.model.head_weights().size(); ++i) {
        changed += frozen.model.head_weights()(i) != p.base.head_weights()(i);
    }
    changed += frozen.model.head_bias() != p.base.head_bias();
    const std::size_t expected = p.base.out_dim() * static_cast<std::size_t>(p.config.k + 1) + 1;
    c.note(std::to_string(a.size()) + " identical scores, frozen updated " + std::to_string(changed) + " of " +
           std::to_string(expected) + " (count " + std::to_string(frozen.trainable_parameters) + ")");
    c.require(encoder_same, "frozen encoder bytes changed");
    c.require(changed == expected && frozen.trainable_parameters == expected, "frozen parameter count");
    fs::remove_all(dir);
}

bool cls_rules_exact() {
    auto m = t::tiny_model();
    const graph::CoauthorGraph old_graph({"a0", "a1", "a2"}, {{0, 1}, {1, 2}});
    std::mt19937_64 rng(4);
    const Matrix x_new = t::random_matrix(3, static_cast<Eigen::Index>(m.features().dim()), rng);
    const auto ext = graph::extend_graph(old_graph, {"n0", "n1", "n2"}, {{"n0", "a1"}, {"n1", "a0"}, {"n1", "a2"}},
                                         m.features().matrices[0], x_new, m.k());
    model::AuthorClsTable before(m);
    const Vector a0 = before.row("a0"), a1 = before.row("a1"), a2 = before.row("a2");
    model::prepare_new_authors(m, {"n0", "n1", "n2"}, ext);
    model::AuthorClsTable after(m);
    const Vector two = (a0 + a2) / 2.0;
    const Vector all = (a0 + a1 + a2) / 3.0;
    return after.row("n0") == a1 && (after.row("n1") - two).cwiseAbs().maxCoeff() <= 1e-15 &&
           (after.row("n2") - all).cwiseAbs().maxCoeff() <= 1e-15;
}

bool six_pair_oracle(std::string& detail) {
    const t::SixPairCase c;
    std::vector<ngram::ScoredPair> val;
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<int> labels;
    for (const auto& p : c.pairs) {
        val.push_back({p.author, p.doc, p.label});
        pairs.emplace_back(c.superdocuments.at(p.author), p.doc);
        labels.push_back(p.label);
    }
    const auto expected = t::exhaustive_tune(c.corpus, pairs, labels);
    const auto r = ngram::tune(c.corpus, c.superdocuments, val);
    detail = "n* " + std::to_string(r.n) + ", t* " + fmt(r.threshold);
    return r.n == expected.n && r.threshold == expected.threshold;
}

struct Benchmark {
    experiment::ExperimentSummary summary;
    double seconds = 0.0;
};

Benchmark run_benchmark() {
    const auto dir = t::scratch_dir("acceptance_benchmark");
    synth::SyntheticSpec spec;
    const auto path = dir / "corpus.jsonl";
    {
        std::ofstream out(path);
        corpus::write_corpus(out, synth::generate_synthetic(spec));
    }
    experiment::ExperimentConfig cfg;
    cfg.corpus = path;
    cfg.out_dir = dir / "out";
    cfg.train.lr = kBenchmarkLr;
    cfg.seeds.clear();
    for (int s = 0; s < kBenchmarkSeeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    cfg.variants = {model::Variant::full, model::Variant::frozen};
    cfg.write_checkpoints = false;
    cfg.progress = [](const std::string& msg) { std::cerr << "  " << msg << '\n'; };
    const auto start = std::chrono::steady_clock::now();
    Benchmark b;
    b.summary = experiment::run_experiment(cfg);
    b.seconds = seconds_since(start);
    fs::remove_all(dir);
    return b;
}

void synthetic_end_to_end(Check& c, const Benchmark& b) {
    const double full = experiment::mean_auc(b.summary.test_reports.at(model::Variant::full));
    const double frozen = experiment::mean_auc(b.summary.test_reports.at(model::Variant::frozen));
    c.note("full " + fmt(full) + " (>= " + fmt(kFullAucMin, 2) + "), frozen " + fmt(frozen) + ", gap " +
           fmt(full - frozen) + " (>= " + fmt(kFrozenGapMin, 2) + "), " + fmt(b.seconds, 0) + " s");
    c.require(b.summary.test_reports.at(model::Variant::full).size() == kBenchmarkSeeds, "seed count");
    c.require(full >= kFullAucMin, "full AUC");
    c.require(full - frozen >= kFrozenGapMin, "frozen gap");
    c.require(b.seconds < kBenchmarkSeconds, "runtime");
}

void new_author_protocol(Check& c, const Benchmark& b) {
    const bool rules = cls_rules_exact();
    c.require(rules, "CLS rules");
    const auto& reports = b.summary.new_author_reports;
    if (!reports.contains(model::Variant::full)) {
        c.require(false, "no new-author evaluation");
        return;
    }
    const double fresh = experiment::mean_auc(reports.at(model::Variant::full));
    const double same = experiment::mean_auc(b.summary.test_reports.at(model::Variant::full));
    c.note(std::string("CLS rules ") + (rules ? "exact" : "wrong") + ", " + std::to_string(b.summary.new_author_count) +
           " new authors, AUC " + fmt(fresh) + " (>= " + fmt(0.5 + kNewAuthorMarginMin, 2) + ") vs same-author " + fmt(same));
    c.require(fresh >= 0.5 + kNewAuthorMarginMin, "new-author AUC margin");
    c.require(fresh < same, "new-author AUC not below same-author AUC");
}

void baseline_procedure(Check& c, const Benchmark& b) {
    std::string detail;
    const bool oracle = six_pair_oracle(detail);
    const auto grid = ngram::threshold_grid();
    const bool grid_ok = grid.size() == 1000 && grid.front() == 0.0 && grid.back() == 1.0;
    c.require(oracle, "six-pair oracle");
    c.require(grid_ok, "threshold grid");
    if (!b.summary.baseline) {
        c.require(false, "no baseline run");
        return;
    }
    const double full = experiment::mean_auc(b.summary.test_reports.at(model::Variant::full));
    const double base = b.summary.baseline->test.auc;
    c.note(detail + " matches exhaustive search, grid " + std::to_string(grid.size()) + " points, LG4AV " + fmt(full) +
           " vs n-gram " + fmt(base) + " (n=" + std::to_string(b.summary.baseline->tuned.n) + "), margin " +
           fmt(full - base) + " (>= " + fmt(kBaselineMarginMin, 3) + ")");
    c.require(full - base >= kBaselineMarginMin, "LG4AV over n-gram margin");
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = t::read_file(e.path());
    }
    return out;
}

void determinism(Check& c) {
    const auto dir = t::scratch_dir("acceptance_determinism");
    const auto path = t::write_small_corpus(dir);
    std::vector<std::map<std::string, std::string>> trees;
    for (const char* name : {"a", "b"}) {
        experiment::ExperimentConfig cfg;
        cfg.corpus = path;
        cfg.out_dir = dir / name;
        cfg.prepare = t::small_prepare_config();
        cfg.train = t::small_train_config();
        cfg.seeds = {0, 1};
        experiment::run_experiment(cfg);
        trees.push_back(tree_bytes(cfg.out_dir));
    }
    std::size_t checkpoints = 0;
    for (const auto& [name, bytes] : trees[0]) checkpoints += name.ends_with(".ckpt");
    c.note(std::to_string(trees[0].size()) + " files (" + std::to_string(checkpoints) + " checkpoints) byte-identical");
    c.require(trees[0] == trees[1], "outputs differ");
    c.require(checkpoints >= 4, "missing checkpoints");
    fs::remove_all(dir);
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<void(Check&)>& fn) {
        Check c;
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.require(false, std::string("exception: ") + e.what());
        }
        failures += !c.ok();
        std::cout << (c.ok() ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << c.summary() << std::endl;
    };

    report(1, "graph invariants", graph_invariants);
    report(2, "gradient correctness", gradient_correctness);
    report(3, "forward oracle", forward_oracle);
    report(4, "metric oracles", metric_oracles);

    std::optional<Benchmark> bench;
    std::string bench_error;
    try {
        bench = run_benchmark();
    } catch (const std::exception& e) {
        bench_error = e.what();
    }
    auto with_bench = [&](auto fn) {
        return [&, fn](Check& c) {
            if (!bench) throw Error("benchmark failed: " + bench_error);
            fn(c, *bench);
        };
    };
    report(5, "synthetic end-to-end", with_bench(synthetic_end_to_end));
    report(6, "ablation equivalence", ablation_equivalence);
    report(7, "new-author protocol", with_bench(new_author_protocol));
    report(8, "baseline procedure", with_bench(baseline_procedure));
    report(9, "determinism", determinism);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
