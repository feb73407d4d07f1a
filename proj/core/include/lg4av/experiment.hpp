#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <set>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lg4av/corpus.hpp"
#include "lg4av/encoder.hpp"
#include "lg4av/graph.hpp"
#include "lg4av/metrics.hpp"
#include "lg4av/model.hpp"
#include "lg4av/ngram.hpp"

namespace lg4av::experiment {

using corpus::AuthorId;

struct PrepareConfig {
    corpus::SplitSpec split;
    std::size_t vocab_min_freq = 1;
    std::size_t vocab_max_size = 20000;
    encoder::EncoderConfig encoder;
    std::uint64_t encoder_seed = 1234;  // shared starting weights for every run
    int k = 2;
    std::uint64_t data_seed = 0;        // validation/test negative sampling
};

/// Everything the runs share: split, co-author graph restricted to its largest
/// component, the untrained model with propagated author features and the
/// validation/test example sets.
struct Prepared {
    PrepareConfig config;
    corpus::AuthorshipIndex index;
    corpus::TemporalSplit split;
    corpus::DocIdSet train_pool;  // training-year documents of graph authors
    corpus::DocIdSet val_pool;
    corpus::DocIdSet test_pool;
    graph::CoauthorGraph graph;
    model::Lg4avModel base;       // untrained, variant full
    corpus::ExampleSet val_examples;
    corpus::ExampleSet test_examples;

    std::set<AuthorId> authors() const;
};

Prepared prepare(corpus::AuthorshipIndex index, const PrepareConfig& cfg);

/// Writes base.ckpt, vocab.txt, nodes.txt, graph.tsv, examples_{val,test}.jsonl, prepare.json.
void save_prepared(const Prepared& p, const std::filesystem::path& corpus_path, const std::filesystem::path& dir);
/// Reloads the corpus named in prepare.json and the stored artifacts.
Prepared load_prepared(const std::filesystem::path& dir);

struct RunResult {
    model::Variant variant = model::Variant::full;
    std::uint64_t seed = 0;
    int k = 0;
    model::Lg4avModel model;
    model::TrainResult training;
    eval::MetricReport val;
    eval::MetricReport test;
    std::size_t trainable_parameters = 0;
};

/// Builds the run's model from the shared base (k0 drops propagation), samples the
/// training negatives with the run seed, trains and evaluates on val and test.
RunResult run_training(const Prepared& p, model::Variant variant, int k, const model::TrainConfig& cfg);

/// Scores labeled pairs with threshold 0.5.
eval::MetricReport evaluate_model(const model::Lg4avModel& m, const corpus::AuthorshipIndex& index,
                                  const corpus::ExampleSet& examples, double threshold = 0.5);

struct BaselineResult {
    ngram::TuneResult tuned;
    eval::MetricReport val;
    eval::MetricReport test;
};

/// Superdocuments from training documents; n and threshold tuned on validation.
BaselineResult run_baseline(const Prepared& p, const std::vector<int>& n_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});

/// Authors first publishing in the validation year, the graph of all co-author edges
/// among old and new authors up to that year, the new authors' validation-year
/// documents as known documents and their later documents as balanced test pairs.
struct NewAuthorSetup {
    std::vector<AuthorId> new_authors;
    std::set<std::pair<AuthorId, AuthorId>> edges;  // all edges among old+new authors up to val year
    corpus::DocIdSet known_docs;
    corpus::DocIdSet test_pool;
    corpus::ExampleSet test_examples;
    std::size_t with_old_neighbors = 0;
};

NewAuthorSetup new_author_setup(const Prepared& p);

/// Extends a trained model to the new authors and evaluates it.
eval::MetricReport evaluate_new_authors(const Prepared& p, const NewAuthorSetup& setup,
                                        model::Lg4avModel trained);

/// The baseline on the new-author test pairs, superdocuments from known documents.
eval::MetricReport baseline_new_authors(const Prepared& p, const NewAuthorSetup& setup, const BaselineResult& b);

struct ExperimentConfig {
    std::filesystem::path corpus;
    std::filesystem::path out_dir;
    PrepareConfig prepare;
    model::TrainConfig train;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<model::Variant> variants = {model::Variant::full, model::Variant::frozen};
    bool baseline = true;
    bool new_authors = true;
    bool write_checkpoints = true;
    std::function<void(const std::string&)> progress;
};

struct ExperimentSummary {
    std::map<model::Variant, std::vector<eval::MetricReport>> test_reports;
    std::map<model::Variant, std::vector<eval::MetricReport>> val_reports;
    std::map<model::Variant, std::vector<std::vector<double>>> epoch_losses;
    std::map<model::Variant, std::vector<eval::MetricReport>> new_author_reports;
    std::optional<BaselineResult> baseline;
    std::optional<eval::MetricReport> baseline_new_authors;
    std::size_t new_author_count = 0;
    std::size_t new_authors_with_old_neighbors = 0;
};

double mean_auc(const std::vector<eval::MetricReport>& reports);

/// load -> split -> graph -> features -> propagate -> examples -> train per variant and
/// seed -> evaluate; optional baseline and new-author protocol. Writes every report
/// under out_dir (runs/<variant>_seed<seed>/...) plus summary.json.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

// report serialization
std::string report_json(const eval::MetricReport& r);
std::string run_report_json(const RunResult& r);
void write_train_log(std::ostream& out, const model::TrainResult& r);
/// Writes model.ckpt, train_log.csv and report.json into `dir`.
void save_run(const RunResult& r, const std::filesystem::path& dir, bool checkpoint = true);

struct Comparison {
    std::string metric;
    eval::TTestResult test;
    double mean_a = 0.0;
    double mean_b = 0.0;
};

/// Paired t-tests on AUC, accuracy and F1 over reports paired by position.
std::vector<Comparison> compare_reports(const std::vector<eval::MetricReport>& a,
                                        const std::vector<eval::MetricReport>& b);
eval::MetricReport read_report(const std::filesystem::path& report_json, const std::string& split = "test");

}  // namespace lg4av::experiment
