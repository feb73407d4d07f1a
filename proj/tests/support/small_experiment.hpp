#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lg4av/experiment.hpp"
#include "lg4av/synthetic.hpp"

namespace lg4av::testing {

inline synth::SyntheticSpec small_corpus_spec() {
    synth::SyntheticSpec s;
    s.n_topics = 2;
    s.authors_per_topic = 8;
    s.vocab_per_topic = 40;
    s.shared_vocab = 20;
    s.docs_per_author = 4;
    s.signature_size = 5;
    s.new_authors_per_topic = 2;
    s.intra_topic_edge_prob = 0.5;
    s.cross_topic_edge_prob = 0.05;
    s.abstract_words = 12;
    return s;
}

inline experiment::PrepareConfig small_prepare_config() {
    experiment::PrepareConfig c;
    c.encoder.hidden = 8;
    c.encoder.heads = 2;
    c.encoder.layers = 1;
    c.encoder.max_len = 24;
    c.encoder.out_dim = 8;
    c.k = 2;
    return c;
}

inline model::TrainConfig small_train_config(std::uint64_t seed = 0) {
    model::TrainConfig t;
    t.epochs = 1;
    t.lr = 2e-3;
    t.seed = seed;
    return t;
}

/// Writes the corpus to `dir/corpus.jsonl` and returns its path.
inline std::filesystem::path write_small_corpus(const std::filesystem::path& dir,
                                                const synth::SyntheticSpec& spec = small_corpus_spec()) {
    std::filesystem::create_directories(dir);
    const auto path = dir / "corpus.jsonl";
    std::ofstream out(path);
    corpus::write_corpus(out, synth::generate_synthetic(spec));
    return path;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Fresh directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("lg4av_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace lg4av::testing
