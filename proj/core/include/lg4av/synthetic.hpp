#pragma once

#include <cstdint>
#include <vector>

#include "lg4av/corpus.hpp"

namespace lg4av::synth {

/// Topic-structured bibliography. Each topic owns a disjoint block of made-up words;
/// each author prefers a personal subset of their topic's block. Co-authorship follows
/// a random graph that is dense inside topics and sparse across them. Over the years
/// authors increasingly borrow personal words from their co-authors (drift_rate).
struct SyntheticSpec {
    std::size_t n_topics = 4;
    std::size_t authors_per_topic = 25;
    std::size_t vocab_per_topic = 200;
    std::size_t shared_vocab = 100;
    std::size_t docs_per_author = 20;     // led documents in the training years
    double val_docs_ratio = 0.15;         // led validation-year documents per training document
    double test_docs_ratio = 0.25;        // led test-year documents per training document
    std::size_t new_authors_per_topic = 3;  // authors whose first publication is in the validation year
    double intra_topic_edge_prob = 0.15;
    double cross_topic_edge_prob = 0.01;
    double coauthor_prob = 0.2;           // chance that a graph neighbour joins a document
    std::size_t max_coauthors = 3;
    double noise_rate = 0.2;              // words drawn from the shared block
    std::size_t signature_size = 20;      // personal words within the topic block
    double signature_rate = 0.0;          // non-noise words drawn from the personal subset
    double drift_rate = 0.0;              // share of personal words taken from a co-author's subset by the last year
    std::size_t title_words = 6;
    std::size_t abstract_words = 30;
    int first_year = 2010;
    int train_until = 2015;
    int val_year = 2016;
    int test_from = 2017;
    int last_year = 2018;
    std::uint64_t seed = 7;

    void validate() const;
};

/// Documents sorted by id, ready for write_corpus / load_corpus.
std::vector<corpus::Document> generate_synthetic(const SyntheticSpec& spec);

/// Topic of a generated author id ("t<topic>_a<i>" or "t<topic>_n<i>").
std::size_t topic_of(const corpus::AuthorId& author);

}  // namespace lg4av::synth
