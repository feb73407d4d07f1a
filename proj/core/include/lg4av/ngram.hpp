#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lg4av::ngram {

inline constexpr std::size_t kMaxFeatures = 3000;
inline constexpr int kMinN = 1;
inline constexpr int kMaxN = 10;

/// Sparse vector: (feature index, value), indices ascending.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

/// Character n-gram TF-IDF over code points (whitespace and punctuation included,
/// case preserved). tf is the raw count, idf = ln((1 + N) / (1 + df)) + 1.
class NgramVectorizer {
public:
    NgramVectorizer() = default;
    NgramVectorizer(int n, std::vector<std::string> features, std::vector<double> idf);

    int n() const noexcept { return n_; }
    const std::vector<std::string>& features() const noexcept { return features_; }
    const std::vector<double>& idf() const noexcept { return idf_; }

    /// Raw tf-idf vector (not normalized).
    SparseVector tfidf(std::string_view text) const;
    /// L2-normalized tf-idf vector; empty when no retained gram occurs.
    SparseVector transform(std::string_view text) const;

private:
    int n_ = 0;
    std::vector<std::string> features_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> idf_;
};

/// Sliding-window n-grams over code points.
std::vector<std::string> char_ngrams(std::string_view text, int n);

/// Keeps the `max_features` most frequent grams, ordered by (-frequency, gram).
/// Throws when no document is long enough to produce a gram.
NgramVectorizer fit(const std::vector<std::string>& corpus, int n, std::size_t max_features = kMaxFeatures);

double cosine(const SparseVector& a, const SparseVector& b);
/// Cosine of the tf-idf vectors; 0 when either is all-zero.
double similarity(const NgramVectorizer& v, std::string_view text_a, std::string_view text_b);

/// {(i - 1) / 999 : i = 1..1000}
std::vector<double> threshold_grid();

/// Median; mean of the middle pair for even sizes.
double median(std::vector<double> values);

/// One validation pair: the author's superdocument and the candidate document.
struct ScoredPair {
    std::string author;
    std::string document;
    int label = 0;
};

struct TuneResult {
    int n = kMinN;
    double threshold = 0.0;
    NgramVectorizer vectorizer;
    std::map<int, double> auc_by_n;
    double validation_f1 = 0.0;
    double validation_median = 0.0;
};

/// n maximizes validation AUC over `n_grid`; then t maximizes validation F1 over the
/// grid plus the median of validation similarities. Ties prefer smaller n, smaller t.
TuneResult tune(const std::vector<std::string>& train_corpus,
                const std::map<std::string, std::string>& superdocuments,
                const std::vector<ScoredPair>& validation, const std::vector<int>& n_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});

struct Prediction {
    double score = 0.0;
    int label = 0;
};

/// label = 1 iff similarity > threshold.
Prediction predict(const NgramVectorizer& v, double threshold, std::string_view superdocument,
                   std::string_view document);

/// Similarities for a batch of pairs, reusing per-author superdocument vectors.
std::vector<double> score_pairs(const NgramVectorizer& v, const std::map<std::string, std::string>& superdocuments,
                                const std::vector<ScoredPair>& pairs);

/// JSON: {"n", "threshold", "features", "idf"}.
std::string dump_json(const TuneResult& r);

}  // namespace lg4av::ngram
