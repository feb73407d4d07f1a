#include "lg4av/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lg4av/error.hpp"
#include "lg4av/metrics.hpp"

namespace lg4av::ngram {

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::vector<std::string> char_ngrams(std::string_view text, int n) {
    if (n < 1) throw Error("n-gram length must be positive");
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(text[i]))) starts.push_back(i);
    }
    starts.push_back(text.size());
    std::vector<std::string> grams;
    const auto un = static_cast<std::size_t>(n);
    if (starts.size() < un + 1) return grams;
    grams.reserve(starts.size() - un);
    for (std::size_t i = 0; i + un < starts.size(); ++i) {
        grams.emplace_back(text.substr(starts[i], starts[i + un] - starts[i]));
    }
    return grams;
}

NgramVectorizer::NgramVectorizer(int n, std::vector<std::string> features, std::vector<double> idf)
    : n_(n), features_(std::move(features)), idf_(std::move(idf)) {
    if (features_.size() != idf_.size()) throw DimensionError("features and idf differ in length");
    for (std::size_t i = 0; i < features_.size(); ++i) index_.emplace(features_[i], i);
}

SparseVector NgramVectorizer::tfidf(std::string_view text) const {
    std::map<std::size_t, double> counts;
    for (const auto& g : char_ngrams(text, n_)) {
        auto it = index_.find(g);
        if (it != index_.end()) counts[it->second] += 1.0;
    }
    SparseVector v;
    v.reserve(counts.size());
    for (auto [i, c] : counts) v.emplace_back(i, c * idf_[i]);
    return v;
}

SparseVector NgramVectorizer::transform(std::string_view text) const {
    SparseVector v = tfidf(text);
    double norm = 0.0;
    for (auto& [i, x] : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return {};
    for (auto& [i, x] : v) x /= norm;
    return v;
}

NgramVectorizer fit(const std::vector<std::string>& corpus, int n, std::size_t max_features) {
    if (corpus.empty()) throw Error("n-gram fit: empty corpus");
    if (n < kMinN || n > kMaxN) throw Error("n-gram fit: n must lie in [1, 10]");
    std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> stats;  // (frequency, df)
    for (const auto& doc : corpus) {
        std::unordered_set<std::string> seen;
        for (auto& g : char_ngrams(doc, n)) {
            auto& s = stats[g];
            ++s.first;
            if (seen.insert(std::move(g)).second) ++s.second;
        }
    }
    if (stats.empty()) throw Error("n-gram fit: no document has " + std::to_string(n) + " characters");
    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(stats.begin(), stats.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second.first != b.second.first ? a.second.first > b.second.first : a.first < b.first;
    });
    if (ranked.size() > max_features) ranked.resize(max_features);
    std::vector<std::string> features;
    std::vector<double> idf;
    const double docs = static_cast<double>(corpus.size());
    for (auto& [g, s] : ranked) {
        features.push_back(g);
        idf.push_back(std::log((1.0 + docs) / (1.0 + static_cast<double>(s.second))) + 1.0);
    }
    return NgramVectorizer(n, std::move(features), std::move(idf));
}

double cosine(const SparseVector& a, const SparseVector& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (auto& [i, x] : a) na += x * x;
    for (auto& [i, x] : b) nb += x * x;
    if (na == 0.0 || nb == 0.0) return 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) ++ia;
        else if (ib->first < ia->first) ++ib;
        else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double similarity(const NgramVectorizer& v, std::string_view text_a, std::string_view text_b) {
    return cosine(v.tfidf(text_a), v.tfidf(text_b));
}

std::vector<double> threshold_grid() {
    std::vector<double> grid(1000);
    for (int i = 1; i <= 1000; ++i) grid[static_cast<std::size_t>(i - 1)] = static_cast<double>(i - 1) / 999.0;
    return grid;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error("median of an empty set");
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<double> score_pairs(const NgramVectorizer& v, const std::map<std::string, std::string>& superdocuments,
                                const std::vector<ScoredPair>& pairs) {
    std::map<std::string, SparseVector> author_vectors;
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        auto it = author_vectors.find(p.author);
        if (it == author_vectors.end()) {
            auto sd = superdocuments.find(p.author);
            it = author_vectors.emplace(p.author, sd == superdocuments.end() ? SparseVector{}
                                                                             : v.tfidf(sd->second)).first;
        }
        out.push_back(cosine(it->second, v.tfidf(p.document)));
    }
    return out;
}

TuneResult tune(const std::vector<std::string>& train_corpus,
                const std::map<std::string, std::string>& superdocuments,
                const std::vector<ScoredPair>& validation, const std::vector<int>& n_grid) {
    if (validation.empty()) throw Error("n-gram tune: empty validation set");
    std::vector<int> grid = n_grid;
    std::sort(grid.begin(), grid.end());
    std::vector<int> labels;
    for (const auto& p : validation) labels.push_back(p.label);

    TuneResult best;
    double best_auc = -1.0;
    std::vector<double> best_sims;
    for (int n : grid) {
        NgramVectorizer v;
        try {
            v = fit(train_corpus, n);
        } catch (const Error&) {
            continue;  // no gram of this length anywhere
        }
        auto sims = score_pairs(v, superdocuments, validation);
        const double a = eval::auc(sims, labels);
        best.auc_by_n[n] = a;
        if (a > best_auc) {
            best_auc = a;
            best.n = n;
            best.vectorizer = std::move(v);
            best_sims = std::move(sims);
        }
    }
    if (best_auc < 0.0) throw Error("n-gram tune: no n in the grid produced features");

    auto candidates = threshold_grid();
    best.validation_median = median(best_sims);
    candidates.push_back(best.validation_median);
    std::sort(candidates.begin(), candidates.end());
    double best_f1 = -1.0;
    for (double t : candidates) {
        const double f1 = eval::accuracy_f1(best_sims, labels, t).f1;
        if (f1 > best_f1) {
            best_f1 = f1;
            best.threshold = t;
        }
    }
    best.validation_f1 = best_f1;
    return best;
}

Prediction predict(const NgramVectorizer& v, double threshold, std::string_view superdocument,
                   std::string_view document) {
    Prediction p;
    p.score = similarity(v, superdocument, document);
    p.label = p.score > threshold ? 1 : 0;
    return p;
}

std::string dump_json(const TuneResult& r) {
    nlohmann::json j = {{"n", r.n},
                        {"threshold", r.threshold},
                        {"validation_f1", r.validation_f1},
                        {"validation_median", r.validation_median},
                        {"features", r.vectorizer.features()},
                        {"idf", r.vectorizer.idf()}};
    nlohmann::json by_n = nlohmann::json::object();
    for (auto [n, a] : r.auc_by_n) by_n[std::to_string(n)] = a;
    j["validation_auc_by_n"] = by_n;
    return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace lg4av::ngram
