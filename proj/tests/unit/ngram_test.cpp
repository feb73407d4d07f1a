#include <gtest/gtest.h>

#include <random>

#include "../support/ngram_oracle.hpp"
#include "lg4av/error.hpp"
#include "lg4av/ngram.hpp"

using namespace lg4av;
using namespace lg4av::ngram;
using lg4av::testing::NgramOracle;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t len) {
    static const std::string alphabet = "abc d.";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[pick(rng)];
    return s;
}

double dense_value(const SparseVector& v, std::size_t index) {
    for (const auto& [i, x] : v) {
        if (i == index) return x;
    }
    return 0.0;
}

}  // namespace

TEST(CharNgrams, SlidingWindowCounts) {
    const auto v = fit({"aba"}, 2);
    EXPECT_EQ(v.features(), (std::vector<std::string>{"ab", "ba"}));
    EXPECT_EQ(char_ngrams("aba", 2), (std::vector<std::string>{"ab", "ba"}));
    const auto counts = fit({"abab"}, 2);
    EXPECT_EQ(counts.features(), (std::vector<std::string>{"ab", "ba"}));
}

TEST(CharNgrams, CodePointsNotBytes) {
    EXPECT_EQ(char_ngrams("äb", 1), (std::vector<std::string>{"ä", "b"}));
    EXPECT_EQ(char_ngrams("Ab", 2), (std::vector<std::string>{"Ab"}));
}

TEST(Fit, IdenticalDocumentsShareIdf) {
    const auto v = fit({"hello", "hello", "hello"}, 2);
    for (double x : v.idf()) EXPECT_DOUBLE_EQ(x, v.idf().front());
    EXPECT_DOUBLE_EQ(v.idf().front(), 1.0);
}

TEST(Fit, CapsAtThreeThousandByFrequency) {
    std::mt19937_64 rng(1);
    std::string big;
    for (int i = 0; i < 20000; ++i) big += static_cast<char>('a' + rng() % 26);
    const auto v = fit({big, "zzzz zzzz"}, 3);
    EXPECT_EQ(v.features().size(), kMaxFeatures);
    const auto oracle = NgramOracle::fit({big, "zzzz zzzz"}, 3);
    EXPECT_EQ(v.features(), oracle.grams);
}

TEST(Fit, Errors) {
    EXPECT_THROW(fit({"ab"}, 3), Error);
    EXPECT_THROW(fit({}, 2), Error);
    EXPECT_THROW(fit({"abc"}, 0), Error);
    EXPECT_THROW(fit({"abc"}, 11), Error);
}

TEST(Similarity, IdenticalTextsAreOne) {
    const auto v = fit({"hello world", "another text"}, 3);
    EXPECT_NEAR(similarity(v, "hello world", "hello world"), 1.0, 1e-12);
}

TEST(Similarity, DisjointGramsAreZero) {
    const auto v = fit({"aaaa", "bbbb"}, 2);
    EXPECT_EQ(similarity(v, "aaaa", "bbbb"), 0.0);
    EXPECT_EQ(similarity(v, "", "aaaa"), 0.0);
}

TEST(Similarity, HandComputedExample) {
    const auto v = fit({"abab", "ab"}, 2);
    // N = 2; df(ab) = 2, df(ba) = 1 -> idf(ab) = 1, idf(ba) = ln(3/2) + 1
    const double idf_ba = std::log(1.5) + 1.0;
    const double expected = 2.0 / (std::sqrt(4.0 + idf_ba * idf_ba) * 1.0);
    EXPECT_NEAR(similarity(v, "abab", "ab"), expected, 1e-12);
    const auto oracle = NgramOracle::fit({"abab", "ab"}, 2);
    EXPECT_NEAR(similarity(v, "abab", "ab"), oracle.similarity("abab", "ab"), 1e-12);
}

TEST(Similarity, SymmetricInRangeAndScaleInvariant) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> corpus;
        for (int d = 0; d < 6; ++d) corpus.push_back(random_text(rng, 20));
        const auto v = fit(corpus, 2);
        const auto a = random_text(rng, 15), b = random_text(rng, 15);
        const double s = similarity(v, a, b);
        EXPECT_EQ(s, similarity(v, b, a));
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
        auto scaled = v.tfidf(a);
        for (auto& [i, x] : scaled) x *= 3.7;
        EXPECT_NEAR(cosine(scaled, v.tfidf(b)), cosine(v.tfidf(a), v.tfidf(b)), 1e-12);
    }
}

TEST(Similarity, TfidfMatchesBruteForce) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::string> corpus;
        for (int d = 0; d < 1 + static_cast<int>(rng() % 10); ++d) corpus.push_back(random_text(rng, 5 + rng() % 20));
        for (int n = 1; n <= 3; ++n) {
            NgramVectorizer v;
            try {
                v = fit(corpus, n);
            } catch (const Error&) {
                continue;
            }
            const auto o = NgramOracle::fit(corpus, n);
            ASSERT_EQ(v.features(), o.grams);
            const auto text = random_text(rng, 25);
            const auto dense = o.vector(text);
            const auto sparse = v.tfidf(text);
            for (std::size_t i = 0; i < dense.size(); ++i) EXPECT_NEAR(dense_value(sparse, i), dense[i], 1e-12);
        }
    }
}

TEST(ThresholdGrid, ThousandEvenPoints) {
    const auto g = threshold_grid();
    ASSERT_EQ(g.size(), 1000u);
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_EQ(g.back(), 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 1.0 / 999.0, 1e-15);
}

TEST(Median, OddAndEven) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(Tune, PerfectNIsSelected) {
    // only bigrams separate the pairs: unigram sets are identical
    const std::vector<std::string> corpus = {"abab", "baba", "aabb"};
    const std::map<std::string, std::string> sup = {{"x", "abababab"}, {"y", "aabbaabb"}};
    const std::vector<ScoredPair> val = {{"x", "abab", 1}, {"x", "aabb", 0}, {"y", "aabb", 1}, {"y", "abab", 0}};
    const auto r = tune(corpus, sup, val);
    EXPECT_EQ(r.auc_by_n.at(r.n), 1.0);
    EXPECT_EQ(r.auc_by_n.at(1), 0.5);
}

TEST(Tune, AllTiedPicksSmallestN) {
    const std::vector<std::string> corpus = {"abc"};
    const std::map<std::string, std::string> sup = {{"x", "zzz"}};
    const std::vector<ScoredPair> val = {{"x", "qqq", 1}, {"x", "rrr", 0}};
    const auto r = tune(corpus, sup, val);
    EXPECT_EQ(r.n, 1);
    for (const auto& [n, auc] : r.auc_by_n) EXPECT_EQ(auc, 0.5);
    EXPECT_EQ(r.threshold, 0.0);
}

TEST(Tune, SixPairSetMatchesExhaustiveSearch) {
    const lg4av::testing::SixPairCase c;
    std::vector<ScoredPair> val;
    std::vector<std::pair<std::string, std::string>> oracle_pairs;
    std::vector<int> labels;
    for (const auto& p : c.pairs) {
        val.push_back({p.author, p.doc, p.label});
        oracle_pairs.emplace_back(c.superdocuments.at(p.author), p.doc);
        labels.push_back(p.label);
    }
    const auto expected = lg4av::testing::exhaustive_tune(c.corpus, oracle_pairs, labels);
    const auto r = tune(c.corpus, c.superdocuments, val);
    EXPECT_EQ(r.n, expected.n);
    EXPECT_DOUBLE_EQ(r.threshold, expected.threshold);
}

TEST(Predict, StrictThreshold) {
    const auto v = fit({"hello world"}, 2);
    const double s = similarity(v, "hello", "hello world");
    EXPECT_EQ(predict(v, s, "hello", "hello world").label, 0);
    EXPECT_EQ(predict(v, 0.5, "hello", "hello").label, 1);
    const auto empty = predict(v, 0.0, "", "hello");
    EXPECT_EQ(empty.score, 0.0);
    EXPECT_EQ(empty.label, 0);
}

TEST(ScorePairs, MatchesSimilarity) {
    const auto v = fit({"one two three", "four five"}, 2);
    const std::map<std::string, std::string> sup = {{"a", "one two"}, {"b", "four"}};
    const std::vector<ScoredPair> pairs = {{"a", "one", 1}, {"b", "one two", 0}, {"a", "five", 0}};
    const auto s = score_pairs(v, sup, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_DOUBLE_EQ(s[i], similarity(v, sup.at(pairs[i].author), pairs[i].document));
    }
}

TEST(DumpJson, HasTunedFields) {
    const auto r = tune({"abc abd"}, {{"x", "abc"}}, {{"x", "abc", 1}, {"x", "zzz", 0}});
    const auto text = dump_json(r);
    for (const char* key : {"\"n\"", "\"threshold\"", "\"features\"", "\"idf\""}) {
        EXPECT_NE(text.find(key), std::string::npos) << key;
    }
}
