#include "lg4av/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>

#include "lg4av/error.hpp"

namespace lg4av::synth {

namespace {

struct AuthorPlan {
    corpus::AuthorId id;
    std::size_t topic = 0;
    bool is_new = false;
    std::vector<std::size_t> signature;  // indices into the topic block
    std::vector<std::size_t> neighbors;
};

std::string make_word(std::mt19937_64& rng) {
    static constexpr std::array<const char*, 20> kOnsets = {"b", "c", "d", "f", "g", "h", "k", "l", "m", "n",
                                                            "p", "r", "s", "t", "v", "z", "br", "st", "tr", "ch"};
    static constexpr std::array<const char*, 6> kVowels = {"a", "e", "i", "o", "u", "y"};
    std::uniform_int_distribution<int> syllables(2, 4);
    std::uniform_int_distribution<std::size_t> onset(0, kOnsets.size() - 1);
    std::uniform_int_distribution<std::size_t> vowel(0, kVowels.size() - 1);
    std::string w;
    for (int s = syllables(rng); s > 0; --s) {
        w += kOnsets[onset(rng)];
        w += kVowels[vowel(rng)];
    }
    return w;
}

std::string pad_number(std::size_t n, int width) {
    std::string s = std::to_string(n);
    return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

}  // namespace

void SyntheticSpec::validate() const {
    for (double p : {val_docs_ratio, test_docs_ratio}) {
        if (p < 0.0) throw Error("synthetic: document ratios must be non-negative");
    }
    for (double p : {intra_topic_edge_prob, cross_topic_edge_prob, coauthor_prob, noise_rate, signature_rate, drift_rate}) {
        if (p < 0.0 || p > 1.0) throw Error("synthetic: probabilities must lie in [0, 1]");
    }
    if (n_topics == 0 || authors_per_topic == 0 || vocab_per_topic == 0 || abstract_words == 0) {
        throw Error("synthetic: counts must be positive");
    }
    if (signature_size == 0 || signature_size > vocab_per_topic) {
        throw Error("synthetic: signature size must lie in [1, vocab_per_topic]");
    }
    if (noise_rate > 0.0 && shared_vocab == 0) throw Error("synthetic: noise needs a shared vocabulary");
    if (!(first_year <= train_until && train_until < val_year && val_year < test_from && test_from <= last_year)) {
        throw Error("synthetic: years must satisfy first <= train_until < val < test_from <= last");
    }
}

std::size_t topic_of(const corpus::AuthorId& author) {
    if (author.size() < 2 || author[0] != 't') throw Error("not a synthetic author id: " + author);
    return std::stoul(author.substr(1, author.find('_') - 1));
}

std::vector<corpus::Document> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    if (spec.docs_per_author == 0) return {};

    // distinct made-up words: topic blocks first, then the shared block
    std::set<std::string> used;
    auto fresh_words = [&](std::size_t count) {
        std::vector<std::string> out;
        while (out.size() < count) {
            auto w = make_word(rng);
            if (used.insert(w).second) out.push_back(std::move(w));
        }
        return out;
    };
    std::vector<std::vector<std::string>> topic_words;
    for (std::size_t t = 0; t < spec.n_topics; ++t) topic_words.push_back(fresh_words(spec.vocab_per_topic));
    const auto shared = fresh_words(spec.shared_vocab);

    std::vector<AuthorPlan> authors;
    for (std::size_t t = 0; t < spec.n_topics; ++t) {
        for (std::size_t i = 0; i < spec.authors_per_topic; ++i) {
            authors.push_back({"t" + std::to_string(t) + "_a" + pad_number(i, 3), t, false, {}, {}});
        }
        for (std::size_t i = 0; i < spec.new_authors_per_topic; ++i) {
            authors.push_back({"t" + std::to_string(t) + "_n" + pad_number(i, 3), t, true, {}, {}});
        }
    }
    for (auto& a : authors) {
        std::vector<std::size_t> block(spec.vocab_per_topic);
        for (std::size_t i = 0; i < block.size(); ++i) block[i] = i;
        std::shuffle(block.begin(), block.end(), rng);
        a.signature.assign(block.begin(), block.begin() + static_cast<std::ptrdiff_t>(spec.signature_size));
    }
    std::bernoulli_distribution intra(spec.intra_topic_edge_prob);
    std::bernoulli_distribution cross(spec.cross_topic_edge_prob);
    for (std::size_t i = 0; i < authors.size(); ++i) {
        for (std::size_t j = i + 1; j < authors.size(); ++j) {
            const bool edge = authors[i].topic == authors[j].topic ? intra(rng) : cross(rng);
            if (edge) {
                authors[i].neighbors.push_back(j);
                authors[j].neighbors.push_back(i);
            }
        }
    }

    const auto val_docs = static_cast<std::size_t>(std::lround(spec.val_docs_ratio * static_cast<double>(spec.docs_per_author)));
    const auto test_docs = static_cast<std::size_t>(std::lround(spec.test_docs_ratio * static_cast<double>(spec.docs_per_author)));

    std::bernoulli_distribution joins(spec.coauthor_prob);
    std::bernoulli_distribution is_noise(spec.noise_rate);
    std::bernoulli_distribution from_signature(spec.signature_rate);
    std::uniform_int_distribution<std::size_t> pick_shared(0, std::max<std::size_t>(spec.shared_vocab, 1) - 1);
    std::uniform_int_distribution<std::size_t> pick_topic(0, spec.vocab_per_topic - 1);
    std::uniform_int_distribution<std::size_t> pick_signature(0, spec.signature_size - 1);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw_word = [&](const AuthorPlan& a, int year) -> const std::string& {
        if (is_noise(rng)) return shared[pick_shared(rng)];
        const auto& block = topic_words[a.topic];
        if (!from_signature(rng)) return block[pick_topic(rng)];
        const double progress = static_cast<double>(year - spec.first_year) /
                                static_cast<double>(std::max(1, spec.last_year - spec.first_year));
        const AuthorPlan* source = &a;
        if (!a.neighbors.empty() && unit(rng) < spec.drift_rate * progress) {
            std::uniform_int_distribution<std::size_t> pick(0, a.neighbors.size() - 1);
            source = &authors[a.neighbors[pick(rng)]];
        }
        return topic_words[source->topic][source->signature[pick_signature(rng)]];
    };

    std::vector<corpus::Document> docs;
    auto write_doc = [&](std::size_t lead, int year) {
        std::vector<std::size_t> team = {lead};
        std::vector<std::size_t> nbrs = authors[lead].neighbors;
        std::shuffle(nbrs.begin(), nbrs.end(), rng);
        for (auto nb : nbrs) {
            if (team.size() > spec.max_coauthors) break;
            if (authors[nb].is_new && year < spec.val_year) continue;  // not active yet
            if (joins(rng)) team.push_back(nb);
        }
        std::uniform_int_distribution<std::size_t> pick_member(0, team.size() - 1);
        auto words = [&](std::size_t count) {
            std::string s;
            for (std::size_t w = 0; w < count; ++w) {
                if (w) s += (w % 10 == 0) ? ". " : " ";
                s += draw_word(authors[team[pick_member(rng)]], year);
            }
            return s;
        };
        std::string title = words(spec.title_words);
        if (!title.empty()) title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
        std::string abstract = words(spec.abstract_words) + ".";
        std::vector<corpus::AuthorId> ids;
        for (auto m : team) ids.push_back(authors[m].id);
        std::sort(ids.begin(), ids.end());
        docs.push_back(corpus::make_document("d" + pad_number(docs.size(), 6), std::move(title),
                                             std::move(abstract), year, std::move(ids)));
    };

    std::uniform_int_distribution<int> train_year(spec.first_year, spec.train_until);
    std::uniform_int_distribution<int> test_year(spec.test_from, spec.last_year);
    for (std::size_t a = 0; a < authors.size(); ++a) {
        if (!authors[a].is_new) {
            for (std::size_t d = 0; d < spec.docs_per_author; ++d) write_doc(a, train_year(rng));
        }
        for (std::size_t d = 0; d < val_docs; ++d) write_doc(a, spec.val_year);
        for (std::size_t d = 0; d < test_docs; ++d) write_doc(a, test_year(rng));
    }
    return docs;
}

}  // namespace lg4av::synth
