#include "lg4av/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "lg4av/error.hpp"
#include "lg4av/random.hpp"

namespace lg4av::corpus {

using nlohmann::json;

Document make_document(DocId id, std::string title, std::string abstract, int year,
                       std::vector<AuthorId> authors) {
    Document d;
    d.doc_id = std::move(id);
    d.title = std::move(title);
    d.abstract = std::move(abstract);
    d.year = year;
    d.authors = std::move(authors);
    d.body = d.title + "\n" + d.abstract;
    return d;
}

void AuthorshipIndex::add(Document doc) {
    if (all_docs_.contains(doc.doc_id)) {
        throw IngestionError("duplicate doc id \"" + doc.doc_id + "\"");
    }
    for (const auto& a : doc.authors) {
        authors_.insert(a);
        docs_of_[a].insert(doc.doc_id);
    }
    auto id = doc.doc_id;
    all_docs_.emplace(std::move(id), std::move(doc));
}

const DocIdSet& AuthorshipIndex::docs_of(const AuthorId& a) const {
    auto it = docs_of_.find(a);
    if (it == docs_of_.end()) throw LookupError("unknown author \"" + a + "\"");
    return it->second;
}

const Document& AuthorshipIndex::doc(const DocId& d) const {
    auto it = all_docs_.find(d);
    if (it == all_docs_.end()) throw LookupError("unknown document \"" + d + "\"");
    return it->second;
}

void SplitSpec::validate() const {
    if (!(train_until < val_year && val_year < test_from)) {
        throw Error("split years must satisfy train_until < val_year < test_from");
    }
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw Error("unknown split \"" + s + "\"");
}

namespace {

Document parse_record(const std::string& line, std::size_t lineno) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!j.is_object()) throw ParseError("record is not a JSON object", lineno);
    try {
        std::string abstract;
        if (j.contains("abstract") && !j["abstract"].is_null()) {
            abstract = j.at("abstract").get<std::string>();
        }
        return make_document(j.at("id").get<std::string>(), j.at("title").get<std::string>(),
                             std::move(abstract), j.at("year").get<int>(),
                             j.at("authors").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid record: ") + e.what(), lineno);
    }
}

}  // namespace

AuthorshipIndex load_corpus(std::istream& in) {
    AuthorshipIndex index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Document doc = parse_record(line, lineno);
        if (doc.abstract.empty()) continue;
        std::sort(doc.authors.begin(), doc.authors.end());
        doc.authors.erase(std::unique(doc.authors.begin(), doc.authors.end()), doc.authors.end());
        index.add(std::move(doc));
    }
    return index;
}

AuthorshipIndex load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus " + path.string());
    return load_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<Document>& docs) {
    for (const auto& d : docs) {
        json j = {{"id", d.doc_id},
                  {"title", d.title},
                  {"abstract", d.abstract},
                  {"year", d.year},
                  {"authors", d.authors}};
        out << j.dump() << '\n';
    }
}

TemporalSplit temporal_split(const AuthorshipIndex& index, const SplitSpec& spec) {
    spec.validate();
    TemporalSplit s;
    for (const auto& [id, doc] : index.all_docs()) {
        if (doc.year <= spec.train_until) {
            s.train.insert(id);
        } else if (doc.year == spec.val_year) {
            s.val.insert(id);
        } else if (doc.year >= spec.test_from) {
            s.test.insert(id);
        }
    }
    return s;
}

ExampleSet build_examples(const AuthorshipIndex& index, const std::set<AuthorId>& authors,
                          const DocIdSet& pool, Split split, std::uint64_t seed) {
    if (pool.empty()) throw SamplingError("empty document pool");
    ExampleSet out;
    out.seed = seed;
    const std::vector<DocId> pool_vec(pool.begin(), pool.end());

    for (const auto& a : authors) {
        const DocIdSet& own = index.docs_of(a);
        std::vector<DocId> positives;
        std::vector<DocId> candidates;
        for (const auto& d : pool_vec) {
            (own.contains(d) ? positives : candidates).push_back(d);
        }
        if (positives.empty()) continue;
        if (candidates.size() < positives.size()) {
            throw SamplingError("author \"" + a + "\" has " + std::to_string(positives.size()) +
                                " documents but only " + std::to_string(candidates.size()) +
                                " candidate negatives");
        }
        // partial Fisher-Yates: first |positives| slots become the sample
        std::mt19937_64 rng(derive_seed(seed, a));
        for (std::size_t i = 0; i < positives.size(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
            std::swap(candidates[i], candidates[pick(rng)]);
        }
        for (const auto& d : positives) out.pairs.push_back({a, d, 1, split});
        for (std::size_t i = 0; i < positives.size(); ++i) {
            out.pairs.push_back({a, candidates[i], 0, split});
        }
    }
    return out;
}

std::string superdocument(const AuthorshipIndex& index, const AuthorId& author,
                          const DocIdSet& pool) {
    std::string out;
    bool first = true;
    for (const auto& d : index.docs_of(author)) {  // std::set: sorted by id
        if (!pool.contains(d)) continue;
        if (!first) out += '\n';
        out += index.doc(d).body;
        first = false;
    }
    return out;
}

void write_examples(std::ostream& out, const ExampleSet& examples) {
    for (const auto& p : examples.pairs) {
        json j = {{"author", p.author}, {"doc", p.doc}, {"label", p.label},
                  {"split", to_string(p.split)}};
        out << j.dump() << '\n';
    }
}

ExampleSet read_examples(std::istream& in) {
    ExampleSet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            set.pairs.push_back({j.at("author").get<std::string>(), j.at("doc").get<std::string>(),
                                 j.at("label").get<int>(),
                                 split_from_string(j.at("split").get<std::string>())});
        } catch (const json::exception& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return set;
}

}  // namespace lg4av::corpus
