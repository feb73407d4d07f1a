#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lg4av::corpus {

using AuthorId = std::string;
using DocId = std::string;
using DocIdSet = std::set<DocId>;

struct Document {
    DocId doc_id;
    std::string title;
    std::string abstract;
    int year = 0;
    std::vector<AuthorId> authors;
    std::string body;  // title + '\n' + abstract
};

/// Builds a document with its body derived from title and abstract.
Document make_document(DocId id, std::string title, std::string abstract, int year,
                       std::vector<AuthorId> authors);

/// Authors, their documents and every retained document.
class AuthorshipIndex {
public:
    /// Throws IngestionError on a duplicate doc id.
    void add(Document doc);

    const std::set<AuthorId>& authors() const noexcept { return authors_; }
    const std::map<AuthorId, DocIdSet>& docs_of() const noexcept { return docs_of_; }
    const std::map<DocId, Document>& all_docs() const noexcept { return all_docs_; }

    bool has_author(const AuthorId& a) const { return authors_.contains(a); }
    /// Throws LookupError for an unknown author.
    const DocIdSet& docs_of(const AuthorId& a) const;
    /// Throws LookupError for an unknown document.
    const Document& doc(const DocId& d) const;

    std::size_t size() const noexcept { return all_docs_.size(); }

private:
    std::set<AuthorId> authors_;
    std::map<AuthorId, DocIdSet> docs_of_;
    std::map<DocId, Document> all_docs_;
};

/// Years are inclusive calendar years; train_until < val_year < test_from.
struct SplitSpec {
    int train_until = 2015;
    int val_year = 2016;
    int test_from = 2017;

    void validate() const;
};

enum class Split { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct TemporalSplit {
    DocIdSet train;
    DocIdSet val;
    DocIdSet test;
};

struct LabeledPair {
    AuthorId author;
    DocId doc;
    int label = 0;
    Split split = Split::train;

    bool operator==(const LabeledPair&) const = default;
};

struct ExampleSet {
    std::vector<LabeledPair> pairs;
    std::uint64_t seed = 0;

    bool operator==(const ExampleSet&) const = default;
};

/// Reads line-delimited JSON records {id, title, abstract, year, authors}.
/// Records without an abstract are dropped.
AuthorshipIndex load_corpus(const std::filesystem::path& path);
AuthorshipIndex load_corpus(std::istream& in);

void write_corpus(std::ostream& out, const std::vector<Document>& docs);

TemporalSplit temporal_split(const AuthorshipIndex& index, const SplitSpec& spec);

/// One positive per authored document in `pool` and as many negatives drawn
/// uniformly without replacement from pool minus D(a). Authors are visited in
/// sorted order; each gets its own generator derived from (seed, author id).
ExampleSet build_examples(const AuthorshipIndex& index, const std::set<AuthorId>& authors,
                          const DocIdSet& pool, Split split, std::uint64_t seed);

/// Bodies of the author's documents within `pool`, newline-joined in doc-id order.
std::string superdocument(const AuthorshipIndex& index, const AuthorId& author,
                          const DocIdSet& pool);

void write_examples(std::ostream& out, const ExampleSet& examples);
ExampleSet read_examples(std::istream& in);

}  // namespace lg4av::corpus
