#include "lg4av/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include "lg4av/error.hpp"

namespace lg4av::encoder {

namespace {
constexpr std::string_view kAuthorSection = "[AUTHORS]";

bool is_word_byte(unsigned char c) {
    return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
}  // namespace

Vocabulary::Vocabulary() : Vocabulary({}, {}) {}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<AuthorId> authors) {
    tokens_ = {std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken)};
    for (auto& w : words) tokens_.push_back(std::move(w));
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!token_index_.emplace(tokens_[i], i).second) {
            throw Error("duplicate vocabulary token \"" + tokens_[i] + "\"");
        }
    }
    add_authors(authors);
}

std::size_t Vocabulary::token_id(std::string_view word) const {
    auto it = token_index_.find(word);
    return it == token_index_.end() ? kUnk : it->second;
}

std::size_t Vocabulary::cls_row(const AuthorId& a) const {
    auto it = author_row_.find(a);
    if (it == author_row_.end()) {
        throw LookupError("author \"" + a + "\" has no classification token");
    }
    return it->second;
}

std::vector<std::size_t> Vocabulary::add_authors(const std::vector<AuthorId>& authors) {
    std::vector<std::size_t> rows;
    for (const auto& a : authors) {
        if (author_row_.contains(a)) continue;
        authors_.push_back(a);
        std::size_t row = tokens_.size() + authors_.size() - 1;
        author_row_.emplace(a, row);
        rows.push_back(row);
    }
    return rows;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vocabulary build_vocabulary(const std::vector<std::string>& bodies, std::size_t min_freq,
                            std::size_t max_size, std::vector<AuthorId> authors) {
    if (bodies.empty()) throw Error("build_vocabulary: empty corpus");
    std::map<std::string, std::size_t> freq;
    for (const auto& b : bodies) {
        for (auto& w : split_words(b)) ++freq[std::move(w)];
    }
    if (freq.empty()) throw Error("build_vocabulary: corpus has no words");
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto& [w, f] : freq) {
        if (f >= min_freq) ranked.emplace_back(w, f);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_size) ranked.resize(max_size);
    std::vector<std::string> words;
    words.reserve(ranked.size());
    for (auto& [w, f] : ranked) words.push_back(std::move(w));
    return Vocabulary(std::move(words), std::move(authors));
}

TokenSequence tokenize(const Vocabulary& v, std::string_view body,
                       const std::optional<AuthorId>& author, std::size_t max_len) {
    if (max_len == 0) throw Error("tokenize: max_len must be positive");
    TokenSequence seq;
    seq.ids.push_back(author ? v.cls_row(*author) : Vocabulary::kClsBase);
    for (const auto& w : split_words(body)) {
        if (seq.ids.size() >= max_len) break;
        seq.ids.push_back(v.token_id(w));
    }
    seq.attention_mask.assign(seq.ids.size(), 1);
    return seq;
}

void write_vocabulary(std::ostream& out, const Vocabulary& v) {
    for (const auto& t : v.tokens()) out << t << '\n';
    out << kAuthorSection << '\n';
    for (const auto& a : v.authors()) out << a << '\n';
}

Vocabulary read_vocabulary(std::istream& in) {
    std::vector<std::string> lines;
    std::vector<AuthorId> authors;
    std::string line;
    bool in_authors = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!in_authors && line == kAuthorSection) {
            in_authors = true;
            continue;
        }
        (in_authors ? authors : lines).push_back(line);
    }
    if (lines.size() < 3 || lines[0] != kPadToken || lines[1] != kUnkToken || lines[2] != kClsToken) {
        throw ParseError("vocabulary must start with the special tokens", 1);
    }
    if (!in_authors) throw ParseError("missing author section", lineno);
    lines.erase(lines.begin(), lines.begin() + 3);
    return Vocabulary(std::move(lines), std::move(authors));
}

}  // namespace lg4av::encoder
