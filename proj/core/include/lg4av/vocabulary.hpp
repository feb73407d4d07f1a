#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lg4av/corpus.hpp"

namespace lg4av::encoder {

using corpus::AuthorId;

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";

/// Word-level vocabulary. Rows [0, author_cls_offset()) are tokens (specials
/// first); the per-author classification rows follow as one contiguous block.
class Vocabulary {
public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kUnk = 1;
    static constexpr std::size_t kClsBase = 2;

    Vocabulary();  // specials only
    Vocabulary(std::vector<std::string> words, std::vector<AuthorId> authors);

    std::size_t token_count() const noexcept { return tokens_.size(); }
    std::size_t author_cls_offset() const noexcept { return tokens_.size(); }
    std::size_t author_count() const noexcept { return authors_.size(); }
    /// Rows of the embedding table: tokens plus author classification rows.
    std::size_t rows() const noexcept { return tokens_.size() + authors_.size(); }

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const std::vector<AuthorId>& authors() const noexcept { return authors_; }

    /// UNK for out-of-vocabulary words.
    std::size_t token_id(std::string_view word) const;
    bool has_author(const AuthorId& a) const { return author_row_.contains(a); }
    /// Throws LookupError when the author has no classification row.
    std::size_t cls_row(const AuthorId& a) const;

    /// Appends classification rows for authors not yet present; returns their rows.
    std::vector<std::size_t> add_authors(const std::vector<AuthorId>& authors);

    bool operator==(const Vocabulary& o) const {
        return tokens_ == o.tokens_ && authors_ == o.authors_;
    }

private:
    std::vector<std::string> tokens_;
    std::map<std::string, std::size_t, std::less<>> token_index_;
    std::vector<AuthorId> authors_;
    std::map<AuthorId, std::size_t> author_row_;
};

struct TokenSequence {
    std::vector<std::size_t> ids;
    std::vector<unsigned char> attention_mask;

    std::size_t size() const noexcept { return ids.size(); }
};

/// Lowercased words; ASCII punctuation and whitespace separate words and are dropped.
std::vector<std::string> split_words(std::string_view text);

/// Most frequent words with frequency >= min_freq, capped at max_size, ordered by
/// (-frequency, word). Throws when the corpus is empty.
Vocabulary build_vocabulary(const std::vector<std::string>& bodies, std::size_t min_freq,
                            std::size_t max_size, std::vector<AuthorId> authors = {});

/// [CLS-author or CLS] followed by word ids, truncated to max_len.
TokenSequence tokenize(const Vocabulary& v, std::string_view body,
                       const std::optional<AuthorId>& author, std::size_t max_len);

/// Tokens one per line (line number = index), then "[AUTHORS]", then one author id per line.
void write_vocabulary(std::ostream& out, const Vocabulary& v);
Vocabulary read_vocabulary(std::istream& in);

}  // namespace lg4av::encoder
