#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kgqa::text {

struct TokenSpan {
    std::size_t begin;  // byte offset of first char
    std::size_t end;    // one past last char
};

// Shared tokenizer: lowercase, split on any non-alphanumeric run.
std::vector<std::string> tokenize(const std::string& s);

// Byte spans of the tokens of `tokenize`, in order, against the original text.
std::vector<TokenSpan> token_spans(const std::string& s);

// Tokens re-joined with single spaces; canonical key for fuzzy matching and
// entity identity.
std::string normalize(const std::string& s);

std::string to_lower(const std::string& s);

// Levenshtein edit distance (unit costs).
std::size_t levenshtein(const std::string& a, const std::string& b);

// 1 - levenshtein/max(|a|,|b|) on the raw strings; 1.0 when both empty.
double similarity_ratio(const std::string& a, const std::string& b);

struct SentenceSpan {
    std::size_t begin;
    std::size_t end;  // one past the terminator (or text end)
};

// Split on '.', '?', '!' followed by whitespace or end of text; spans cover
// the trimmed sentence including its terminator.
std::vector<SentenceSpan> sentence_spans(const std::string& s);

// Trimmed sentence strings; empties dropped.
std::vector<std::string> split_sentences(const std::string& s);

std::string trim(const std::string& s);

// True when `needle`'s token sequence occurs contiguously in `hay_tokens`.
bool contains_token_seq(const std::vector<std::string>& hay_tokens,
                        const std::vector<std::string>& needle_tokens);

}  // namespace kgqa::text
