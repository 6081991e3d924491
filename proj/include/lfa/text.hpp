#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lfa {

struct Token {
    std::size_t begin = 0; // byte offset into the source text
    std::size_t end = 0;
    std::string_view view(std::string_view text) const { return text.substr(begin, end - begin); }
};

// ASCII lowercase; bytes >= 0x80 pass through untouched.
std::string to_lower(std::string_view s);

// Word tokens: maximal runs of ASCII alphanumerics (plus a configurable set of
// interior characters). Offsets index the original bytes.
std::vector<Token> word_tokens(std::string_view text);

// Lowercased word tokens with punctuation stripped, as strings. Shared by
// ROUGE-L and the greedy-matching token similarity score.
std::vector<std::string> metric_tokens(std::string_view text);

// Whitespace-delimited chunks (for token-level embedding).
std::vector<std::string> whitespace_tokens(std::string_view text);

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double v);

// Fixed-point with `places` digits after the point.
std::string format_fixed(double v, int places);

// Strict full-string parse; returns false on trailing garbage.
bool parse_double(std::string_view s, double& out);

// Clause boundaries for negation scope: '.', ';', '!', '?', '\n'.
// Returns the byte offset of the clause start containing `pos`.
std::size_t clause_start(std::string_view text, std::size_t pos);

bool is_valid_utf8(std::string_view s);

} // namespace lfa
