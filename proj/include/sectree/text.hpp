#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sectree {

// Registered tokenization rules.
//   whitespace: split on ASCII whitespace, text kept verbatim.
//   word:       lowercase, split on non-alphanumerics; a '.' between two digits
//               stays inside the token so decimals like "7.0" survive.
//   stem:       word rule followed by Porter stemming of alphabetic tokens.
enum class TokenizerRule { Whitespace, Word, Stem };

TokenizerRule tokenizer_from_name(std::string_view name);
std::string_view tokenizer_name(TokenizerRule rule);

struct Token {
    std::string text;
    std::size_t begin = 0; // byte offsets into the source text
    std::size_t end = 0;
};

std::vector<Token> tokenize_spans(std::string_view text, TokenizerRule rule);
std::vector<std::string> tokenize(std::string_view text, TokenizerRule rule);
std::vector<std::string> tokenize(std::string_view text, std::string_view rule_name);

bool is_stopword(std::string_view lowered_token);

// Word tokens with stopwords removed; falls back to all word tokens when
// every token is a stopword.
std::vector<std::string> content_tokens(std::string_view text);

std::vector<std::string> split_paragraphs(std::string_view text);
std::vector<std::string> split_sentences(std::string_view text);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
// Lowercase and collapse runs of whitespace to one space.
std::string normalize_whitespace_lower(std::string_view text);
bool contains_digit(std::string_view text);
std::size_t count_words(std::string_view text);
// First `max_words` whitespace-separated words of text, joined by single spaces.
std::string truncate_words(std::string_view text, std::size_t max_words);

} // namespace sectree
