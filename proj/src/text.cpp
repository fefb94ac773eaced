#include "sectree/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "sectree/error.hpp"
#include "sectree/stemmer.hpp"

namespace sectree {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }
char lower_ascii(unsigned char c) { return static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c); }

bool all_alpha(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return c >= 'a' && c <= 'z'; });
}

std::vector<Token> whitespace_spans(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
        out.push_back({std::string(text.substr(start, i - start)), start, i});
    }
    return out;
}

std::vector<Token> word_spans(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        std::size_t start = i;
        std::string tok;
        while (i < n) {
            auto c = static_cast<unsigned char>(text[i]);
            if (is_word_byte(c)) {
                tok.push_back(lower_ascii(c));
                ++i;
            } else if (c == '.' && i > start && is_digit(static_cast<unsigned char>(text[i - 1])) && i + 1 < n &&
                       is_digit(static_cast<unsigned char>(text[i + 1]))) {
                tok.push_back('.');
                ++i;
            } else {
                break;
            }
        }
        out.push_back({std::move(tok), start, i});
    }
    return out;
}

constexpr std::array<std::string_view, 72> kStopwords = {
    "a",     "about", "above", "after", "all",   "also",  "an",    "and",   "any",   "are",   "as",    "at",
    "be",    "been",  "being", "but",   "by",    "can",   "could", "did",   "do",    "does",  "during", "each",
    "for",   "from",  "had",   "has",   "have",  "how",   "i",     "if",    "in",    "into",  "is",    "it",
    "its",   "may",   "more",  "most",  "no",    "not",   "of",    "on",    "or",    "other", "our",   "over",
    "should", "so",   "such",  "than",  "that",  "the",   "their", "them",  "then",  "there", "these", "they",
    "this",  "to",    "under", "was",   "we",    "were",  "what",  "when",  "which", "while", "who",   "with",
};
static_assert(std::is_sorted(kStopwords.begin(), kStopwords.end()));

} // namespace

TokenizerRule tokenizer_from_name(std::string_view name) {
    if (name == "whitespace") return TokenizerRule::Whitespace;
    if (name == "word") return TokenizerRule::Word;
    if (name == "stem") return TokenizerRule::Stem;
    throw Error(ErrorKind::UnknownTokenizer, "no tokenizer named '" + std::string(name) + "'");
}

std::string_view tokenizer_name(TokenizerRule rule) {
    switch (rule) {
    case TokenizerRule::Whitespace: return "whitespace";
    case TokenizerRule::Word: return "word";
    case TokenizerRule::Stem: return "stem";
    }
    return "word";
}

std::vector<Token> tokenize_spans(std::string_view text, TokenizerRule rule) {
    switch (rule) {
    case TokenizerRule::Whitespace: return whitespace_spans(text);
    case TokenizerRule::Word: return word_spans(text);
    case TokenizerRule::Stem: {
        auto toks = word_spans(text);
        for (auto& t : toks) {
            if (all_alpha(t.text)) t.text = porter_stem(t.text);
        }
        return toks;
    }
    }
    return {};
}

std::vector<std::string> tokenize(std::string_view text, TokenizerRule rule) {
    auto spans = tokenize_spans(text, rule);
    std::vector<std::string> out;
    out.reserve(spans.size());
    for (auto& t : spans) out.push_back(std::move(t.text));
    return out;
}

std::vector<std::string> tokenize(std::string_view text, std::string_view rule_name) {
    return tokenize(text, tokenizer_from_name(rule_name));
}

bool is_stopword(std::string_view lowered_token) {
    return std::binary_search(kStopwords.begin(), kStopwords.end(), lowered_token);
}

std::vector<std::string> content_tokens(std::string_view text) {
    auto all = tokenize(text, TokenizerRule::Word);
    std::vector<std::string> out;
    for (const auto& t : all) {
        if (!is_stopword(t)) out.push_back(t);
    }
    return out.empty() ? all : out;
}

std::vector<std::string> split_paragraphs(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    std::size_t pos = 0;
    auto flush = [&] {
        auto t = trim(current);
        if (!t.empty()) out.push_back(std::move(t));
        current.clear();
    };
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        if (trim(line).empty()) {
            flush();
        } else {
            if (!current.empty()) current.push_back('\n');
            current.append(line);
        }
        pos = eol + 1;
    }
    flush();
    return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        bool boundary = (c == '.' || c == '!' || c == '?') &&
                        (i + 1 == text.size() || is_space(static_cast<unsigned char>(text[i + 1])));
        if (boundary) {
            auto s = trim(text.substr(start, i + 1 - start));
            if (!s.empty()) out.push_back(std::move(s));
            start = i + 1;
        }
    }
    if (start < text.size()) {
        auto s = trim(text.substr(start));
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (auto& c : out) c = lower_ascii(static_cast<unsigned char>(c));
    return out;
}

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

std::string normalize_whitespace_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(lower_ascii(c));
    }
    return out;
}

bool contains_digit(std::string_view text) {
    return std::any_of(text.begin(), text.end(), [](unsigned char c) { return is_digit(c); });
}

std::size_t count_words(std::string_view text) { return whitespace_spans(text).size(); }

std::string truncate_words(std::string_view text, std::size_t max_words) {
    auto words = whitespace_spans(text);
    std::string out;
    for (std::size_t i = 0; i < words.size() && i < max_words; ++i) {
        if (i) out.push_back(' ');
        out += words[i].text;
    }
    return out;
}

} // namespace sectree
