#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sectree/text.hpp"

namespace sectree {

struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const CharSpan&) const = default;
};

struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const TokenSpan&) const = default;
};

struct ItemSection {
    std::string item_label; // canonical: digits plus optional uppercase letter, e.g. "1A"
    std::string title;
    std::string body;
    CharSpan char_span; // span of `body` inside the source text
};

struct Filing {
    std::string filing_id;
    std::string company;
    int fiscal_year = 0;
    std::vector<ItemSection> items;
    std::string source_path;
    std::vector<std::string> warnings;

    const ItemSection* find_item(std::string_view label) const;
};

struct ParseOptions {
    // Matched per line, case-insensitively. Capture group 1 is the Item label,
    // group 2 (optional) the title.
    std::string heading_pattern = R"(^\s*(?:#{1,6}\s*)?(?:\*\*|__)?\s*item\s+(\d{1,2}[a-z]?)\b\s*[.:\-]?\s*(.*)$)";
    // Strict mode fails on duplicate labels; lenient mode keeps the first.
    bool strict = false;
};

struct ChunkingConfig {
    std::size_t chunk_tokens = 2000;
    std::size_t overlap_tokens = 100;
    TokenizerRule tokenizer = TokenizerRule::Word;

    void validate() const;
};

struct Chunk {
    std::string chunk_id; // "<filing_id>/<item_label>/<ordinal>"
    std::string filing_id;
    std::string item_label;
    std::string text;
    std::size_t token_count = 0;
    TokenSpan token_span;

    bool operator==(const Chunk&) const = default;
};

std::string make_chunk_id(std::string_view filing_id, std::string_view item_label, std::size_t ordinal);

// Splits a markdown filing into Item sections. Sections whose body is blank
// (table-of-contents entries) are dropped before duplicate resolution.
Filing parse_filing(std::string_view source, std::string filing_id, const ParseOptions& options = {});

// Markdown rendering that parse_filing maps back to the same labels and bodies.
std::string render_filing(const Filing& filing);

std::vector<Chunk> chunk_item(std::string_view filing_id, const ItemSection& section, const ChunkingConfig& cfg);
std::vector<Chunk> chunk_filing(const Filing& filing, const ChunkingConfig& cfg);

struct ChunkedFiling {
    Filing filing;
    std::vector<Chunk> chunks;
};

struct ManifestEntry {
    std::string filing_id;
    std::string company;
    int fiscal_year = 0;
    std::filesystem::path path;
};

// Reads every *.md file under `dir` (sorted by filename). When `manifest` is
// given it maps filing_id -> {company, year, path} and replaces the scan.
std::vector<Filing> load_corpus(const std::filesystem::path& dir, const std::filesystem::path& manifest = {},
                                const ParseOptions& options = {});

std::vector<ChunkedFiling> chunk_corpus(std::vector<Filing> filings, const ChunkingConfig& cfg);

// JSON Lines, one chunk per line: chunk_id, filing_id, item_label, token_span, token_count, text.
void write_chunks_jsonl(std::ostream& out, const std::vector<ChunkedFiling>& corpus);
std::vector<Chunk> read_chunks_jsonl(std::istream& in);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

} // namespace sectree
