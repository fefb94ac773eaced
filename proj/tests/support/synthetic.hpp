#pragma once

// Planted-evidence corpus for end-to-end tests: every filing has five Items,
// each Item talks about its own topic and its own family of lexicon terms,
// and each Item hides exactly one numeric fact behind two nonce words.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sectree/eval.hpp"
#include "sectree/ingest.hpp"

namespace sectree::testing {

struct PlantedFact {
    std::string filing_id;
    std::string item_label;
    std::string sentence; // as written in the filing
    GoldRecord gold;
};

struct SyntheticCorpus {
    std::vector<std::pair<std::string, std::string>> filings; // id, markdown
    std::vector<std::string> lexicon;                         // one term per line
    std::vector<PlantedFact> facts;
    ChunkingConfig chunking;

    std::vector<GoldRecord> gold() const;
    std::vector<ChunkedFiling> chunked() const;
    // corpus/<id>.md, lexicon.txt, gold.jsonl and a config.json using stub providers.
    void write_to(const std::filesystem::path& dir, std::uint64_t seed = 7) const;
};

inline const std::vector<std::string>& planted_item_labels() {
    static const std::vector<std::string> labels{"1", "1A", "2", "7", "8"};
    return labels;
}

SyntheticCorpus make_planted_corpus(std::size_t n_filings = 20, std::uint64_t seed = 11);

// Word families for lexicon clustering tests: family f has terms
// "<head_f> <modifier>" for `per_family` distinct modifiers.
std::vector<std::vector<std::string>> term_families(std::size_t n_families, std::size_t per_family);

} // namespace sectree::testing
