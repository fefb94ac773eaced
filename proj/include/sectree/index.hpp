#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sectree/ingest.hpp"
#include "sectree/lexicon.hpp"
#include "sectree/providers.hpp"
#include "sectree/tree.hpp"

namespace sectree {

inline constexpr int kIndexFormatVersion = 1;

struct FilingIndex {
    std::string filing_id;
    std::string company;
    int fiscal_year = 0;
    std::vector<ItemIndex> items; // filing order
    TermFrequencyTable term_counts;

    const ItemIndex* find_item(std::string_view item_label) const;
    std::vector<std::string> item_labels() const;
    // Chunk text by id, looked up in the Summary-tree leaves.
    const std::string* chunk_text(std::string_view chunk_id) const;

    bool operator==(const FilingIndex&) const;
};

struct IndexSet {
    IndexConfig config;
    Lexicon lexicon;
    std::vector<FilingIndex> filings; // sorted by filing_id

    const FilingIndex* find_filing(std::string_view filing_id) const;
    TermFrequencyTable corpus_term_counts() const;
};

// Clusters the lexicon, counts term clusters per Item and builds both trees
// for every Item with at least one chunk.
IndexSet build_index(const std::vector<ChunkedFiling>& corpus, std::vector<LexiconTerm> lexicon_terms,
                     const IndexConfig& cfg, const ProviderSet& providers);

FilingIndex build_filing_index(const ChunkedFiling& filing, const Lexicon& lexicon, const IndexConfig& cfg,
                               const ProviderSet& providers);

// Directory layout:
//   manifest.json         format version, config, per-file SHA-256, per-Item topology hash,
//                         and a checksum over the manifest itself
//   lexicon.json          terms, cluster ids, centroids
//   fNNNN/terms.json      per-filing term-cluster counts
//   fNNNN/<item>.summary.jsonl, fNNNN/<item>.question.jsonl   node tables
//   fNNNN/<item>.emb      little-endian float32 embeddings with an offset table
void save_index(const IndexSet& index, const std::filesystem::path& dir);
IndexSet load_index(const std::filesystem::path& dir);

nlohmann::json to_json(const IndexConfig& cfg);
IndexConfig index_config_from_json(const nlohmann::json& j);

} // namespace sectree
