#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sectree/index.hpp"
#include "sectree/ingest.hpp"

namespace sectree {

struct StatRow {
    std::string name;
    std::size_t samples = 0;
    double min = 0;
    double mean = 0;
    double max = 0;
};

// Structural and token statistics. Each row aggregates over its own unit:
//   tree_depth, tree_mean_leaf_depth   per Summary tree
//   total_nodes, internal_nodes, leaf_nodes, items   per filing
//   tokens_per_document   per filing (sum of Item tokens)
//   tokens_per_summary_node   per internal Summary-tree node
//   tokens_per_page_node   per chunk
//   tokens_per_query   per query (only when queries are given)
struct CorpusStats {
    std::size_t n_filings = 0;
    std::vector<StatRow> rows;

    const StatRow* row(std::string_view name) const;
};

CorpusStats corpus_stats(const std::vector<ChunkedFiling>& corpus, const IndexSet* index = nullptr,
                         const std::vector<std::string>& queries = {}, TokenizerRule tokenizer = TokenizerRule::Word);

nlohmann::json to_json(const CorpusStats& stats);
std::string format_stats_table(const CorpusStats& stats);

} // namespace sectree
