#include "sectree/stats.hpp"

#include <algorithm>
#include <cstdio>

#include "sectree/error.hpp"

namespace sectree {

namespace {

StatRow summarize_row(std::string name, const std::vector<double>& xs) {
    StatRow r;
    r.name = std::move(name);
    r.samples = xs.size();
    if (xs.empty()) return r;
    r.min = *std::min_element(xs.begin(), xs.end());
    r.max = *std::max_element(xs.begin(), xs.end());
    double sum = 0;
    for (double x : xs) sum += x;
    r.mean = std::clamp(sum / static_cast<double>(xs.size()), r.min, r.max);
    return r;
}

} // namespace

const StatRow* CorpusStats::row(std::string_view name) const {
    for (const auto& r : rows) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

CorpusStats corpus_stats(const std::vector<ChunkedFiling>& corpus, const IndexSet* index,
                         const std::vector<std::string>& queries, TokenizerRule tokenizer) {
    if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "no filings to summarize");

    std::vector<double> depth, mean_leaf_depth, total_nodes, internal_nodes, leaf_nodes, items, doc_tokens,
        summary_tokens, page_tokens, query_tokens;
    for (const auto& cf : corpus) {
        double tokens = 0;
        for (const auto& item : cf.filing.items) tokens += static_cast<double>(tokenize(item.body, tokenizer).size());
        doc_tokens.push_back(tokens);
        items.push_back(static_cast<double>(cf.filing.items.size()));
        for (const auto& c : cf.chunks) page_tokens.push_back(static_cast<double>(c.token_count));

        const FilingIndex* fi = index ? index->find_filing(cf.filing.filing_id) : nullptr;
        if (!fi) continue;
        double total = 0, internal = 0, leaves = 0;
        for (const auto& item : fi->items) {
            const auto& tree = item.summary;
            depth.push_back(tree.height());
            mean_leaf_depth.push_back(tree.mean_leaf_depth());
            total += static_cast<double>(tree.nodes.size());
            internal += static_cast<double>(tree.internal_count());
            leaves += static_cast<double>(tree.leaf_count());
            for (const auto& n : tree.nodes) {
                if (!n.is_leaf()) summary_tokens.push_back(static_cast<double>(tokenize(n.summary, tokenizer).size()));
            }
        }
        total_nodes.push_back(total);
        internal_nodes.push_back(internal);
        leaf_nodes.push_back(leaves);
    }
    for (const auto& q : queries) query_tokens.push_back(static_cast<double>(tokenize(q, tokenizer).size()));

    CorpusStats stats;
    stats.n_filings = corpus.size();
    stats.rows.push_back(summarize_row("tree_depth", depth));
    stats.rows.push_back(summarize_row("tree_mean_leaf_depth", mean_leaf_depth));
    stats.rows.push_back(summarize_row("total_nodes", total_nodes));
    stats.rows.push_back(summarize_row("internal_nodes", internal_nodes));
    stats.rows.push_back(summarize_row("leaf_nodes", leaf_nodes));
    stats.rows.push_back(summarize_row("items", items));
    stats.rows.push_back(summarize_row("tokens_per_document", doc_tokens));
    stats.rows.push_back(summarize_row("tokens_per_summary_node", summary_tokens));
    stats.rows.push_back(summarize_row("tokens_per_page_node", page_tokens));
    if (!queries.empty()) stats.rows.push_back(summarize_row("tokens_per_query", query_tokens));
    return stats;
}

nlohmann::json to_json(const CorpusStats& stats) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : stats.rows) {
        rows.push_back({{"name", r.name}, {"samples", r.samples}, {"min", r.min}, {"mean", r.mean}, {"max", r.max}});
    }
    return {{"filings", stats.n_filings}, {"rows", rows}};
}

std::string format_stats_table(const CorpusStats& stats) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-26s %8s %12s %12s %12s\n", "statistic", "samples", "min", "mean", "max");
    out += buf;
    for (const auto& r : stats.rows) {
        std::snprintf(buf, sizeof buf, "%-26s %8zu %12.2f %12.2f %12.2f\n", r.name.c_str(), r.samples, r.min, r.mean,
                      r.max);
        out += buf;
    }
    return out;
}

} // namespace sectree
