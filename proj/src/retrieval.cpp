#include "sectree/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "sectree/error.hpp"

namespace sectree {

void TraversalConfig::validate() const {
    if (child_budget_b < 1) throw Error(ErrorKind::InvalidConfig, "child_budget_b must be at least 1");
}

std::string_view source_name(CandidateSource source) {
    switch (source) {
    case CandidateSource::SummaryTree: return "summary_tree";
    case CandidateSource::QuestionTree: return "question_tree";
    case CandidateSource::Both: return "both";
    }
    return "unknown";
}

SummaryBm25Scorer::SummaryBm25Scorer(std::string_view query, Bm25Params params) : params_(params) {
    params_.validate();
    query_terms_ = tokenize(query, params_.tokenizer);
    std::sort(query_terms_.begin(), query_terms_.end());
    query_terms_.erase(std::unique(query_terms_.begin(), query_terms_.end()), query_terms_.end());
}

std::vector<double> SummaryBm25Scorer::score(const TreeIndex& tree, const std::vector<NodeId>& siblings) const {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(siblings.size());
    for (NodeId id : siblings) {
        const TreeNode& n = tree.node(id);
        docs.push_back(tokenize(n.is_leaf() ? n.text : n.summary, params_.tokenizer));
    }
    const auto stats = Bm25CorpusStats::from_documents(docs);
    std::vector<double> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(bm25_score(query_terms_, d, stats, params_));
    return out;
}

QuestionCosineScorer::QuestionCosineScorer(EmbeddingVector query, QuestionAggregator aggregator)
    : query_(std::move(query)), aggregator_(aggregator) {}

std::vector<double> QuestionCosineScorer::score(const TreeIndex& tree, const std::vector<NodeId>& siblings) const {
    std::vector<double> out;
    out.reserve(siblings.size());
    for (NodeId id : siblings) {
        const TreeNode& n = tree.node(id);
        if (n.is_leaf()) {
            out.push_back(n.embedding ? cosine_similarity(query_, *n.embedding) : 0.0);
            continue;
        }
        if (n.question_embeddings.empty()) {
            out.push_back(0.0);
            continue;
        }
        double acc = aggregator_ == QuestionAggregator::Max ? -1.0 : 0.0;
        for (const auto& e : n.question_embeddings) {
            const double c = cosine_similarity(query_, e);
            acc = aggregator_ == QuestionAggregator::Max ? std::max(acc, c) : acc + c;
        }
        if (aggregator_ == QuestionAggregator::Mean) acc /= static_cast<double>(n.question_embeddings.size());
        out.push_back(acc);
    }
    return out;
}

namespace {

class Traversal {
public:
    Traversal(const TreeIndex& tree, const NodeScorer& scorer, const TraversalConfig& cfg, CandidateSource source,
              TraversalTrace* trace)
        : tree_(tree), scorer_(scorer), cfg_(cfg), source_(source), trace_(trace) {}

    void expand(NodeId parent, const std::vector<NodeId>& siblings, std::vector<NodeId>& path) {
        if (siblings.empty()) return;
        const auto scores = scorer_.score(tree_, siblings);
        if (trace_) trace_->nodes_scored += siblings.size();
        std::vector<std::size_t> order(siblings.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            const TreeNode& na = tree_.node(siblings[a]);
            const TreeNode& nb = tree_.node(siblings[b]);
            if (na.is_leaf() && nb.is_leaf()) return na.chunk_id < nb.chunk_id;
            return na.id < nb.id;
        });
        const std::size_t keep = std::min(order.size(), static_cast<std::size_t>(cfg_.child_budget_b));
        if (trace_) trace_->expanded[parent] = keep;
        for (std::size_t i = 0; i < keep; ++i) {
            const NodeId id = siblings[order[i]];
            const TreeNode& n = tree_.node(id);
            path.push_back(id);
            if (n.is_leaf()) {
                record(n, scores[order[i]], path);
            } else if (visited_.insert(id).second) {
                expand(id, n.children, path);
            }
            path.pop_back();
        }
    }

    std::vector<Candidate> take() {
        std::vector<Candidate> out;
        out.reserve(found_.size());
        for (auto& [_, c] : found_) out.push_back(std::move(c));
        std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
            if (a.traversal_score != b.traversal_score) return a.traversal_score > b.traversal_score;
            return a.chunk_id < b.chunk_id;
        });
        return out;
    }

private:
    void record(const TreeNode& leaf, double score, const std::vector<NodeId>& path) {
        auto it = found_.find(leaf.chunk_id);
        if (it != found_.end() && it->second.traversal_score >= score) return;
        Candidate c;
        c.chunk_id = leaf.chunk_id;
        c.item_label = tree_.item_label;
        c.source = source_;
        c.traversal_score = score;
        c.path = path;
        c.text = leaf.text;
        found_[leaf.chunk_id] = std::move(c);
    }

    const TreeIndex& tree_;
    const NodeScorer& scorer_;
    const TraversalConfig& cfg_;
    CandidateSource source_;
    TraversalTrace* trace_;
    std::set<NodeId> visited_;
    std::map<std::string, Candidate> found_;
};

bool by_score_then_id(double sa, const std::string& ida, double sb, const std::string& idb) {
    if (sa != sb) return sa > sb;
    return ida < idb;
}

std::vector<Candidate> normalized(std::vector<Candidate> cands) {
    if (cands.empty()) return cands;
    double lo = cands.front().traversal_score, hi = lo;
    for (const auto& c : cands) {
        lo = std::min(lo, c.traversal_score);
        hi = std::max(hi, c.traversal_score);
    }
    for (auto& c : cands) c.traversal_score = hi > lo ? (c.traversal_score - lo) / (hi - lo) : 1.0;
    return cands;
}

} // namespace

std::vector<Candidate> traverse_tree(const TreeIndex& tree, const NodeScorer& scorer, const TraversalConfig& cfg,
                                     CandidateSource source, TraversalTrace* trace) {
    cfg.validate();
    if (tree.nodes.empty() || tree.root_ids.empty()) {
        throw Error(ErrorKind::EmptyTree, "tree for Item " + tree.item_label + " of " + tree.filing_id + " is empty");
    }
    Traversal t(tree, scorer, cfg, source, trace);
    std::vector<NodeId> path;
    t.expand(TraversalTrace::kVirtualRoot, tree.root_ids, path);
    return t.take();
}

std::vector<Candidate> collect_candidates(const std::vector<Candidate>& summary_cands,
                                          const std::vector<Candidate>& question_cands) {
    std::map<std::string, Candidate> pool;
    for (auto& c : normalized(summary_cands)) pool.emplace(c.chunk_id, std::move(c));
    for (auto& c : normalized(question_cands)) {
        auto it = pool.find(c.chunk_id);
        if (it == pool.end()) {
            pool.emplace(c.chunk_id, std::move(c));
            continue;
        }
        Candidate& existing = it->second;
        if (c.traversal_score > existing.traversal_score) {
            existing.traversal_score = c.traversal_score;
            existing.path = c.path;
        }
        existing.source = CandidateSource::Both;
        if (existing.text.empty()) existing.text = c.text;
    }
    std::vector<Candidate> out;
    out.reserve(pool.size());
    for (auto& [_, c] : pool) out.push_back(std::move(c));
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        return by_score_then_id(a.traversal_score, a.chunk_id, b.traversal_score, b.chunk_id);
    });
    return out;
}

std::vector<ScoredCandidate> rerank_stage1(std::string_view query, const std::vector<Candidate>& pool,
                                           const ModelProvider& cross_encoder, std::size_t limit) {
    std::vector<ScoredCandidate> out;
    if (pool.empty() || limit == 0) return out;
    std::vector<std::string> texts;
    texts.reserve(pool.size());
    for (const auto& c : pool) texts.push_back(c.text);
    const auto scores = cross_encoder.score_pairs(query, texts);
    for (std::size_t i = 0; i < pool.size(); ++i) out.push_back({pool[i], scores.at(i), 0.0});
    std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        return by_score_then_id(a.stage1_score, a.candidate.chunk_id, b.stage1_score, b.candidate.chunk_id);
    });
    if (out.size() > limit) out.resize(limit);
    return out;
}

namespace {

RankedEntry to_entry(const ScoredCandidate& s) {
    RankedEntry e;
    e.chunk_id = s.candidate.chunk_id;
    e.item_label = s.candidate.item_label;
    e.stage1_score = s.stage1_score;
    e.stage2_score = s.stage2_score;
    e.traversal_score = s.candidate.traversal_score;
    e.source = s.candidate.source;
    e.path = s.candidate.path;
    e.text = s.candidate.text;
    return e;
}

void sort_entries(std::vector<RankedEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        return by_score_then_id(a.stage2_score, a.chunk_id, b.stage2_score, b.chunk_id);
    });
}

} // namespace

std::vector<RankedEntry> rerank_stage2(std::string_view query, const std::vector<std::vector<ScoredCandidate>>& per_item,
                                       const ModelProvider& cross_encoder, std::size_t k) {
    std::vector<ScoredCandidate> all;
    for (const auto& list : per_item) all.insert(all.end(), list.begin(), list.end());
    std::vector<RankedEntry> out;
    if (all.empty()) return out;
    std::vector<std::string> texts;
    texts.reserve(all.size());
    for (const auto& s : all) texts.push_back(s.candidate.text);
    const auto scores = cross_encoder.score_pairs(query, texts);
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i].stage2_score = scores.at(i);
        out.push_back(to_entry(all[i]));
    }
    sort_entries(out);
    if (out.size() > k) out.resize(k);
    return out;
}

void Ablations::enable(std::string_view flag) {
    if (flag == "no-flam") no_flam = true;
    else if (flag == "no-summary-tree") no_summary_tree = true;
    else if (flag == "no-question-tree") no_question_tree = true;
    else if (flag == "no-reranker") no_reranker = true;
    else throw Error(ErrorKind::InvalidConfig, "unknown ablation '" + std::string(flag) + "'");
}

std::vector<std::string> Ablations::labels() const {
    std::vector<std::string> out;
    if (no_flam) out.emplace_back("no-flam");
    if (no_summary_tree) out.emplace_back("no-summary-tree");
    if (no_question_tree) out.emplace_back("no-question-tree");
    if (no_reranker) out.emplace_back("no-reranker");
    return out;
}

void RetrievalConfig::validate() const {
    traversal.validate();
    bm25.validate();
    if (ablations.no_summary_tree && ablations.no_question_tree) {
        throw Error(ErrorKind::InvalidConfig, "cannot disable both trees");
    }
}

std::vector<std::string> RankedResult::texts() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.text);
    return out;
}

namespace {

// Term counts restricted to the filing's indexed Items.
TermFrequencyTable flam_table(const IndexSet& index, const FilingIndex& filing, bool corpus_level) {
    const TermFrequencyTable source = corpus_level ? index.corpus_term_counts() : filing.term_counts;
    TermFrequencyTable table;
    table.item_labels = filing.item_labels();
    std::sort(table.item_labels.begin(), table.item_labels.end(),
              [](const std::string& a, const std::string& b) { return item_label_less(a, b); });
    for (const auto& label : table.item_labels) {
        auto it = source.counts.find(label);
        table.counts[label] = it == source.counts.end() ? std::map<int, std::uint64_t>{} : it->second;
    }
    return table;
}

} // namespace

RankedResult retrieve(std::string_view query, const IndexSet& index, std::string_view filing_id, int k,
                      const RetrievalConfig& cfg, const ProviderSet& providers) {
    cfg.validate();
    if (k < 1) throw Error(ErrorKind::InvalidBudget, "k must be at least 1");
    const FilingIndex* filing = index.find_filing(filing_id);
    if (!filing) throw Error(ErrorKind::IndexMissing, "no index for filing " + std::string(filing_id));

    RankedResult result;
    result.query = std::string(query);
    result.filing_id = filing->filing_id;
    result.k = k;
    result.ablations = cfg.ablations.labels();

    const TermFrequencyTable table = flam_table(index, *filing, cfg.corpus_level_flam);
    if (cfg.ablations.no_flam || !index.lexicon.clustered()) {
        result.item_weights = uniform_weights(table.item_labels);
    } else {
        result.active_clusters = expand_query_terms(query, index.lexicon, *providers.embedder);
        result.item_weights = compute_item_weights(table, result.active_clusters, cfg.weighting);
    }
    result.budgets = allocate_budget(result.item_weights, k);

    const SummaryBm25Scorer bm25(query, cfg.bm25);
    std::optional<QuestionCosineScorer> dense;
    if (!cfg.ablations.no_question_tree) {
        dense.emplace(providers.embedder->embed_text(std::string(query), kQaSpace), cfg.traversal.aggregator);
    }

    std::vector<std::vector<ScoredCandidate>> per_item;
    for (const auto& budget : result.budgets.items) {
        if (budget.budget <= 0) continue;
        const ItemIndex* item = filing->find_item(budget.item_label);
        if (!item) continue;
        std::vector<Candidate> s, q;
        if (!cfg.ablations.no_summary_tree) {
            s = traverse_tree(item->summary, bm25, cfg.traversal, CandidateSource::SummaryTree);
        }
        if (dense) q = traverse_tree(item->question, *dense, cfg.traversal, CandidateSource::QuestionTree);
        auto pool = collect_candidates(s, q);
        for (auto& c : pool) {
            if (c.text.empty()) {
                if (const std::string* t = filing->chunk_text(c.chunk_id)) c.text = *t;
            }
        }
        const auto limit = static_cast<std::size_t>(budget.budget);
        if (cfg.ablations.no_reranker) {
            std::vector<ScoredCandidate> kept;
            for (std::size_t i = 0; i < pool.size() && i < limit; ++i) {
                kept.push_back({pool[i], pool[i].traversal_score, pool[i].traversal_score});
            }
            per_item.push_back(std::move(kept));
        } else {
            per_item.push_back(rerank_stage1(query, pool, *providers.cross_encoder, limit));
        }
    }

    if (cfg.ablations.no_reranker) {
        for (const auto& list : per_item) {
            for (const auto& s : list) result.entries.push_back(to_entry(s));
        }
        sort_entries(result.entries);
        if (result.entries.size() > static_cast<std::size_t>(k)) result.entries.resize(static_cast<std::size_t>(k));
    } else {
        result.entries = rerank_stage2(query, per_item, *providers.cross_encoder, static_cast<std::size_t>(k));
    }
    return result;
}

nlohmann::json to_json(const RankedResult& result) {
    nlohmann::json results = nlohmann::json::array();
    for (std::size_t i = 0; i < result.entries.size(); ++i) {
        const auto& e = result.entries[i];
        results.push_back({{"rank", i + 1},
                           {"chunk_id", e.chunk_id},
                           {"item_label", e.item_label},
                           {"source", source_name(e.source)},
                           {"scores", {{"stage2", e.stage2_score}, {"stage1", e.stage1_score}, {"traversal", e.traversal_score}}},
                           {"path", e.path},
                           {"text", e.text}});
    }
    return {{"query", result.query},
            {"filing_id", result.filing_id},
            {"k", result.k},
            {"ablations", result.ablations},
            {"active_clusters", result.active_clusters},
            {"item_weights", to_json(result.item_weights)},
            {"budgets", to_json(result.budgets)},
            {"results", results}};
}

std::string format_ranked_text(const RankedResult& result) {
    std::string out = "query: " + result.query + "\nfiling: " + result.filing_id + "  k=" + std::to_string(result.k) + "\n";
    char buf[256];
    out += "budgets:";
    for (const auto& b : result.budgets.items) {
        std::snprintf(buf, sizeof buf, " Item %s=%d (w=%.3f)", b.item_label.c_str(), b.budget,
                      result.item_weights.weight(b.item_label));
        out += buf;
    }
    out += "\n";
    std::snprintf(buf, sizeof buf, "%-5s %-28s %-6s %9s %9s %9s  %s\n", "rank", "chunk_id", "item", "stage2", "stage1",
                  "travers", "preview");
    out += buf;
    for (std::size_t i = 0; i < result.entries.size(); ++i) {
        const auto& e = result.entries[i];
        std::string preview = truncate_words(normalize_whitespace_lower(e.text), 12);
        std::snprintf(buf, sizeof buf, "%-5zu %-28s %-6s %9.4f %9.4f %9.4f  ", i + 1, e.chunk_id.c_str(),
                      e.item_label.c_str(), e.stage2_score, e.stage1_score, e.traversal_score);
        out += buf;
        out += preview;
        out += "\n";
    }
    return out;
}

} // namespace sectree
