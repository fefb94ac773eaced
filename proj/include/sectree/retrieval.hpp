#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sectree/bm25.hpp"
#include "sectree/index.hpp"
#include "sectree/lexicon.hpp"
#include "sectree/providers.hpp"
#include "sectree/tree.hpp"

namespace sectree {

enum class QuestionAggregator { Max, Mean };

struct TraversalConfig {
    int child_budget_b = 3;
    QuestionAggregator aggregator = QuestionAggregator::Max;

    void validate() const;
};

enum class CandidateSource { SummaryTree, QuestionTree, Both };
std::string_view source_name(CandidateSource source);

struct Candidate {
    std::string chunk_id;
    std::string item_label;
    CandidateSource source = CandidateSource::SummaryTree;
    double traversal_score = 0;
    std::vector<NodeId> path; // root first, ends at the leaf
    std::string text;
};

// Scores a set of sibling nodes against the query.
class NodeScorer {
public:
    virtual ~NodeScorer() = default;
    virtual std::vector<double> score(const TreeIndex& tree, const std::vector<NodeId>& siblings) const = 0;
};

// BM25 of the query against sibling summaries (leaf text for leaves), with
// statistics taken over the siblings themselves.
class SummaryBm25Scorer final : public NodeScorer {
public:
    SummaryBm25Scorer(std::string_view query, Bm25Params params);
    std::vector<double> score(const TreeIndex& tree, const std::vector<NodeId>& siblings) const override;

private:
    std::vector<std::string> query_terms_; // distinct
    Bm25Params params_;
};

// Cosine between the query embedding and each internal node's sub-question
// embeddings (max or mean); leaves use their chunk embedding.
class QuestionCosineScorer final : public NodeScorer {
public:
    QuestionCosineScorer(EmbeddingVector query, QuestionAggregator aggregator);
    std::vector<double> score(const TreeIndex& tree, const std::vector<NodeId>& siblings) const override;

private:
    EmbeddingVector query_;
    QuestionAggregator aggregator_;
};

struct TraversalTrace {
    // Children kept at each expanded node; the key kVirtualRoot stands for the root set.
    std::map<NodeId, std::size_t> expanded;
    std::size_t nodes_scored = 0;

    static constexpr NodeId kVirtualRoot = 0xFFFFFFFFu;
};

// Beam descent: the roots are scored as siblings of a virtual root, then at
// every kept internal node the children are scored and the best b kept.
// Each internal node is expanded once; a leaf reached along several paths
// keeps its best score.
std::vector<Candidate> traverse_tree(const TreeIndex& tree, const NodeScorer& scorer, const TraversalConfig& cfg,
                                     CandidateSource source, TraversalTrace* trace = nullptr);

// Union by chunk_id after min-max normalizing each list's scores (a list with
// one distinct score maps to 1). Shared chunks become source Both with the
// larger normalized score. Sorted by score, then chunk_id.
std::vector<Candidate> collect_candidates(const std::vector<Candidate>& summary_cands,
                                          const std::vector<Candidate>& question_cands);

struct ScoredCandidate {
    Candidate candidate;
    double stage1_score = 0;
    double stage2_score = 0;
};

// Cross-encoder rescoring of the whole pool, then truncation to `limit`.
std::vector<ScoredCandidate> rerank_stage1(std::string_view query, const std::vector<Candidate>& pool,
                                           const ModelProvider& cross_encoder, std::size_t limit);

struct Ablations {
    bool no_flam = false;
    bool no_summary_tree = false;
    bool no_question_tree = false;
    bool no_reranker = false;

    // "no-flam", "no-summary-tree", "no-question-tree", "no-reranker".
    void enable(std::string_view flag);
    std::vector<std::string> labels() const;
    bool any() const { return no_flam || no_summary_tree || no_question_tree || no_reranker; }
};

struct RetrievalConfig {
    TraversalConfig traversal;
    Bm25Params bm25;
    WeightingStrategy weighting = WeightingStrategy::RelativeFrequency;
    bool corpus_level_flam = false;
    Ablations ablations;

    void validate() const;
};

struct RankedEntry {
    std::string chunk_id;
    std::string item_label;
    double stage2_score = 0;
    double stage1_score = 0;
    double traversal_score = 0;
    CandidateSource source = CandidateSource::SummaryTree;
    std::vector<NodeId> path;
    std::string text;
};

struct RankedResult {
    std::string query;
    std::string filing_id;
    int k = 0;
    std::set<int> active_clusters;
    ItemWeights item_weights;
    BudgetAllocation budgets;
    std::vector<std::string> ablations;
    std::vector<RankedEntry> entries; // stage2_score descending, ties by chunk_id

    std::vector<std::string> texts() const;
};

// Concatenates the Items' stage-1 survivors, rescores them against the query
// and keeps the best k.
std::vector<RankedEntry> rerank_stage2(std::string_view query, const std::vector<std::vector<ScoredCandidate>>& per_item,
                                       const ModelProvider& cross_encoder, std::size_t k);

RankedResult retrieve(std::string_view query, const IndexSet& index, std::string_view filing_id, int k,
                      const RetrievalConfig& cfg, const ProviderSet& providers);

nlohmann::json to_json(const RankedResult& result);
std::string format_ranked_text(const RankedResult& result);

} // namespace sectree
