#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sectree/gmm.hpp"
#include "sectree/ingest.hpp"
#include "sectree/providers.hpp"

namespace sectree {

// Item-guided budgeting from a financial lexicon: term matching, term
// clustering, per-Item weights and the integer split of the retrieval budget.

struct LexiconTerm {
    std::string surface;             // lowercase, single-spaced
    std::vector<std::string> tokens; // word-rule tokens of surface
    int cluster_id = -1;             // -1 until clustered
};

struct Lexicon {
    std::vector<LexiconTerm> terms;
    std::vector<EmbeddingVector> centroids; // indexed by cluster_id, lexicon space
    int n_clusters = 0;

    bool clustered() const { return n_clusters > 0; }
};

// Orders Item labels numerically, then by suffix letter: 1 < 1A < 1B < 2 < 10.
bool item_label_less(std::string_view a, std::string_view b);

// One term per line, or CSV with a "term" header column. Terms are
// normalized and deduplicated, keeping first occurrence order.
std::vector<LexiconTerm> parse_lexicon(std::string_view contents, bool csv);
std::vector<LexiconTerm> load_lexicon(const std::filesystem::path& path);

// Greedy left-to-right longest-match over word tokens; matches never overlap.
class PhraseMatcher {
public:
    explicit PhraseMatcher(const std::vector<LexiconTerm>& terms);

    struct Match {
        std::size_t term_index;
        std::size_t token_begin;
        std::size_t token_end;
    };
    std::vector<Match> find(const std::vector<std::string>& tokens) const;

private:
    std::vector<std::vector<std::string>> phrases_;
    std::map<std::string, std::vector<std::size_t>> by_first_token_; // longest phrase first
};

struct TermFrequencyTable {
    std::vector<std::string> item_labels;                       // every Item considered, label order
    std::map<std::string, std::map<int, std::uint64_t>> counts; // item -> cluster -> occurrences

    std::uint64_t count(const std::string& item_label, int cluster_id) const;
    void merge(const TermFrequencyTable& other);
};

TermFrequencyTable match_terms(const Filing& filing, const Lexicon& lexicon);

// Embeds terms in the lexicon space, reduces, fits a mixture and assigns
// each term its argmax component. Cluster ids are renumbered densely in
// order of first appearance; centroids are mean member embeddings.
Lexicon cluster_terms(std::vector<LexiconTerm> terms, const ModelProvider& embedder, int reduced_dim,
                      const GmmOptions& options);

// Clusters of lexicon phrases found in the query; when none match, the
// single cluster whose centroid is nearest (Euclidean) to the query embedding.
std::set<int> expand_query_terms(std::string_view query, const Lexicon& lexicon, const ModelProvider& embedder);

enum class WeightingStrategy { RelativeFrequency, Logarithmic, Softmax };

WeightingStrategy weighting_from_name(std::string_view name);
std::string_view weighting_name(WeightingStrategy strategy);

struct ItemWeight {
    std::string item_label;
    double frequency = 0; // f_i summed over active clusters
    double weight = 0;
};

struct ItemWeights {
    std::vector<ItemWeight> items;
    WeightingStrategy strategy = WeightingStrategy::RelativeFrequency;
    bool uniform_fallback = false;

    double weight(std::string_view item_label) const;
};

// relative_frequency: f_i / sum f;  logarithmic: ln(1 + f_i), normalized;
// softmax: exp(f_i / tau) normalized with tau = max f. All-zero counts give
// uniform weights.
ItemWeights compute_item_weights(const TermFrequencyTable& table, const std::set<int>& active_clusters,
                                 WeightingStrategy strategy);
ItemWeights uniform_weights(const std::vector<std::string>& item_labels);

struct ItemBudget {
    std::string item_label;
    int budget = 0;
};

struct BudgetAllocation {
    std::vector<ItemBudget> items;
    int total = 0;

    int budget(std::string_view item_label) const;
};

// Splits k across Items so the budgets sum to k. Seats are handed out one at
// a time to the Item with the highest w_i / (2 k_i + 1) (ties: larger w_i,
// then label order). The result equals round(k * w_i) whenever those sum to
// k, and each Item's budget never shrinks as k grows.
BudgetAllocation allocate_budget(const ItemWeights& weights, int k);

nlohmann::json to_json(const Lexicon& lexicon);
Lexicon lexicon_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TermFrequencyTable& table);
TermFrequencyTable term_table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ItemWeights& weights);
nlohmann::json to_json(const BudgetAllocation& allocation);

} // namespace sectree
