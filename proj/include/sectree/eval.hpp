#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sectree/index.hpp"
#include "sectree/retrieval.hpp"

namespace sectree {

enum class QuestionType { Numerical, Categorical };
enum class Hops { Simple, Complex };

std::string_view qtype_name(QuestionType t);
std::string_view hops_name(Hops h);

struct GoldRecord {
    std::string qid;
    std::string question;
    std::string filing_id;
    std::vector<std::string> gold_chunk_ids; // either these...
    std::optional<std::string> gold_text;    // ...or a text span
    std::string answer;
    QuestionType qtype = QuestionType::Numerical;
    Hops hops = Hops::Simple;

    std::size_t n_gold() const { return gold_text ? 1 : gold_chunk_ids.size(); }
    void validate() const;
};

GoldRecord gold_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GoldRecord& g);
std::vector<GoldRecord> read_gold_jsonl(std::istream& in);
std::vector<GoldRecord> load_gold(const std::filesystem::path& path);

// Per retrieved position: whether it is relevant, and which gold unit it hits.
struct GoldMatch {
    std::vector<bool> relevant;
    std::vector<int> gold_index; // -1 when not relevant
    std::size_t n_gold = 0;
};

GoldMatch match_gold(const RankedResult& result, const GoldRecord& gold);

struct Prf {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

double f1_score(double precision, double recall);
// Over the first k positions: precision = relevant / k (a short list counts
// its missing positions as misses), recall = distinct gold units hit / n_gold.
Prf precision_recall_f1(const GoldMatch& match, std::size_t k);

double relevancy(std::string_view query, const std::vector<std::string>& texts, const ModelProvider& judge);

// Numbers are compared with relative tolerance 1e-2; a percent sign on
// either side also allows the value divided by 100. Otherwise
// case-insensitive equality after trimming.
bool answers_match(std::string_view predicted, std::string_view gold, QuestionType qtype);

struct EvalConfig {
    std::vector<int> depths{5, 10, 15};
    RetrievalConfig retrieval;
};

struct QueryRow {
    std::string qid;
    std::string filing_id;
    QuestionType qtype = QuestionType::Numerical;
    Hops hops = Hops::Simple;
    int depth = 0;
    Prf prf;
    double relevancy = 0;
    std::string predicted;
    bool correct = false;
    std::vector<std::string> retrieved;
};

struct MetricSummary {
    std::size_t queries = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double relevancy = 0;
    double accuracy = 0;
};

struct DepthReport {
    int depth = 0;
    MetricSummary overall;
    std::map<std::string, MetricSummary> by_qtype;
    std::map<std::string, MetricSummary> by_hops;
};

struct EvalReport {
    std::vector<std::string> ablations;
    std::string weighting;
    std::vector<DepthReport> depths;
    std::vector<QueryRow> rows;

    const DepthReport* at_depth(int depth) const;
};

// Retrieves every gold query at each depth and macro-averages the per-query metrics.
EvalReport run_eval(const std::vector<GoldRecord>& gold, const IndexSet& index, const EvalConfig& cfg,
                    const ProviderSet& providers);
EvalReport run_eval(const std::filesystem::path& gold_file, const std::filesystem::path& index_dir,
                    const EvalConfig& cfg, const ProviderSet& providers);

double answer_accuracy(const std::vector<GoldRecord>& gold, const IndexSet& index, const RetrievalConfig& cfg,
                       const ProviderSet& providers, int k);

nlohmann::json to_json(const EvalReport& report);
std::string format_report_table(const EvalReport& report);

} // namespace sectree
