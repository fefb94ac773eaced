#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sectree/error.hpp"
#include "sectree/eval.hpp"
#include "sectree/index.hpp"
#include "sectree/ingest.hpp"
#include "sectree/providers.hpp"
#include "sectree/retrieval.hpp"
#include "sectree/tree.hpp"

namespace sectree {

// One JSON config file drives every command. Relative paths resolve against
// the config file's directory. Example:
//   {
//     "corpus_dir": "corpus", "index_dir": "index", "lexicon": "lexicon.txt",
//     "run_dir": "run", "gold": "gold.jsonl", "seed": 7,
//     "chunking": {"chunk_tokens": 2000, "overlap_tokens": 100, "tokenizer": "word"},
//     "index": {"reduced_dim": 10, "max_depth": 2, ...},
//     "retrieval": {"child_budget_b": 3, "question_aggregator": "max",
//                   "weighting": "relative_frequency", "flam_scope": "filing",
//                   "bm25": {"k1": 1.5, "b": 0.75, "tokenizer": "stem"}},
//     "depths": [5, 10, 15],
//     "providers": {"default": {"mode": "stub"}, "cross_encoder": {...}}
//   }
struct AppConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path corpus_manifest; // optional
    std::filesystem::path index_dir;
    std::filesystem::path lexicon_path;
    std::filesystem::path run_dir;
    std::filesystem::path gold_path; // optional
    std::filesystem::path prompts_dir; // optional
    std::uint64_t seed = 0;
    ParseOptions parsing;
    ChunkingConfig chunking;
    IndexConfig index;
    RetrievalConfig retrieval;
    std::vector<int> depths{5, 10, 15};
    ProviderConfig default_provider;
    // Keyed by capability: embedder, summarizer, question_generator,
    // cross_encoder, judge, reader.
    std::map<std::string, ProviderConfig> provider_overrides;

    void set_seed(std::uint64_t s);
    void validate() const;
};

AppConfig app_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
AppConfig load_app_config(const std::filesystem::path& path);
nlohmann::json to_json(const AppConfig& cfg);
ProviderConfig provider_config_from_json(const nlohmann::json& j, ProviderConfig base = {});
nlohmann::json to_json(const ProviderConfig& cfg);

// SECTREE_PROVIDER_ENDPOINT and SECTREE_API_KEY override every remote provider.
void apply_env_overrides(AppConfig& cfg);

ProviderSet make_providers(const AppConfig& cfg);

// Each command writes its outputs under run_dir (index_dir for the index)
// plus run_dir/manifests/<command>.json recording the resolved config.
void cmd_ingest(const AppConfig& cfg, std::ostream& log);
void cmd_build_index(const AppConfig& cfg, const ProviderSet& providers, std::ostream& log);

struct QueryOptions {
    std::string filing_id;
    std::string query;
    int k = 5;
    bool text_format = false;
};
void cmd_query(const AppConfig& cfg, const ProviderSet& providers, const QueryOptions& options, std::ostream& out);

struct EvalOptions {
    std::filesystem::path gold_path; // empty: use the config's gold file
    std::vector<int> depths;         // empty: use the config's depths
    bool text_format = false;
};
// Writes run_dir/report[-<ablations>].json and .txt and prints the report.
EvalReport cmd_eval(const AppConfig& cfg, const ProviderSet& providers, const EvalOptions& options, std::ostream& out);

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitProvider = 3;

int exit_code_for(ErrorKind kind);

} // namespace sectree
