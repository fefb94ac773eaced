#include "sectree/app.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "sectree/error.hpp"
#include "sectree/stats.hpp"

namespace sectree {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kCapabilities[] = {"embedder", "summarizer", "question_generator", "cross_encoder", "judge", "reader"};

fs::path resolve(const fs::path& base, const json& j, const char* key, const fs::path& fallback = {}) {
    if (!j.contains(key) || j[key].is_null()) return fallback.empty() ? fallback : base / fallback;
    const fs::path p = j[key].get<std::string>();
    return p.is_absolute() ? p : base / p;
}

std::string aggregator_name(QuestionAggregator a) { return a == QuestionAggregator::Max ? "max" : "mean"; }

} // namespace

void AppConfig::set_seed(std::uint64_t s) {
    seed = s;
    index.seed = s;
}

void AppConfig::validate() const {
    if (corpus_dir.empty()) throw Error(ErrorKind::InvalidConfig, "corpus_dir is required");
    if (index_dir.empty()) throw Error(ErrorKind::InvalidConfig, "index_dir is required");
    if (run_dir.empty()) throw Error(ErrorKind::InvalidConfig, "run_dir is required");
    chunking.validate();
    index.validate();
    retrieval.validate();
    default_provider.validate();
    for (const auto& [name, p] : provider_overrides) p.validate();
    for (int d : depths) {
        if (d < 1) throw Error(ErrorKind::InvalidConfig, "depths must be positive");
    }
}

ProviderConfig provider_config_from_json(const json& j, ProviderConfig base) {
    const std::string mode = j.value("mode", base.mode == ProviderConfig::Mode::Stub ? "stub" : "remote");
    if (mode == "stub") base.mode = ProviderConfig::Mode::Stub;
    else if (mode == "remote") base.mode = ProviderConfig::Mode::Remote;
    else throw Error(ErrorKind::InvalidConfig, "unknown provider mode '" + mode + "'");
    base.endpoint = j.value("endpoint", base.endpoint);
    base.model_name = j.value("model_name", base.model_name);
    base.api_key = j.value("api_key", base.api_key);
    base.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(base.timeout.count())));
    base.max_concurrency = j.value("max_concurrency", base.max_concurrency);
    base.retries = j.value("retries", base.retries);
    base.dimension = j.value("dimension", base.dimension);
    base.summary_words = j.value("summary_words", base.summary_words);
    return base;
}

json to_json(const ProviderConfig& cfg) {
    // The API key is a secret and never written back out.
    return {{"mode", cfg.mode == ProviderConfig::Mode::Stub ? "stub" : "remote"},
            {"endpoint", cfg.endpoint},
            {"model_name", cfg.model_name},
            {"timeout_ms", cfg.timeout.count()},
            {"max_concurrency", cfg.max_concurrency},
            {"retries", cfg.retries},
            {"dimension", cfg.dimension},
            {"summary_words", cfg.summary_words}};
}

AppConfig app_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "config must be a JSON object");
    AppConfig cfg;
    try {
        cfg.corpus_dir = resolve(base_dir, j, "corpus_dir");
        cfg.corpus_manifest = resolve(base_dir, j, "corpus_manifest");
        cfg.index_dir = resolve(base_dir, j, "index_dir", "index");
        cfg.lexicon_path = resolve(base_dir, j, "lexicon");
        cfg.run_dir = resolve(base_dir, j, "run_dir", "run");
        cfg.gold_path = resolve(base_dir, j, "gold");
        cfg.prompts_dir = resolve(base_dir, j, "prompts_dir");

        if (j.contains("parsing")) {
            const auto& p = j["parsing"];
            cfg.parsing.strict = p.value("strict", cfg.parsing.strict);
            cfg.parsing.heading_pattern = p.value("heading_pattern", cfg.parsing.heading_pattern);
        }
        if (j.contains("chunking")) {
            const auto& c = j["chunking"];
            cfg.chunking.chunk_tokens = c.value("chunk_tokens", cfg.chunking.chunk_tokens);
            cfg.chunking.overlap_tokens = c.value("overlap_tokens", cfg.chunking.overlap_tokens);
            if (c.contains("tokenizer")) cfg.chunking.tokenizer = tokenizer_from_name(c["tokenizer"].get<std::string>());
        }
        if (j.contains("index")) cfg.index = index_config_from_json(j["index"]);
        if (j.contains("retrieval")) {
            const auto& r = j["retrieval"];
            cfg.retrieval.traversal.child_budget_b = r.value("child_budget_b", cfg.retrieval.traversal.child_budget_b);
            const std::string agg = r.value("question_aggregator", "max");
            if (agg == "max") cfg.retrieval.traversal.aggregator = QuestionAggregator::Max;
            else if (agg == "mean") cfg.retrieval.traversal.aggregator = QuestionAggregator::Mean;
            else throw Error(ErrorKind::InvalidConfig, "unknown question_aggregator '" + agg + "'");
            if (r.contains("weighting")) cfg.retrieval.weighting = weighting_from_name(r["weighting"].get<std::string>());
            const std::string scope = r.value("flam_scope", "filing");
            if (scope != "filing" && scope != "corpus") throw Error(ErrorKind::InvalidConfig, "flam_scope must be filing or corpus");
            cfg.retrieval.corpus_level_flam = scope == "corpus";
            if (r.contains("bm25")) {
                const auto& b = r["bm25"];
                cfg.retrieval.bm25.k1 = b.value("k1", cfg.retrieval.bm25.k1);
                cfg.retrieval.bm25.b = b.value("b", cfg.retrieval.bm25.b);
                if (b.contains("tokenizer")) cfg.retrieval.bm25.tokenizer = tokenizer_from_name(b["tokenizer"].get<std::string>());
            }
            if (r.contains("ablations")) {
                for (const auto& a : r["ablations"]) cfg.retrieval.ablations.enable(a.get<std::string>());
            }
        }
        if (j.contains("depths")) cfg.depths = j["depths"].get<std::vector<int>>();
        if (j.contains("providers")) {
            const auto& p = j["providers"];
            if (p.contains("default")) cfg.default_provider = provider_config_from_json(p["default"]);
            for (const char* cap : kCapabilities) {
                if (p.contains(cap)) cfg.provider_overrides[cap] = provider_config_from_json(p[cap], cfg.default_provider);
            }
            for (const auto& [key, _] : p.items()) {
                if (key == "default") continue;
                bool known = false;
                for (const char* cap : kCapabilities) known = known || key == cap;
                if (!known) throw Error(ErrorKind::InvalidConfig, "unknown provider capability '" + key + "'");
            }
        }
        cfg.set_seed(j.value("seed", cfg.index.seed));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("bad config value: ") + e.what());
    }
    return cfg;
}

AppConfig load_app_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::IoError, "config file not found: " + path.string());
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, "config " + path.string() + " is not valid JSON: " + e.what());
    }
    return app_config_from_json(j, fs::absolute(path).parent_path());
}

json to_json(const AppConfig& cfg) {
    json providers = {{"default", to_json(cfg.default_provider)}};
    for (const auto& [cap, p] : cfg.provider_overrides) providers[cap] = to_json(p);
    return {{"corpus_dir", cfg.corpus_dir.string()},
            {"corpus_manifest", cfg.corpus_manifest.string()},
            {"index_dir", cfg.index_dir.string()},
            {"lexicon", cfg.lexicon_path.string()},
            {"run_dir", cfg.run_dir.string()},
            {"gold", cfg.gold_path.string()},
            {"prompts_dir", cfg.prompts_dir.string()},
            {"seed", cfg.seed},
            {"parsing", {{"strict", cfg.parsing.strict}, {"heading_pattern", cfg.parsing.heading_pattern}}},
            {"chunking",
             {{"chunk_tokens", cfg.chunking.chunk_tokens},
              {"overlap_tokens", cfg.chunking.overlap_tokens},
              {"tokenizer", tokenizer_name(cfg.chunking.tokenizer)}}},
            {"index", to_json(cfg.index)},
            {"retrieval",
             {{"child_budget_b", cfg.retrieval.traversal.child_budget_b},
              {"question_aggregator", aggregator_name(cfg.retrieval.traversal.aggregator)},
              {"weighting", weighting_name(cfg.retrieval.weighting)},
              {"flam_scope", cfg.retrieval.corpus_level_flam ? "corpus" : "filing"},
              {"ablations", cfg.retrieval.ablations.labels()},
              {"bm25",
               {{"k1", cfg.retrieval.bm25.k1},
                {"b", cfg.retrieval.bm25.b},
                {"tokenizer", tokenizer_name(cfg.retrieval.bm25.tokenizer)}}}}},
            {"depths", cfg.depths},
            {"providers", providers}};
}

void apply_env_overrides(AppConfig& cfg) {
    const char* endpoint = std::getenv("SECTREE_PROVIDER_ENDPOINT");
    const char* key = std::getenv("SECTREE_API_KEY");
    auto apply = [&](ProviderConfig& p) {
        if (p.mode != ProviderConfig::Mode::Remote) return;
        if (endpoint && *endpoint) p.endpoint = endpoint;
        if (key && *key) p.api_key = key;
    };
    apply(cfg.default_provider);
    for (auto& [_, p] : cfg.provider_overrides) apply(p);
}

ProviderSet make_providers(const AppConfig& cfg) {
    const PromptTemplates templates =
        cfg.prompts_dir.empty() ? PromptTemplates::defaults() : PromptTemplates::load(cfg.prompts_dir);
    auto fallback = make_provider(cfg.default_provider, templates);
    ProviderSet set = ProviderSet::all(fallback);
    std::map<std::string, std::shared_ptr<ModelProvider>*> slots = {
        {"embedder", &set.embedder},           {"summarizer", &set.summarizer}, {"question_generator", &set.question_generator},
        {"cross_encoder", &set.cross_encoder}, {"judge", &set.judge},           {"reader", &set.reader}};
    for (const auto& [cap, p] : cfg.provider_overrides) *slots.at(cap) = make_provider(p, templates);
    return set;
}

namespace {

void write_run_manifest(const AppConfig& cfg, const std::string& command, const json& extra) {
    json m = {{"command", command}, {"seed", cfg.seed}, {"config", to_json(cfg)}};
    if (!extra.is_null()) m["arguments"] = extra;
    write_text_file(cfg.run_dir / "manifests" / (command + ".json"), m.dump(2) + "\n");
}

std::vector<ChunkedFiling> ingest_corpus(const AppConfig& cfg, std::ostream& log) {
    if (!fs::is_directory(cfg.corpus_dir)) {
        throw Error(ErrorKind::IoError, "corpus directory not found: " + cfg.corpus_dir.string());
    }
    auto filings = load_corpus(cfg.corpus_dir, cfg.corpus_manifest, cfg.parsing);
    for (const auto& f : filings) {
        for (const auto& w : f.warnings) log << "warning: " << f.filing_id << ": " << w << "\n";
    }
    return chunk_corpus(std::move(filings), cfg.chunking);
}

std::string report_stem(const Ablations& ablations) {
    std::string stem = "report";
    for (const auto& a : ablations.labels()) stem += "-" + a;
    return stem;
}

} // namespace

void cmd_ingest(const AppConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto corpus = ingest_corpus(cfg, log);
    std::ostringstream chunks;
    write_chunks_jsonl(chunks, corpus);
    write_text_file(cfg.run_dir / "chunks.jsonl", chunks.str());
    write_text_file(cfg.run_dir / "stats.json", to_json(corpus_stats(corpus, nullptr, {}, cfg.chunking.tokenizer)).dump(2) + "\n");
    write_run_manifest(cfg, "ingest", nullptr);
    std::size_t n_chunks = 0;
    for (const auto& cf : corpus) n_chunks += cf.chunks.size();
    log << "ingested " << corpus.size() << " filings into " << n_chunks << " chunks\n";
}

void cmd_build_index(const AppConfig& cfg, const ProviderSet& providers, std::ostream& log) {
    cfg.validate();
    const auto corpus = ingest_corpus(cfg, log);
    std::vector<LexiconTerm> terms;
    if (!cfg.lexicon_path.empty()) terms = load_lexicon(cfg.lexicon_path);
    const IndexSet index = build_index(corpus, std::move(terms), cfg.index, providers);
    save_index(index, cfg.index_dir);
    write_text_file(cfg.run_dir / "index_stats.json",
                    to_json(corpus_stats(corpus, &index, {}, cfg.chunking.tokenizer)).dump(2) + "\n");
    write_run_manifest(cfg, "build-index", nullptr);
    std::size_t items = 0;
    for (const auto& f : index.filings) items += f.items.size();
    log << "indexed " << index.filings.size() << " filings, " << items << " Items, " << index.lexicon.n_clusters
        << " lexicon clusters into " << cfg.index_dir.string() << "\n";
}

void cmd_query(const AppConfig& cfg, const ProviderSet& providers, const QueryOptions& options, std::ostream& out) {
    cfg.validate();
    if (options.k < 1) throw Error(ErrorKind::InvalidBudget, "k must be at least 1");
    const IndexSet index = load_index(cfg.index_dir);
    const RankedResult result = retrieve(options.query, index, options.filing_id, options.k, cfg.retrieval, providers);
    write_run_manifest(cfg, "query", {{"filing_id", options.filing_id}, {"query", options.query}, {"k", options.k}});
    if (options.text_format) out << format_ranked_text(result);
    else out << to_json(result).dump(2) << "\n";
}

EvalReport cmd_eval(const AppConfig& cfg, const ProviderSet& providers, const EvalOptions& options, std::ostream& out) {
    cfg.validate();
    const fs::path gold = options.gold_path.empty() ? cfg.gold_path : options.gold_path;
    if (gold.empty()) throw Error(ErrorKind::InvalidConfig, "no gold file given");
    EvalConfig ecfg;
    ecfg.depths = options.depths.empty() ? cfg.depths : options.depths;
    ecfg.retrieval = cfg.retrieval;
    EvalReport report = run_eval(gold, cfg.index_dir, ecfg, providers);
    const std::string stem = report_stem(cfg.retrieval.ablations);
    const std::string table = format_report_table(report);
    write_text_file(cfg.run_dir / (stem + ".json"), to_json(report).dump(2) + "\n");
    write_text_file(cfg.run_dir / (stem + ".txt"), table);
    write_run_manifest(cfg, "eval", {{"gold", gold.string()}, {"depths", ecfg.depths}});
    if (options.text_format) {
        out << table;
    } else {
        json summary = to_json(report);
        summary.erase("queries");
        out << summary.dump(2) << "\n";
    }
    return report;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ProviderUnavailable:
    case ErrorKind::DimensionMismatch: return kExitProvider;
    default: return kExitUsage;
    }
}

} // namespace sectree
