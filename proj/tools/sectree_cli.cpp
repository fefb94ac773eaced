// Command-line entry point: ingest, build-index, query, eval.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sectree/app.hpp"
#include "sectree/error.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string weighting;
    std::vector<std::string> ablations;
    std::string format = "json";
};

sectree::AppConfig resolve_config(const GlobalFlags& flags) {
    sectree::AppConfig cfg = sectree::load_app_config(flags.config_path);
    sectree::apply_env_overrides(cfg);
    if (flags.seed) cfg.set_seed(*flags.seed);
    if (!flags.weighting.empty()) cfg.retrieval.weighting = sectree::weighting_from_name(flags.weighting);
    for (const auto& a : flags.ablations) cfg.retrieval.ablations.enable(a);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Section-aware hierarchical retrieval over itemized filings"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("-c,--config", flags.config_path, "JSON config file")->required();
    app.add_option("--seed", flags.seed, "Override the config seed");
    app.add_option("--weighting", flags.weighting, "relative_frequency | logarithmic | softmax")
        ->check(CLI::IsMember({"relative_frequency", "logarithmic", "softmax", "exponential_scaling"}));
    app.add_option("--ablate", flags.ablations, "no-flam | no-summary-tree | no-question-tree | no-reranker")
        ->check(CLI::IsMember({"no-flam", "no-summary-tree", "no-question-tree", "no-reranker"}))
        ->delimiter(',');
    app.add_option("--format", flags.format, "json | text")->check(CLI::IsMember({"json", "text"}));

    auto* ingest = app.add_subcommand("ingest", "Parse and chunk the corpus into run_dir");
    auto* build = app.add_subcommand("build-index", "Build and persist Summary and Question trees");

    sectree::QueryOptions query;
    auto* q = app.add_subcommand("query", "Retrieve evidence for one query against one filing");
    q->add_option("--filing", query.filing_id, "Filing id")->required();
    q->add_option("--query,-q", query.query, "Query text")->required();
    q->add_option("-k", query.k, "Number of results");

    sectree::EvalOptions eval;
    std::string gold;
    auto* e = app.add_subcommand("eval", "Evaluate retrieval and answer accuracy against a gold file");
    e->add_option("--gold", gold, "Gold JSON Lines file (defaults to the config's)");
    e->add_option("--depths", eval.depths, "Comma-separated retrieval depths")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? 0 : sectree::kExitUsage;
    }

    try {
        const sectree::AppConfig cfg = resolve_config(flags);
        const bool text = flags.format == "text";
        if (ingest->parsed()) {
            sectree::cmd_ingest(cfg, std::cerr);
        } else if (build->parsed()) {
            sectree::cmd_build_index(cfg, sectree::make_providers(cfg), std::cerr);
        } else if (q->parsed()) {
            if (query.k < 1) {
                std::cerr << "error: -k must be at least 1\n";
                return sectree::kExitUsage;
            }
            query.text_format = text;
            sectree::cmd_query(cfg, sectree::make_providers(cfg), query, std::cout);
        } else if (e->parsed()) {
            eval.gold_path = gold;
            eval.text_format = text;
            sectree::cmd_eval(cfg, sectree::make_providers(cfg), eval, std::cout);
        }
    } catch (const sectree::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return sectree::exit_code_for(err.kind());
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return sectree::kExitUsage;
    }
    return sectree::kExitOk;
}
