#include "synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sectree/text.hpp"

namespace sectree::testing {

namespace {

struct ItemTopic {
    std::string label;
    std::string title;
    std::string head; // lexicon family head word
    std::vector<std::string> modifiers;
    std::vector<std::string> vocabulary;
};

const std::vector<ItemTopic>& topics() {
    static const std::vector<ItemTopic> t{
        {"1", "Business", "product",
         {"lineup", "roadmap", "catalog", "launch", "adoption", "quality", "design", "sourcing"},
         {"customers", "distribution", "brands", "segments", "competitors", "marketing", "channels", "suppliers",
          "employees", "innovation", "retail", "wholesale", "franchise", "licensing", "patents", "manufacturing",
          "logistics", "partners", "strategy", "portfolio"}},
        {"1A", "Risk Factors", "hazard",
         {"rating", "event", "matrix", "scenario", "trigger", "appetite", "register", "tolerance"},
         {"volatility", "litigation", "regulation", "cybersecurity", "inflation", "disruption", "exposure",
          "uncertainty", "downturn", "pandemic", "sanctions", "default", "counterparty", "impairment", "liquidity",
          "tariffs", "breach", "climate", "dependence", "concentration"}},
        {"2", "Properties", "facility",
         {"footprint", "capacity", "upgrade", "closure", "expansion", "utilization", "rental", "maintenance"},
         {"headquarters", "warehouses", "leases", "campus", "plants", "offices", "acreage", "buildings", "premises",
          "tenancy", "occupancy", "ownership", "sites", "locations", "depots", "terminals", "laboratories", "stores",
          "square", "feet"}},
        {"7", "Management's Discussion and Analysis", "revenue",
         {"mix", "backlog", "run", "yield", "cadence", "retention", "uplift", "churn"},
         {"results", "operations", "margins", "expenses", "growth", "comparison", "drivers", "trends", "outlook",
          "bookings", "pricing", "volume", "demand", "seasonality", "headcount", "spending", "guidance",
          "profitability", "momentum", "performance"}},
        {"8", "Financial Statements and Supplementary Data", "ledger",
         {"entry", "reconciliation", "closing", "adjustment", "posting", "journal", "trial", "reversal"},
         {"statements", "balance", "audit", "accounting", "depreciation", "amortization", "equity", "liabilities",
          "receivables", "inventories", "goodwill", "intangibles", "accruals", "provisions", "footnotes",
          "disclosures", "valuation", "consolidation", "recognition", "measurement"}},
    };
    return t;
}

const std::vector<std::string> kVerbs{"shaped", "affected", "supported", "reflected", "influenced", "guided",
                                      "framed", "informed"};

class NonceSource {
public:
    explicit NonceSource(std::mt19937_64& rng) : rng_(rng) {
        for (const auto& t : topics()) {
            taken_.insert(t.head);
            taken_.insert(t.modifiers.begin(), t.modifiers.end());
            taken_.insert(t.vocabulary.begin(), t.vocabulary.end());
        }
    }

    std::string next() {
        static const std::string consonants = "bdfgklmnprstvz";
        static const std::string vowels = "aeiou";
        for (;;) {
            std::string w;
            for (int s = 0; s < 3; ++s) {
                w += consonants[rng_() % consonants.size()];
                w += vowels[rng_() % vowels.size()];
            }
            w += consonants[rng_() % consonants.size()];
            if (!is_stopword(w) && taken_.insert(w).second) return w;
        }
    }

private:
    std::mt19937_64& rng_;
    std::set<std::string> taken_;
};

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
    return v[rng() % v.size()];
}

// Each Item has two sub-topics, one per half of its vocabulary, so its
// chunks fall into two groups.
std::string filler_sentence(std::mt19937_64& rng, const ItemTopic& t, std::size_t subtopic, bool mention_term) {
    const std::size_t half = t.vocabulary.size() / 2;
    auto word = [&] { return t.vocabulary[subtopic * half + rng() % half]; };
    std::string s = "The " + word() + " and " + word() + " " + pick(rng, kVerbs) + " the " + word();
    if (mention_term) s += " through the " + t.head + " " + pick(rng, t.modifiers);
    s += " across " + word() + ".";
    return s;
}

struct Number {
    std::string written;
    std::string answer;
};

Number make_number(std::mt19937_64& rng, std::size_t serial) {
    char buf[64];
    switch (serial % 3) {
    case 0: {
        const int tenths = 11 + static_cast<int>(rng() % 880);
        std::snprintf(buf, sizeof buf, "%d.%d%%", tenths / 10, tenths % 10);
        std::string written = buf;
        std::snprintf(buf, sizeof buf, "%.4f", tenths / 1000.0);
        return {written, buf};
    }
    case 1: {
        const int v = 1000 + static_cast<int>(rng() % 90000);
        std::snprintf(buf, sizeof buf, "%d,%03d", v / 1000, v % 1000);
        std::string written = buf;
        return {written, std::to_string(v)};
    }
    default: {
        const int tenths = 101 + static_cast<int>(rng() % 9000);
        std::snprintf(buf, sizeof buf, "%d.%d", tenths / 10, tenths % 10);
        return {buf, buf};
    }
    }
}

std::string render_body(const std::vector<std::vector<std::string>>& paragraphs) {
    std::string body;
    for (const auto& p : paragraphs) {
        for (std::size_t i = 0; i < p.size(); ++i) body += (i ? " " : "") + p[i];
        body += "\n\n";
    }
    return body;
}

bool sentence_inside_one_chunk(const std::string& body, const std::string& sentence, const ChunkingConfig& cfg) {
    ItemSection section;
    section.item_label = "X";
    section.body = body;
    for (const auto& c : chunk_item("probe", section, cfg)) {
        if (c.text.find(sentence) != std::string::npos) return true;
    }
    return false;
}

} // namespace

std::vector<GoldRecord> SyntheticCorpus::gold() const {
    std::vector<GoldRecord> out;
    for (const auto& f : facts) out.push_back(f.gold);
    return out;
}

std::vector<ChunkedFiling> SyntheticCorpus::chunked() const {
    std::vector<Filing> parsed;
    for (const auto& [id, text] : filings) parsed.push_back(parse_filing(text, id));
    return chunk_corpus(std::move(parsed), chunking);
}

void SyntheticCorpus::write_to(const std::filesystem::path& dir, std::uint64_t seed) const {
    for (const auto& [id, text] : filings) write_text_file(dir / "corpus" / (id + ".md"), text);
    std::string lex;
    for (const auto& t : lexicon) lex += t + "\n";
    write_text_file(dir / "lexicon.txt", lex);
    std::string gold_lines;
    for (const auto& f : facts) gold_lines += to_json(f.gold).dump() + "\n";
    write_text_file(dir / "gold.jsonl", gold_lines);
    const nlohmann::json cfg = {
        {"corpus_dir", "corpus"},
        {"index_dir", "index"},
        {"lexicon", "lexicon.txt"},
        {"run_dir", "run"},
        {"gold", "gold.jsonl"},
        {"seed", seed},
        {"chunking", {{"chunk_tokens", chunking.chunk_tokens}, {"overlap_tokens", chunking.overlap_tokens}}},
        {"providers", {{"default", {{"mode", "stub"}}}}}};
    write_text_file(dir / "config.json", cfg.dump(2) + "\n");
}

SyntheticCorpus make_planted_corpus(std::size_t n_filings, std::uint64_t seed) {
    SyntheticCorpus corpus;
    corpus.chunking.chunk_tokens = 80;
    corpus.chunking.overlap_tokens = 10;
    for (const auto& t : topics()) {
        for (const auto& m : t.modifiers) corpus.lexicon.push_back(t.head + " " + m);
    }

    std::mt19937_64 rng(seed);
    NonceSource nonces(rng);
    std::size_t serial = 0;
    for (std::size_t f = 0; f < n_filings; ++f) {
        char id[32];
        std::snprintf(id, sizeof id, "f%02zu", f);
        std::string doc = "# Annual Report of Company " + std::string(id) + "\n\n";
        for (const auto& topic : topics()) {
            std::vector<std::vector<std::string>> paragraphs(30);
            for (std::size_t i = 0; i < paragraphs.size(); ++i) {
                const std::size_t n = 2 + rng() % 2;
                const std::size_t subtopic = i < paragraphs.size() / 2 ? 0 : 1;
                for (std::size_t s = 0; s < n; ++s) {
                    paragraphs[i].push_back(filler_sentence(rng, topic, subtopic, rng() % 2 == 0));
                }
            }
            const std::string n1 = nonces.next(), n2 = nonces.next();
            const std::string term = topic.head + " " + pick(rng, topic.modifiers);
            const Number number = make_number(rng, serial);
            const std::string planted = "The " + n1 + " " + n2 + " " + term + " was " + number.written + ".";

            const std::size_t start = rng() % paragraphs.size();
            std::string body;
            for (std::size_t attempt = 0; attempt < paragraphs.size(); ++attempt) {
                auto trial = paragraphs;
                auto& p = trial[(start + attempt) % trial.size()];
                p.insert(p.begin(), planted);
                body = render_body(trial);
                if (sentence_inside_one_chunk(body, planted, corpus.chunking)) break;
            }
            doc += "## Item " + topic.label + ". " + topic.title + "\n\n" + body;

            PlantedFact fact;
            fact.filing_id = id;
            fact.item_label = topic.label;
            fact.sentence = planted;
            char qid[32];
            std::snprintf(qid, sizeof qid, "q%03zu", serial);
            fact.gold.qid = qid;
            fact.gold.question = "What was the " + n1 + " " + n2 + " " + term + "?";
            fact.gold.filing_id = id;
            fact.gold.gold_text = n1 + " " + n2 + " " + term + " was " + number.written;
            fact.gold.answer = number.answer;
            fact.gold.qtype = QuestionType::Numerical;
            fact.gold.hops = serial % 4 == 3 ? Hops::Complex : Hops::Simple;
            corpus.facts.push_back(std::move(fact));
            ++serial;
        }
        corpus.filings.emplace_back(id, doc);
    }
    return corpus;
}

std::vector<std::vector<std::string>> term_families(std::size_t n_families, std::size_t per_family) {
    static const std::vector<std::string> heads{"copper", "garnet", "cobalt", "amber", "indigo", "saffron",
                                                "quartz", "walnut"};
    std::vector<std::vector<std::string>> out;
    for (std::size_t f = 0; f < n_families; ++f) {
        std::vector<std::string> family;
        for (std::size_t i = 0; i < per_family; ++i) {
            std::string mod = "zq";
            std::size_t v = f * per_family + i;
            do {
                mod += static_cast<char>('a' + v % 26);
                v /= 26;
            } while (v);
            family.push_back(heads.at(f % heads.size()) + " " + mod);
        }
        out.push_back(std::move(family));
    }
    return out;
}

} // namespace sectree::testing
