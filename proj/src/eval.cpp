#include "sectree/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "sectree/error.hpp"
#include "sectree/text.hpp"

namespace sectree {

using nlohmann::json;

std::string_view qtype_name(QuestionType t) { return t == QuestionType::Numerical ? "numerical" : "categorical"; }
std::string_view hops_name(Hops h) { return h == Hops::Simple ? "simple" : "complex"; }

void GoldRecord::validate() const {
    if (qid.empty()) throw Error(ErrorKind::InvalidInput, "gold record without qid");
    if (gold_text.has_value() == !gold_chunk_ids.empty()) {
        throw Error(ErrorKind::InvalidInput, "gold record " + qid + " needs exactly one of gold_chunk_ids, gold_text");
    }
    if (gold_text && trim(*gold_text).empty()) throw Error(ErrorKind::InvalidInput, "empty gold_text in " + qid);
    if (trim(answer).empty()) throw Error(ErrorKind::InvalidInput, "gold record " + qid + " has an empty answer");
}

GoldRecord gold_from_json(const json& j) {
    GoldRecord g;
    try {
        g.qid = j.at("qid").get<std::string>();
        g.question = j.at("question").get<std::string>();
        g.filing_id = j.at("filing_id").get<std::string>();
        if (j.contains("gold_chunk_ids") && !j["gold_chunk_ids"].is_null()) {
            g.gold_chunk_ids = j["gold_chunk_ids"].get<std::vector<std::string>>();
        }
        if (j.contains("gold_text") && !j["gold_text"].is_null()) g.gold_text = j["gold_text"].get<std::string>();
        g.answer = j.at("answer").get<std::string>();
        const std::string qtype = to_lower(j.value("qtype", "numerical"));
        if (qtype == "numerical") g.qtype = QuestionType::Numerical;
        else if (qtype == "categorical") g.qtype = QuestionType::Categorical;
        else throw Error(ErrorKind::InvalidInput, "unknown qtype '" + qtype + "' in " + g.qid);
        const std::string hops = to_lower(j.value("hops", "simple"));
        if (hops == "simple") g.hops = Hops::Simple;
        else if (hops == "complex") g.hops = Hops::Complex;
        else throw Error(ErrorKind::InvalidInput, "unknown hops '" + hops + "' in " + g.qid);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed gold record: ") + e.what());
    }
    g.validate();
    return g;
}

json to_json(const GoldRecord& g) {
    json j = {{"qid", g.qid}, {"question", g.question}, {"filing_id", g.filing_id}, {"answer", g.answer},
              {"qtype", qtype_name(g.qtype)}, {"hops", hops_name(g.hops)}};
    if (g.gold_text) j["gold_text"] = *g.gold_text;
    else j["gold_chunk_ids"] = g.gold_chunk_ids;
    return j;
}

std::vector<GoldRecord> read_gold_jsonl(std::istream& in) {
    std::vector<GoldRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::InvalidInput, std::string("gold line is not JSON: ") + e.what());
        }
        out.push_back(gold_from_json(j));
    }
    return out;
}

std::vector<GoldRecord> load_gold(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open gold file " + path.string());
    return read_gold_jsonl(in);
}

GoldMatch match_gold(const RankedResult& result, const GoldRecord& gold) {
    if (result.filing_id != gold.filing_id) {
        throw Error(ErrorKind::FilingMismatch,
                    "result for " + result.filing_id + " checked against gold for " + gold.filing_id);
    }
    GoldMatch m;
    m.n_gold = gold.n_gold();
    const std::string needle = gold.gold_text ? normalize_whitespace_lower(*gold.gold_text) : std::string();
    for (const auto& e : result.entries) {
        int hit = -1;
        if (gold.gold_text) {
            if (normalize_whitespace_lower(e.text).find(needle) != std::string::npos) hit = 0;
        } else {
            const auto it = std::find(gold.gold_chunk_ids.begin(), gold.gold_chunk_ids.end(), e.chunk_id);
            if (it != gold.gold_chunk_ids.end()) hit = static_cast<int>(it - gold.gold_chunk_ids.begin());
        }
        m.relevant.push_back(hit >= 0);
        m.gold_index.push_back(hit);
    }
    return m;
}

double f1_score(double precision, double recall) {
    return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

Prf precision_recall_f1(const GoldMatch& match, std::size_t k) {
    Prf out;
    const std::size_t n = std::min(k, match.relevant.size());
    std::size_t relevant = 0;
    std::set<int> hit;
    for (std::size_t i = 0; i < n; ++i) {
        if (!match.relevant[i]) continue;
        ++relevant;
        hit.insert(match.gold_index[i]);
    }
    out.precision = k ? static_cast<double>(relevant) / static_cast<double>(k) : 0.0;
    out.recall = match.n_gold ? static_cast<double>(hit.size()) / static_cast<double>(match.n_gold) : 0.0;
    out.f1 = f1_score(out.precision, out.recall);
    return out;
}

double relevancy(std::string_view query, const std::vector<std::string>& texts, const ModelProvider& judge) {
    if (texts.empty()) return 0.0;
    return std::clamp(judge.judge_relevancy(query, texts), 0.0, 1.0);
}

namespace {

struct ParsedNumber {
    double value = 0;
    bool percent = false;
};

// First standalone number: not glued to letters on either side.
std::optional<ParsedNumber> first_number(std::string_view s) {
    auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
    auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_digit(s[i])) continue;
        if (i > 0 && (is_alpha(s[i - 1]) || is_digit(s[i - 1]) || s[i - 1] == '.' || s[i - 1] == ',')) continue;
        std::string digits;
        std::size_t j = i;
        while (j < s.size()) {
            if (is_digit(s[j])) {
                digits += s[j++];
            } else if (s[j] == ',' && j + 3 < s.size() && is_digit(s[j + 1]) && is_digit(s[j + 2]) &&
                       is_digit(s[j + 3]) && (j + 4 == s.size() || !is_digit(s[j + 4]))) {
                ++j;
            } else {
                break;
            }
        }
        if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
            digits += s[j++];
            while (j < s.size() && is_digit(s[j])) digits += s[j++];
        }
        if (j < s.size() && is_alpha(s[j])) {
            i = j;
            continue;
        }
        ParsedNumber n;
        n.value = std::stod(digits);
        std::size_t back = i;
        while (back > 0 && (s[back - 1] == '$' || s[back - 1] == ' ')) --back;
        if (back > 0 && (s[back - 1] == '-' || s[back - 1] == '(')) n.value = -n.value;
        std::size_t k = j;
        while (k < s.size() && s[k] == ' ') ++k;
        n.percent = k < s.size() && s[k] == '%';
        return n;
    }
    return std::nullopt;
}

bool close(double a, double b) {
    if (a == b) return true;
    return std::fabs(a - b) <= 1e-2 * std::max(std::fabs(a), std::fabs(b));
}

std::string normalized_label(std::string_view s) {
    std::string t = to_lower(trim(s));
    while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.back()))) t.pop_back();
    return trim(t);
}

} // namespace

bool answers_match(std::string_view predicted, std::string_view gold, QuestionType qtype) {
    if (qtype == QuestionType::Numerical) {
        const auto p = first_number(predicted);
        const auto g = first_number(gold);
        if (p && g) {
            std::vector<double> pv{p->value}, gv{g->value};
            if (p->percent) pv.push_back(p->value / 100.0);
            if (g->percent) gv.push_back(g->value / 100.0);
            for (double a : pv) {
                for (double b : gv) {
                    if (close(a, b)) return true;
                }
            }
            return false;
        }
    }
    return !normalized_label(gold).empty() && normalized_label(predicted) == normalized_label(gold);
}

namespace {

struct Accumulator {
    std::size_t n = 0;
    double p = 0, r = 0, f1 = 0, rel = 0, acc = 0;

    void add(const QueryRow& row) {
        ++n;
        p += row.prf.precision;
        r += row.prf.recall;
        f1 += row.prf.f1;
        rel += row.relevancy;
        acc += row.correct ? 1.0 : 0.0;
    }
    MetricSummary summary() const {
        MetricSummary s;
        s.queries = n;
        if (n == 0) return s;
        const double d = static_cast<double>(n);
        s.precision = p / d;
        s.recall = r / d;
        s.f1 = f1 / d;
        s.relevancy = rel / d;
        s.accuracy = acc / d;
        return s;
    }
};

QueryRow evaluate_one(const GoldRecord& g, const IndexSet& index, const RetrievalConfig& cfg,
                      const ProviderSet& providers, int depth) {
    const RankedResult result = retrieve(g.question, index, g.filing_id, depth, cfg, providers);
    QueryRow row;
    row.qid = g.qid;
    row.filing_id = g.filing_id;
    row.qtype = g.qtype;
    row.hops = g.hops;
    row.depth = depth;
    row.prf = precision_recall_f1(match_gold(result, g), static_cast<std::size_t>(depth));
    const auto texts = result.texts();
    row.relevancy = relevancy(g.question, texts, *providers.judge);
    row.predicted = providers.reader->read_answer(g.question, texts);
    row.correct = answers_match(row.predicted, g.answer, g.qtype);
    for (const auto& e : result.entries) row.retrieved.push_back(e.chunk_id);
    return row;
}

} // namespace

const DepthReport* EvalReport::at_depth(int depth) const {
    for (const auto& d : depths) {
        if (d.depth == depth) return &d;
    }
    return nullptr;
}

EvalReport run_eval(const std::vector<GoldRecord>& gold, const IndexSet& index, const EvalConfig& cfg,
                    const ProviderSet& providers) {
    if (cfg.depths.empty()) throw Error(ErrorKind::InvalidConfig, "no evaluation depths");
    for (int d : cfg.depths) {
        if (d < 1) throw Error(ErrorKind::InvalidBudget, "evaluation depth must be at least 1");
    }
    cfg.retrieval.validate();
    EvalReport report;
    report.ablations = cfg.retrieval.ablations.labels();
    report.weighting = std::string(weighting_name(cfg.retrieval.weighting));
    for (int depth : cfg.depths) {
        Accumulator all;
        std::map<std::string, Accumulator> by_qtype, by_hops;
        for (const auto& g : gold) {
            QueryRow row = evaluate_one(g, index, cfg.retrieval, providers, depth);
            all.add(row);
            by_qtype[std::string(qtype_name(row.qtype))].add(row);
            by_hops[std::string(hops_name(row.hops))].add(row);
            report.rows.push_back(std::move(row));
        }
        DepthReport dr;
        dr.depth = depth;
        dr.overall = all.summary();
        for (const auto& [name, a] : by_qtype) dr.by_qtype[name] = a.summary();
        for (const auto& [name, a] : by_hops) dr.by_hops[name] = a.summary();
        report.depths.push_back(std::move(dr));
    }
    return report;
}

EvalReport run_eval(const std::filesystem::path& gold_file, const std::filesystem::path& index_dir,
                    const EvalConfig& cfg, const ProviderSet& providers) {
    const auto gold = load_gold(gold_file);
    const auto index = load_index(index_dir);
    return run_eval(gold, index, cfg, providers);
}

double answer_accuracy(const std::vector<GoldRecord>& gold, const IndexSet& index, const RetrievalConfig& cfg,
                       const ProviderSet& providers, int k) {
    if (gold.empty()) return 0.0;
    double correct = 0;
    for (const auto& g : gold) {
        const RankedResult result = retrieve(g.question, index, g.filing_id, k, cfg, providers);
        if (answers_match(providers.reader->read_answer(g.question, result.texts()), g.answer, g.qtype)) correct += 1;
    }
    return correct / static_cast<double>(gold.size());
}

namespace {

json summary_json(const MetricSummary& s) {
    return {{"queries", s.queries}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
            {"relevancy", s.relevancy}, {"answer_accuracy", s.accuracy}};
}

} // namespace

json to_json(const EvalReport& report) {
    json depths = json::array();
    for (const auto& d : report.depths) {
        json jd = summary_json(d.overall);
        jd["depth"] = d.depth;
        json q = json::object(), h = json::object();
        for (const auto& [name, s] : d.by_qtype) q[name] = summary_json(s);
        for (const auto& [name, s] : d.by_hops) h[name] = summary_json(s);
        jd["by_qtype"] = q;
        jd["by_hops"] = h;
        depths.push_back(std::move(jd));
    }
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"qid", r.qid}, {"filing_id", r.filing_id}, {"depth", r.depth}, {"qtype", qtype_name(r.qtype)},
                        {"hops", hops_name(r.hops)}, {"precision", r.prf.precision}, {"recall", r.prf.recall},
                        {"f1", r.prf.f1}, {"relevancy", r.relevancy}, {"predicted", r.predicted},
                        {"correct", r.correct}, {"retrieved", r.retrieved}});
    }
    return {{"ablations", report.ablations}, {"weighting", report.weighting}, {"depths", depths}, {"queries", rows}};
}

std::string format_report_table(const EvalReport& report) {
    std::string out;
    char buf[200];
    out += "weighting: " + report.weighting;
    out += "  ablations: ";
    if (report.ablations.empty()) out += "none";
    for (std::size_t i = 0; i < report.ablations.size(); ++i) out += (i ? "," : "") + report.ablations[i];
    out += "\n";
    auto line = [&](const std::string& label, const MetricSummary& s) {
        std::snprintf(buf, sizeof buf, "%-22s %7zu %9.4f %9.4f %9.4f %9.4f %9.4f\n", label.c_str(), s.queries,
                      s.precision, s.recall, s.f1, s.relevancy, s.accuracy);
        out += buf;
    };
    std::snprintf(buf, sizeof buf, "%-22s %7s %9s %9s %9s %9s %9s\n", "depth", "queries", "precision", "recall", "f1",
                  "relevancy", "accuracy");
    out += buf;
    for (const auto& d : report.depths) line("top-" + std::to_string(d.depth), d.overall);
    for (const auto& d : report.depths) {
        for (const auto& [name, s] : d.by_qtype) line("top-" + std::to_string(d.depth) + " " + name, s);
        for (const auto& [name, s] : d.by_hops) line("top-" + std::to_string(d.depth) + " " + name, s);
    }
    return out;
}

} // namespace sectree
