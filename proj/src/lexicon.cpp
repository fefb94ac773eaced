#include "sectree/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "sectree/error.hpp"
#include "sectree/reduce.hpp"
#include "sectree/text.hpp"

namespace sectree {

using nlohmann::json;

namespace {

std::pair<long, std::string_view> split_label(std::string_view label) {
    std::size_t i = 0;
    long number = -1;
    while (i < label.size() && label[i] >= '0' && label[i] <= '9') {
        number = (number < 0 ? 0 : number * 10) + (label[i] - '0');
        ++i;
    }
    return {number, label.substr(i)};
}

std::vector<std::string> split_csv_row(std::string_view row) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
        char c = row[i];
        if (quoted) {
            if (c == '"' && i + 1 < row.size() && row[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

} // namespace

bool item_label_less(std::string_view a, std::string_view b) {
    auto [na, ra] = split_label(a);
    auto [nb, rb] = split_label(b);
    if (na != nb) {
        if (na < 0) return false;
        if (nb < 0) return true;
        return na < nb;
    }
    return ra < rb;
}

std::vector<LexiconTerm> parse_lexicon(std::string_view contents, bool csv) {
    std::vector<std::string> raw;
    std::istringstream in{std::string(contents)};
    std::string line;
    if (csv) {
        std::optional<std::size_t> column;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            auto cells = split_csv_row(line);
            if (!column) {
                for (std::size_t i = 0; i < cells.size(); ++i) {
                    if (to_lower(trim(cells[i])) == "term") column = i;
                }
                if (!column) throw Error(ErrorKind::IoError, "lexicon CSV has no 'term' column");
                continue;
            }
            if (*column < cells.size()) raw.push_back(cells[*column]);
        }
    } else {
        while (std::getline(in, line)) raw.push_back(line);
    }

    std::vector<LexiconTerm> terms;
    std::set<std::string> seen;
    for (const auto& r : raw) {
        LexiconTerm t;
        t.tokens = tokenize(r, TokenizerRule::Word);
        if (t.tokens.empty()) continue;
        t.surface = normalize_whitespace_lower(trim(r));
        if (!seen.insert(join(t.tokens)).second) continue;
        terms.push_back(std::move(t));
    }
    if (terms.empty()) throw Error(ErrorKind::EmptyLexicon, "lexicon contains no terms");
    return terms;
}

std::vector<LexiconTerm> load_lexicon(const std::filesystem::path& path) {
    const std::string contents = read_text_file(path);
    bool csv = to_lower(path.extension().string()) == ".csv";
    return parse_lexicon(contents, csv);
}

PhraseMatcher::PhraseMatcher(const std::vector<LexiconTerm>& terms) {
    phrases_.reserve(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        phrases_.push_back(terms[i].tokens);
        if (!terms[i].tokens.empty()) by_first_token_[terms[i].tokens.front()].push_back(i);
    }
    for (auto& [_, ids] : by_first_token_) {
        std::stable_sort(ids.begin(), ids.end(),
                         [&](std::size_t a, std::size_t b) { return phrases_[a].size() > phrases_[b].size(); });
    }
}

std::vector<PhraseMatcher::Match> PhraseMatcher::find(const std::vector<std::string>& tokens) const {
    std::vector<Match> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        auto it = by_first_token_.find(tokens[i]);
        bool matched = false;
        if (it != by_first_token_.end()) {
            for (std::size_t id : it->second) {
                const auto& phrase = phrases_[id];
                if (i + phrase.size() > tokens.size()) continue;
                if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
                    out.push_back({id, i, i + phrase.size()});
                    i += phrase.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) ++i;
    }
    return out;
}

std::uint64_t TermFrequencyTable::count(const std::string& item_label, int cluster_id) const {
    auto it = counts.find(item_label);
    if (it == counts.end()) return 0;
    auto jt = it->second.find(cluster_id);
    return jt == it->second.end() ? 0 : jt->second;
}

void TermFrequencyTable::merge(const TermFrequencyTable& other) {
    for (const auto& label : other.item_labels) {
        if (std::find(item_labels.begin(), item_labels.end(), label) == item_labels.end()) item_labels.push_back(label);
    }
    std::sort(item_labels.begin(), item_labels.end(),
              [](const std::string& a, const std::string& b) { return item_label_less(a, b); });
    for (const auto& [label, per_cluster] : other.counts) {
        for (const auto& [cluster, n] : per_cluster) counts[label][cluster] += n;
    }
}

TermFrequencyTable match_terms(const Filing& filing, const Lexicon& lexicon) {
    PhraseMatcher matcher(lexicon.terms);
    TermFrequencyTable table;
    for (const auto& item : filing.items) {
        table.item_labels.push_back(item.item_label);
        auto& per_cluster = table.counts[item.item_label];
        for (const auto& m : matcher.find(tokenize(item.body, TokenizerRule::Word))) {
            ++per_cluster[lexicon.terms[m.term_index].cluster_id];
        }
    }
    return table;
}

Lexicon cluster_terms(std::vector<LexiconTerm> terms, const ModelProvider& embedder, int reduced_dim,
                      const GmmOptions& options) {
    if (terms.empty()) throw Error(ErrorKind::EmptyLexicon, "nothing to cluster");
    std::vector<std::string> surfaces;
    surfaces.reserve(terms.size());
    for (const auto& t : terms) surfaces.push_back(t.surface);
    const auto embeddings = embedder.embed_texts(surfaces, kLexiconSpace);

    std::vector<int> raw_assignment(terms.size(), 0);
    if (terms.size() > 1) {
        const Eigen::MatrixXd reduced = reduce_dims(to_matrix(embeddings), reduced_dim);
        const GmmModel model = fit_gmm(reduced, options);
        const Eigen::MatrixXd resp = model.responsibilities(reduced);
        for (Eigen::Index i = 0; i < resp.rows(); ++i) {
            Eigen::Index arg = 0;
            resp.row(i).maxCoeff(&arg);
            raw_assignment[static_cast<std::size_t>(i)] = static_cast<int>(arg);
        }
    }

    Lexicon lex;
    std::map<int, int> dense;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        auto [it, inserted] = dense.try_emplace(raw_assignment[i], static_cast<int>(dense.size()));
        terms[i].cluster_id = it->second;
    }
    lex.n_clusters = static_cast<int>(dense.size());
    const std::size_t d = embeddings.front().values.size();
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(lex.n_clusters), std::vector<double>(d, 0.0));
    std::vector<std::size_t> sizes(static_cast<std::size_t>(lex.n_clusters), 0);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        auto c = static_cast<std::size_t>(terms[i].cluster_id);
        for (std::size_t j = 0; j < d; ++j) sums[c][j] += embeddings[i].values[j];
        ++sizes[c];
    }
    for (std::size_t c = 0; c < sums.size(); ++c) {
        EmbeddingVector centroid;
        centroid.space_tag = std::string(kLexiconSpace);
        centroid.values.resize(d);
        for (std::size_t j = 0; j < d; ++j) centroid.values[j] = static_cast<float>(sums[c][j] / static_cast<double>(sizes[c]));
        lex.centroids.push_back(std::move(centroid));
    }
    lex.terms = std::move(terms);
    return lex;
}

std::set<int> expand_query_terms(std::string_view query, const Lexicon& lexicon, const ModelProvider& embedder) {
    std::set<int> clusters;
    if (!lexicon.clustered()) return clusters;
    PhraseMatcher matcher(lexicon.terms);
    for (const auto& m : matcher.find(tokenize(query, TokenizerRule::Word))) {
        const int c = lexicon.terms[m.term_index].cluster_id;
        if (c >= 0) clusters.insert(c);
    }
    if (!clusters.empty() || trim(query).empty()) return clusters;

    const EmbeddingVector q = embedder.embed_text(std::string(query), kLexiconSpace);
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < lexicon.centroids.size(); ++c) {
        const auto& centroid = lexicon.centroids[c];
        if (centroid.values.size() != q.values.size()) {
            throw Error(ErrorKind::DimensionMismatch, "query embedding and lexicon centroids differ in dimension");
        }
        double dist = 0;
        for (std::size_t j = 0; j < q.values.size(); ++j) {
            const double diff = static_cast<double>(q.values[j]) - centroid.values[j];
            dist += diff * diff;
        }
        if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<int>(c);
        }
    }
    if (best >= 0) clusters.insert(best);
    return clusters;
}

WeightingStrategy weighting_from_name(std::string_view name) {
    if (name == "relative_frequency") return WeightingStrategy::RelativeFrequency;
    if (name == "logarithmic") return WeightingStrategy::Logarithmic;
    if (name == "softmax" || name == "exponential_scaling") return WeightingStrategy::Softmax;
    throw Error(ErrorKind::InvalidConfig, "unknown weighting strategy '" + std::string(name) + "'");
}

std::string_view weighting_name(WeightingStrategy strategy) {
    switch (strategy) {
    case WeightingStrategy::RelativeFrequency: return "relative_frequency";
    case WeightingStrategy::Logarithmic: return "logarithmic";
    case WeightingStrategy::Softmax: return "softmax";
    }
    return "relative_frequency";
}

double ItemWeights::weight(std::string_view item_label) const {
    for (const auto& w : items) {
        if (w.item_label == item_label) return w.weight;
    }
    return 0.0;
}

ItemWeights uniform_weights(const std::vector<std::string>& item_labels) {
    if (item_labels.empty()) throw Error(ErrorKind::InvalidInput, "no Items to weight");
    ItemWeights out;
    out.uniform_fallback = true;
    for (const auto& label : item_labels) {
        out.items.push_back({label, 0.0, 1.0 / static_cast<double>(item_labels.size())});
    }
    return out;
}

ItemWeights compute_item_weights(const TermFrequencyTable& table, const std::set<int>& active_clusters,
                                 WeightingStrategy strategy) {
    if (table.item_labels.empty()) throw Error(ErrorKind::InvalidInput, "term table has no Items");
    std::vector<double> f;
    f.reserve(table.item_labels.size());
    for (const auto& label : table.item_labels) {
        double sum = 0;
        for (int c : active_clusters) sum += static_cast<double>(table.count(label, c));
        f.push_back(sum);
    }
    const double max_f = *std::max_element(f.begin(), f.end());
    if (max_f <= 0) {
        ItemWeights u = uniform_weights(table.item_labels);
        u.strategy = strategy;
        return u;
    }

    std::vector<double> raw(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        switch (strategy) {
        case WeightingStrategy::RelativeFrequency: raw[i] = f[i]; break;
        case WeightingStrategy::Logarithmic: raw[i] = std::log1p(f[i]); break;
        case WeightingStrategy::Softmax: raw[i] = std::exp(f[i] / max_f); break;
        }
    }
    double total = 0;
    for (double r : raw) total += r;

    ItemWeights out;
    out.strategy = strategy;
    for (std::size_t i = 0; i < f.size(); ++i) out.items.push_back({table.item_labels[i], f[i], raw[i] / total});
    return out;
}

int BudgetAllocation::budget(std::string_view item_label) const {
    for (const auto& b : items) {
        if (b.item_label == item_label) return b.budget;
    }
    return 0;
}

BudgetAllocation allocate_budget(const ItemWeights& weights, int k) {
    if (k < 1) throw Error(ErrorKind::InvalidBudget, "retrieval budget k must be >= 1, got " + std::to_string(k));
    if (weights.items.empty()) throw Error(ErrorKind::InvalidInput, "no Items to allocate budget to");

    BudgetAllocation out;
    out.total = k;
    for (const auto& w : weights.items) out.items.push_back({w.item_label, 0});

    const auto& items = weights.items;
    for (int seat = 0; seat < k; ++seat) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < items.size(); ++i) {
            // priority_i = w_i / (2 r_i + 1), compared without division.
            const double lhs = items[i].weight * (2.0 * out.items[best].budget + 1.0);
            const double rhs = items[best].weight * (2.0 * out.items[i].budget + 1.0);
            if (lhs > rhs) {
                best = i;
            } else if (lhs == rhs) {
                if (items[i].weight > items[best].weight ||
                    (items[i].weight == items[best].weight && item_label_less(items[i].item_label, items[best].item_label))) {
                    best = i;
                }
            }
        }
        ++out.items[best].budget;
    }
    return out;
}

json to_json(const Lexicon& lexicon) {
    json terms = json::array();
    for (const auto& t : lexicon.terms) terms.push_back({{"surface", t.surface}, {"cluster_id", t.cluster_id}});
    json centroids = json::array();
    for (const auto& c : lexicon.centroids) centroids.push_back(c.values);
    return {{"n_clusters", lexicon.n_clusters}, {"space_tag", kLexiconSpace}, {"terms", terms}, {"centroids", centroids}};
}

Lexicon lexicon_from_json(const json& j) {
    Lexicon lex;
    lex.n_clusters = j.at("n_clusters").get<int>();
    const std::string space = j.value("space_tag", std::string(kLexiconSpace));
    for (const auto& t : j.at("terms")) {
        LexiconTerm term;
        term.surface = t.at("surface").get<std::string>();
        term.tokens = tokenize(term.surface, TokenizerRule::Word);
        term.cluster_id = t.at("cluster_id").get<int>();
        lex.terms.push_back(std::move(term));
    }
    for (const auto& c : j.at("centroids")) lex.centroids.push_back({c.get<std::vector<float>>(), space});
    return lex;
}

json to_json(const TermFrequencyTable& table) {
    json counts = json::object();
    for (const auto& [label, per_cluster] : table.counts) {
        json row = json::object();
        for (const auto& [cluster, n] : per_cluster) row[std::to_string(cluster)] = n;
        counts[label] = row;
    }
    return {{"item_labels", table.item_labels}, {"counts", counts}};
}

TermFrequencyTable term_table_from_json(const json& j) {
    TermFrequencyTable table;
    table.item_labels = j.at("item_labels").get<std::vector<std::string>>();
    for (const auto& [label, row] : j.at("counts").items()) {
        auto& per_cluster = table.counts[label];
        for (const auto& [cluster, n] : row.items()) per_cluster[std::stoi(cluster)] = n.get<std::uint64_t>();
    }
    return table;
}

json to_json(const ItemWeights& weights) {
    json items = json::array();
    for (const auto& w : weights.items) {
        items.push_back({{"item_label", w.item_label}, {"frequency", w.frequency}, {"weight", w.weight}});
    }
    return {{"strategy", weighting_name(weights.strategy)}, {"uniform_fallback", weights.uniform_fallback},
            {"items", items}};
}

json to_json(const BudgetAllocation& allocation) {
    json items = json::array();
    for (const auto& b : allocation.items) items.push_back({{"item_label", b.item_label}, {"budget", b.budget}});
    return {{"total", allocation.total}, {"items", items}};
}

} // namespace sectree
