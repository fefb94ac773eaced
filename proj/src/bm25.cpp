#include "sectree/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sectree/error.hpp"

namespace sectree {

void Bm25Params::validate() const {
    if (!(k1 > 0)) throw Error(ErrorKind::InvalidConfig, "bm25 k1 must be positive");
    if (!(b >= 0 && b <= 1)) throw Error(ErrorKind::InvalidConfig, "bm25 b must lie in [0, 1]");
}

Bm25CorpusStats Bm25CorpusStats::from_documents(const std::vector<std::vector<std::string>>& docs) {
    Bm25CorpusStats stats;
    stats.n_docs = docs.size();
    std::size_t total = 0;
    for (const auto& doc : docs) {
        total += doc.size();
        std::set<std::string> seen(doc.begin(), doc.end());
        for (const auto& t : seen) ++stats.doc_freq[t];
    }
    stats.avg_doc_len = docs.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs.size());
    return stats;
}

double bm25_idf(const Bm25CorpusStats& stats, const std::string& term) {
    const auto it = stats.doc_freq.find(term);
    const double df = it == stats.doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    const double n = static_cast<double>(stats.n_docs);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_score(const std::vector<std::string>& query_tokens, const std::vector<std::string>& doc_tokens,
                  const Bm25CorpusStats& stats, const Bm25Params& params) {
    if (doc_tokens.empty()) return 0.0;
    std::map<std::string, std::size_t> tf;
    for (const auto& t : doc_tokens) ++tf[t];
    const double dl = static_cast<double>(doc_tokens.size());
    const double avgdl = stats.avg_doc_len > 0 ? stats.avg_doc_len : dl;
    const double norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl);
    double score = 0.0;
    for (const auto& q : query_tokens) {
        const auto it = tf.find(q);
        if (it == tf.end()) continue;
        const double f = static_cast<double>(it->second);
        score += bm25_idf(stats, q) * f * (params.k1 + 1.0) / (f + norm);
    }
    return score;
}

std::vector<double> bm25_rank(const std::string& query, const std::vector<std::string>& documents,
                              const Bm25Params& params) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(documents.size());
    for (const auto& d : documents) docs.push_back(tokenize(d, params.tokenizer));
    const auto stats = Bm25CorpusStats::from_documents(docs);
    auto q = tokenize(query, params.tokenizer);
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());
    std::vector<double> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(bm25_score(q, d, stats, params));
    return out;
}

} // namespace sectree
