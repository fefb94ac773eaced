#pragma once

#include <map>
#include <string>
#include <vector>

#include "sectree/text.hpp"

namespace sectree {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
    TokenizerRule tokenizer = TokenizerRule::Stem;

    void validate() const;
};

// N, document frequencies and mean length over the documents being compared.
struct Bm25CorpusStats {
    std::size_t n_docs = 0;
    double avg_doc_len = 0;
    std::map<std::string, std::size_t> doc_freq;

    static Bm25CorpusStats from_documents(const std::vector<std::vector<std::string>>& docs);
};

double bm25_idf(const Bm25CorpusStats& stats, const std::string& term);

// Sum over query terms (as given, repeats included) of
// idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl)).
double bm25_score(const std::vector<std::string>& query_tokens, const std::vector<std::string>& doc_tokens,
                  const Bm25CorpusStats& stats, const Bm25Params& params);

// Tokenizes query and documents with params.tokenizer, builds statistics over
// `documents`, and scores each one against the distinct query terms.
std::vector<double> bm25_rank(const std::string& query, const std::vector<std::string>& documents,
                              const Bm25Params& params);

} // namespace sectree
