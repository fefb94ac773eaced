#include <gtest/gtest.h>

#include <cmath>

#include "sectree/bm25.hpp"
#include "sectree/error.hpp"

using namespace sectree;

namespace {

using Doc = std::vector<std::string>;

TEST(Bm25, SingleDocumentHandValue) {
    const std::vector<Doc> docs{{"cash", "cash"}};
    const auto stats = Bm25CorpusStats::from_documents(docs);
    EXPECT_EQ(stats.n_docs, 1u);
    EXPECT_DOUBLE_EQ(stats.avg_doc_len, 2.0);
    EXPECT_NEAR(bm25_idf(stats, "cash"), std::log(1.0 + 0.5 / 1.5), 1e-15);
    const double score = bm25_score({"cash"}, docs[0], stats, Bm25Params{});
    EXPECT_NEAR(score, 0.4110, 5e-5);
    EXPECT_NEAR(score, std::log(4.0 / 3.0) * 5.0 / 3.5, 1e-12);
}

TEST(Bm25, AbsentTermContributesNothing) {
    const std::vector<Doc> docs{{"cash", "flow"}, {"debt"}};
    const auto stats = Bm25CorpusStats::from_documents(docs);
    const Bm25Params p;
    EXPECT_DOUBLE_EQ(bm25_score({"equity"}, docs[0], stats, p), 0.0);
    EXPECT_DOUBLE_EQ(bm25_score({"cash", "equity"}, docs[0], stats, p), bm25_score({"cash"}, docs[0], stats, p));
    EXPECT_DOUBLE_EQ(bm25_score({"cash"}, {}, stats, p), 0.0);
}

TEST(Bm25, LengthNormalizationLowersLongDocuments) {
    const std::vector<Doc> docs{{"cash", "a", "b", "c", "d", "e"}, {"cash"}, {"x", "y"}};
    const auto stats = Bm25CorpusStats::from_documents(docs);
    ASSERT_GT(docs[0].size(), stats.avg_doc_len);
    Bm25Params p0, p1;
    p0.b = 0.0;
    p1.b = 0.75;
    EXPECT_GT(bm25_score({"cash"}, docs[0], stats, p0), bm25_score({"cash"}, docs[0], stats, p1));
}

TEST(Bm25, RepeatedQueryTermsCountInScoreButNotInRank) {
    const std::vector<Doc> docs{{"cash", "flow"}, {"debt", "cash"}, {"equity"}};
    const auto stats = Bm25CorpusStats::from_documents(docs);
    Bm25Params p;
    p.tokenizer = TokenizerRule::Whitespace;
    const double once = bm25_score({"cash"}, docs[0], stats, p);
    EXPECT_NEAR(bm25_score({"cash", "cash"}, docs[0], stats, p), 2 * once, 1e-12);
    const auto ranked = bm25_rank("cash cash", {"cash flow", "debt cash", "equity"}, p);
    EXPECT_NEAR(ranked[0], once, 1e-12);
    EXPECT_DOUBLE_EQ(ranked[2], 0.0);
}

TEST(Bm25, RankStemsByDefault) {
    const auto s = bm25_rank("Revenues", {"revenue grew", "costs fell"}, Bm25Params{});
    EXPECT_GT(s[0], 0.0);
    EXPECT_DOUBLE_EQ(s[1], 0.0);
    EXPECT_TRUE(bm25_rank("x", {}, Bm25Params{}).empty());
}

TEST(Bm25, ParamValidation) {
    Bm25Params p;
    p.k1 = 0;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.b = 1.5;
    EXPECT_THROW(p.validate(), Error);
    p.b = 1.0;
    EXPECT_NO_THROW(p.validate());
}

} // namespace
