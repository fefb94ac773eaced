#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "sectree/error.hpp"
#include "sectree/ingest.hpp"
#include "sectree/lexicon.hpp"
#include "synthetic.hpp"

using namespace sectree;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::InvalidInput;
}

GmmOptions gmm(std::uint64_t seed = 1) {
    GmmOptions o;
    o.seed = seed;
    return o;
}

Lexicon hand_clustered(const std::vector<std::pair<std::string, int>>& terms) {
    Lexicon lex;
    std::string text;
    for (const auto& [t, c] : terms) text += t + "\n";
    lex.terms = parse_lexicon(text, false);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        lex.terms[i].cluster_id = terms[i].second;
        lex.n_clusters = std::max(lex.n_clusters, terms[i].second + 1);
    }
    return lex;
}

TermFrequencyTable table(const std::map<std::string, std::uint64_t>& counts) {
    TermFrequencyTable t;
    for (const auto& [label, n] : counts) {
        t.item_labels.push_back(label);
        t.counts[label][0] = n;
    }
    std::sort(t.item_labels.begin(), t.item_labels.end(), [](auto& a, auto& b) { return item_label_less(a, b); });
    return t;
}

TEST(LexiconParse, NormalizesAndDeduplicates) {
    const auto terms = parse_lexicon("Net Income\nnet  income\nCET1\n\n", false);
    ASSERT_EQ(terms.size(), 2u);
    EXPECT_EQ(terms[0].surface, "net income");
    EXPECT_EQ(terms[0].tokens, (std::vector<std::string>{"net", "income"}));
    EXPECT_EQ(terms[1].surface, "cet1");
    EXPECT_EQ(terms[0].cluster_id, -1);
}

TEST(LexiconParse, CsvUsesTermColumn) {
    const auto terms = parse_lexicon("id,term,source\n1,Goodwill,x\n2,\"Tier 1 capital\",y\n", true);
    ASSERT_EQ(terms.size(), 2u);
    EXPECT_EQ(terms[0].surface, "goodwill");
    EXPECT_EQ(terms[1].surface, "tier 1 capital");
}

TEST(LexiconLoad, EmptyAndMissingFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "sectree_lexicon_test";
    std::filesystem::create_directories(dir);
    write_text_file(dir / "empty.txt", "\n  \n");
    EXPECT_EQ(kind_of([&] { load_lexicon(dir / "empty.txt"); }), ErrorKind::EmptyLexicon);
    EXPECT_EQ(kind_of([&] { load_lexicon(dir / "absent.txt"); }), ErrorKind::IoError);
    write_text_file(dir / "terms.csv", "term\nRevenue\n");
    EXPECT_EQ(load_lexicon(dir / "terms.csv").size(), 1u);
    std::filesystem::remove_all(dir);
}

TEST(ItemLabels, NumericThenSuffixOrder) {
    std::vector<std::string> labels{"10", "1B", "2", "1", "7A", "1A", "7"};
    std::sort(labels.begin(), labels.end(), [](auto& a, auto& b) { return item_label_less(a, b); });
    EXPECT_EQ(labels, (std::vector<std::string>{"1", "1A", "1B", "2", "7", "7A", "10"}));
}

TEST(PhraseMatcher, LongestMatchWithoutOverlap) {
    const auto lex = hand_clustered({{"income", 0}, {"net income", 1}, {"net income per share", 2}});
    PhraseMatcher m(lex.terms);
    const auto hits = m.find(tokenize("net income and net income per share and income", TokenizerRule::Word));
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(lex.terms[hits[0].term_index].surface, "net income");
    EXPECT_EQ(lex.terms[hits[1].term_index].surface, "net income per share");
    EXPECT_EQ(lex.terms[hits[2].term_index].surface, "income");
    for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_GE(hits[i].token_begin, hits[i - 1].token_end);
}

TEST(MatchTerms, CountsPerItemAndCluster) {
    const auto lex = hand_clustered({{"net income", 0}, {"income", 1}, {"goodwill", 2}});
    const Filing f = parse_filing("Item 1. A\nnet income and net income per share\nItem 7. B\nincome only, no goodwill? goodwill.\n"
                                  "Item 8. C\nnothing relevant\n",
                                  "f");
    const auto t = match_terms(f, lex);
    EXPECT_EQ(t.count("1", 0), 2u);
    EXPECT_EQ(t.count("1", 1), 0u);
    EXPECT_EQ(t.count("7", 1), 1u);
    EXPECT_EQ(t.count("7", 2), 2u);
    EXPECT_EQ(t.count("8", 0), 0u);
    EXPECT_EQ(t.item_labels, (std::vector<std::string>{"1", "7", "8"}));
}

TEST(ClusterTerms, SingleAndDuplicateTerms) {
    StubProvider embedder(64);
    const auto one = cluster_terms(parse_lexicon("goodwill\n", false), embedder, 10, gmm());
    EXPECT_EQ(one.n_clusters, 1);
    EXPECT_EQ(one.terms[0].cluster_id, 0);
    std::vector<LexiconTerm> twins = parse_lexicon("cash flow\nrevenue growth\nrisk factor\n", false);
    twins.push_back(twins[0]);
    const auto c = cluster_terms(twins, embedder, 10, gmm());
    EXPECT_EQ(c.terms[0].cluster_id, c.terms[3].cluster_id);
    EXPECT_EQ(kind_of([&] { cluster_terms({}, embedder, 10, gmm()); }), ErrorKind::EmptyLexicon);
}

TEST(ClusterTerms, DisjointFamiliesGivePureClusters) {
    const auto families = sectree::testing::term_families(4, 10);
    std::vector<LexiconTerm> terms;
    std::vector<int> family_of;
    for (std::size_t f = 0; f < families.size(); ++f) {
        std::string text;
        for (const auto& t : families[f]) text += t + "\n";
        for (auto& t : parse_lexicon(text, false)) {
            terms.push_back(t);
            family_of.push_back(static_cast<int>(f));
        }
    }
    ASSERT_EQ(terms.size(), 40u);
    StubProvider embedder(768);
    const Lexicon lex = cluster_terms(terms, embedder, 10, gmm(7));
    EXPECT_EQ(lex.n_clusters, 4);
    // Brute-force purity: terms share a cluster iff they share a family.
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            EXPECT_EQ(lex.terms[i].cluster_id == lex.terms[j].cluster_id, family_of[i] == family_of[j])
                << lex.terms[i].surface << " / " << lex.terms[j].surface;
        }
    }
    ASSERT_EQ(lex.centroids.size(), 4u);
    EXPECT_EQ(lex.centroids[0].space_tag, "lexicon");
}

TEST(ExpandQuery, DirectHitsAndUnion) {
    auto lex = hand_clustered({{"cet1", 3}, {"goodwill", 1}, {"net income", 4}});
    StubProvider embedder(16);
    lex.centroids.assign(5, embedder.embed_text("x", kLexiconSpace));
    EXPECT_EQ(expand_query_terms("What was the CET1 ratio?", lex, embedder), (std::set<int>{3}));
    EXPECT_EQ(expand_query_terms("goodwill versus net income", lex, embedder), (std::set<int>{1, 4}));
}

TEST(ExpandQuery, NoHitFallsBackToNearestCentroid) {
    StubProvider embedder(32);
    Lexicon lex = hand_clustered({{"alpha", 0}, {"beta", 1}, {"gamma", 2}});
    for (const char* seed : {"deposit", "zebra", "mortgage"}) lex.centroids.push_back(embedder.embed_text(seed, kLexiconSpace));
    for (const char* query : {"zebra crossing", "mortgage rates", "deposit base", "unrelated words"}) {
        const auto q = embedder.embed_text(query, kLexiconSpace);
        int best = -1;
        double best_d = 1e300;
        for (std::size_t c = 0; c < lex.centroids.size(); ++c) {
            double d = 0;
            for (std::size_t j = 0; j < q.values.size(); ++j) {
                d += std::pow(static_cast<double>(q.values[j]) - lex.centroids[c].values[j], 2);
            }
            if (d < best_d) best_d = d, best = static_cast<int>(c);
        }
        EXPECT_EQ(expand_query_terms(query, lex, embedder), (std::set<int>{best})) << query;
    }
}

TEST(ItemWeights, RelativeFrequencyExamples) {
    auto w = compute_item_weights(table({{"7", 6}, {"1", 2}, {"1A", 2}}), {0}, WeightingStrategy::RelativeFrequency);
    EXPECT_NEAR(w.weight("7"), 0.6, 1e-12);
    EXPECT_NEAR(w.weight("1"), 0.2, 1e-12);
    EXPECT_NEAR(w.weight("1A"), 0.2, 1e-12);
    w = compute_item_weights(table({{"A", 3}, {"B", 1}}), {0}, WeightingStrategy::RelativeFrequency);
    EXPECT_NEAR(w.weight("A"), 0.75, 1e-12);
    EXPECT_NEAR(w.weight("B"), 0.25, 1e-12);
}

TEST(ItemWeights, AllZeroIsUniform) {
    for (auto s : {WeightingStrategy::RelativeFrequency, WeightingStrategy::Logarithmic, WeightingStrategy::Softmax}) {
        const auto w = compute_item_weights(table({{"1", 0}, {"2", 0}, {"3", 0}, {"4", 0}}), {0}, s);
        for (const auto& it : w.items) EXPECT_DOUBLE_EQ(it.weight, 0.25);
        EXPECT_TRUE(w.uniform_fallback);
    }
}

TEST(ItemWeights, OnlyActiveClustersCount) {
    TermFrequencyTable t;
    t.item_labels = {"1", "7"};
    t.counts["1"][0] = 9;
    t.counts["7"][1] = 3;
    t.counts["7"][2] = 1;
    const auto w = compute_item_weights(t, {1, 2}, WeightingStrategy::RelativeFrequency);
    EXPECT_DOUBLE_EQ(w.weight("1"), 0.0);
    EXPECT_DOUBLE_EQ(w.weight("7"), 1.0);
    EXPECT_DOUBLE_EQ(w.items[1].frequency, 4.0);
}

TEST(ItemWeights, StrategyFormulas) {
    const std::map<std::string, std::uint64_t> counts{{"1", 1}, {"2", 4}, {"3", 0}, {"7", 10}};
    const auto log_w = compute_item_weights(table(counts), {0}, WeightingStrategy::Logarithmic);
    const auto soft_w = compute_item_weights(table(counts), {0}, WeightingStrategy::Softmax);
    double log_sum = 0, soft_sum = 0;
    for (const auto& [l, n] : counts) {
        log_sum += std::log1p(static_cast<double>(n));
        soft_sum += std::exp(static_cast<double>(n) / 10.0);
    }
    for (const auto& [l, n] : counts) {
        EXPECT_NEAR(log_w.weight(l), std::log1p(static_cast<double>(n)) / log_sum, 1e-12);
        EXPECT_NEAR(soft_w.weight(l), std::exp(static_cast<double>(n) / 10.0) / soft_sum, 1e-12);
    }
    EXPECT_EQ(weighting_from_name("softmax"), WeightingStrategy::Softmax);
    EXPECT_EQ(weighting_from_name("exponential_scaling"), WeightingStrategy::Softmax);
    EXPECT_EQ(weighting_from_name(weighting_name(WeightingStrategy::Logarithmic)), WeightingStrategy::Logarithmic);
    EXPECT_EQ(kind_of([] { weighting_from_name("cubic"); }), ErrorKind::InvalidConfig);
}

TEST(ItemWeights, NormalizationScaleAndMonotonicity) {
    std::mt19937 rng(21);
    const auto strategies = {WeightingStrategy::RelativeFrequency, WeightingStrategy::Logarithmic,
                             WeightingStrategy::Softmax};
    for (int trial = 0; trial < 300; ++trial) {
        std::map<std::string, std::uint64_t> counts;
        const int n = 2 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) counts[std::to_string(i + 1)] = rng() % 30;
        const auto t = table(counts);
        auto bumped_counts = counts;
        const std::string target = std::to_string(1 + rng() % n);
        bumped_counts[target] += 1 + rng() % 5;
        auto scaled_counts = counts;
        const std::uint64_t factor = 2 + rng() % 5;
        for (auto& [l, c] : scaled_counts) c *= factor;
        for (auto s : strategies) {
            const auto w = compute_item_weights(t, {0}, s);
            double sum = 0;
            for (const auto& it : w.items) {
                EXPECT_GE(it.weight, 0.0);
                EXPECT_LE(it.weight, 1.0);
                sum += it.weight;
            }
            EXPECT_NEAR(sum, 1.0, 1e-9);
            const auto bumped = compute_item_weights(table(bumped_counts), {0}, s);
            EXPECT_GE(bumped.weight(target), w.weight(target) - 1e-12);
            if (s != WeightingStrategy::Softmax) {
                const auto scaled = compute_item_weights(table(scaled_counts), {0}, s);
                for (const auto& a : w.items) {
                    for (const auto& b : w.items) {
                        if (a.weight > b.weight + 1e-12) EXPECT_GT(scaled.weight(a.item_label), scaled.weight(b.item_label));
                    }
                }
            }
        }
    }
}

TEST(Budget, Examples) {
    auto w = compute_item_weights(table({{"7", 6}, {"1", 2}, {"1A", 2}}), {0}, WeightingStrategy::RelativeFrequency);
    auto a = allocate_budget(w, 10);
    EXPECT_EQ(a.budget("7"), 6);
    EXPECT_EQ(a.budget("1"), 2);
    EXPECT_EQ(a.budget("1A"), 2);
    EXPECT_EQ(a.total, 10);

    const auto single = uniform_weights({"A"});
    for (int k : {1, 7, 50}) EXPECT_EQ(allocate_budget(single, k).budget("A"), k);

    const auto thirds = uniform_weights({"A", "B", "C"});
    a = allocate_budget(thirds, 10);
    EXPECT_EQ(a.budget("A"), 4);
    EXPECT_EQ(a.budget("B"), 3);
    EXPECT_EQ(a.budget("C"), 3);
    EXPECT_EQ(a.budget("Z"), 0);

    EXPECT_EQ(kind_of([&] { allocate_budget(thirds, 0); }), ErrorKind::InvalidBudget);
    EXPECT_EQ(kind_of([] { uniform_weights({}); }), ErrorKind::InvalidInput);
}

TEST(Budget, MatchesRoundingWhenRoundingAddsUp) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    int checked = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        ItemWeights w;
        const int n = 2 + static_cast<int>(rng() % 6);
        double total = 0;
        for (int i = 0; i < n; ++i) {
            w.items.push_back({std::to_string(i + 1), 0, u(rng)});
            total += w.items.back().weight;
        }
        for (auto& it : w.items) it.weight /= total;
        const int k = 1 + static_cast<int>(rng() % 30);
        int rounded_sum = 0;
        std::vector<int> rounded;
        for (const auto& it : w.items) {
            rounded.push_back(static_cast<int>(std::lround(k * it.weight)));
            rounded_sum += rounded.back();
        }
        if (rounded_sum != k) continue;
        ++checked;
        const auto a = allocate_budget(w, k);
        for (int i = 0; i < n; ++i) EXPECT_EQ(a.items[static_cast<std::size_t>(i)].budget, rounded[static_cast<std::size_t>(i)]);
    }
    EXPECT_GT(checked, 500);
}

TEST(Budget, JsonSurfaces) {
    const auto w = uniform_weights({"1", "7"});
    const auto j = to_json(allocate_budget(w, 3));
    EXPECT_EQ(j.dump().find("\"7\"") != std::string::npos, true);
    const auto lex = hand_clustered({{"cash", 0}});
    const auto back = lexicon_from_json(to_json(lex));
    EXPECT_EQ(back.terms.size(), 1u);
    EXPECT_EQ(back.terms[0].cluster_id, 0);
    TermFrequencyTable t = table({{"1", 3}, {"7", 5}});
    const auto t2 = term_table_from_json(to_json(t));
    EXPECT_EQ(t2.item_labels, t.item_labels);
    EXPECT_EQ(t2.count("7", 0), 5u);
}

} // namespace
