#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "sectree/error.hpp"
#include "sectree/gmm.hpp"
#include "sectree/reduce.hpp"
#include "sectree/tree.hpp"

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

Eigen::MatrixXd blobs(std::mt19937_64& rng, const std::vector<Eigen::VectorXd>& centers, int per, double sd,
                      std::vector<int>* labels = nullptr) {
    std::normal_distribution<double> n(0.0, sd);
    const int d = static_cast<int>(centers[0].size());
    Eigen::MatrixXd x(static_cast<int>(centers.size()) * per, d);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (int i = 0; i < per; ++i) {
            const int row = static_cast<int>(c) * per + i;
            for (int j = 0; j < d; ++j) x(row, j) = centers[c](j) + n(rng);
            if (labels) labels->push_back(static_cast<int>(c));
        }
    }
    return x;
}

// ---------------------------------------------------------------- reduce

TEST(Reduce, PassThroughWhenAlreadySmall) {
    Eigen::MatrixXd x(2, 5);
    x << 1, 2, 3, 4, 5, 5, 4, 3, 2, 1;
    EXPECT_EQ(reduce_dims(x, 10), x);
}

TEST(Reduce, IdenticalRowsCollapseToOnePoint) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 20);
    const auto r = reduce_dims(x, 3);
    EXPECT_EQ(r.rows(), 4);
    EXPECT_EQ(r.cols(), 3);
    for (int i = 1; i < 4; ++i) EXPECT_EQ(r.row(i), r.row(0));
}

TEST(Reduce, OutputShapeAndDeterminism) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    Eigen::MatrixXd x(30, 50);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    const auto a = reduce_dims(x, 10);
    EXPECT_EQ(a.cols(), 10);
    EXPECT_EQ(a, reduce_dims(x, 10));
    Eigen::MatrixXd tiny(3, 50);
    tiny = x.topRows(3);
    const auto t = reduce_dims(tiny, 10);
    EXPECT_EQ(t.cols(), 10);
    EXPECT_EQ(t.rightCols(8).norm(), 0.0);
}

TEST(Reduce, SeparatedBlobsStaySeparated) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    std::vector<Eigen::VectorXd> centers;
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd v(64);
        for (int j = 0; j < 64; ++j) v(j) = n(rng);
        centers.push_back(v.normalized());
    }
    std::vector<int> labels;
    Eigen::MatrixXd x = blobs(rng, centers, 34, 0.02, &labels);
    x.conservativeResize(100, Eigen::NoChange);
    labels.resize(100);
    const auto r = reduce_dims(x, 10);
    double max_within = 0, min_across = 1e300;
    for (int i = 0; i < 100; ++i) {
        for (int j = i + 1; j < 100; ++j) {
            const double d = (r.row(i) - r.row(j)).norm();
            if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) max_within = std::max(max_within, d);
            else min_across = std::min(min_across, d);
        }
    }
    EXPECT_LT(max_within, min_across);
}

// ---------------------------------------------------------------- gmm

TEST(Gmm, SinglePoint) {
    Eigen::MatrixXd x(1, 3);
    x << 1, 2, 3;
    const auto m = fit_gmm(x, {});
    EXPECT_EQ(m.n_components, 1);
    EXPECT_NEAR((m.means.row(0) - x.row(0)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(m.responsibilities(x)(0, 0), 1.0, 1e-12);
}

TEST(Gmm, TwoBlobsRecoverGeneratingMeans) {
    std::mt19937_64 rng(12);
    Eigen::VectorXd a(2), b(2);
    a << 0, 0;
    b << 10, 3;
    const auto x = blobs(rng, {a, b}, 20, 0.5);
    GmmOptions o;
    o.seed = 3;
    const auto m = fit_gmm(x, o);
    ASSERT_EQ(m.n_components, 2);
    for (const auto& c : {a, b}) {
        double best = 1e300;
        for (int k = 0; k < 2; ++k) best = std::min(best, (m.means.row(k).transpose() - c).norm());
        EXPECT_LT(best, 0.5);
    }
}

TEST(Gmm, InvariantsOnRandomData) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = 3 + static_cast<int>(rng() % 40), d = 1 + static_cast<int>(rng() % 6);
        Eigen::MatrixXd x(rows, d);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = n(rng) * (1 + static_cast<double>(rng() % 3));
        GmmOptions o;
        o.seed = static_cast<std::uint64_t>(trial);
        for (int k = 1; k <= std::min(rows, 4); ++k) {
            const auto m = fit_gmm_components(x, k, o);
            EXPECT_NEAR(m.weights.sum(), 1.0, 1e-9);
            EXPECT_GE(m.variances.minCoeff(), o.variance_floor);
            const auto r = m.responsibilities(x);
            for (int i = 0; i < rows; ++i) EXPECT_NEAR(r.row(i).sum(), 1.0, 1e-6);
            for (std::size_t t = 1; t < m.log_likelihood_trace.size(); ++t) {
                EXPECT_GE(m.log_likelihood_trace[t], m.log_likelihood_trace[t - 1] - 1e-8);
            }
            EXPECT_NEAR(m.total_log_likelihood(x), m.log_likelihood, 1e-6 * std::max(1.0, std::fabs(m.log_likelihood)));
            EXPECT_DOUBLE_EQ(m.bic, bic_score(m.log_likelihood, m.free_parameters(), rows));
        }
    }
}

TEST(Gmm, BicFormulaAndParameterCount) {
    EXPECT_DOUBLE_EQ(bic_score(-10.0, 5, 20), 5 * std::log(20.0) + 20.0);
    GmmModel m;
    m.n_components = 3;
    m.means = Eigen::MatrixXd::Zero(3, 4);
    EXPECT_EQ(m.free_parameters(), 3 * 4 * 2 + 2);
}

TEST(Gmm, SeedDeterminism) {
    std::mt19937_64 rng(5);
    Eigen::VectorXd a(3), b(3);
    a << 0, 0, 0;
    b << 4, 4, 4;
    const auto x = blobs(rng, {a, b}, 15, 1.0);
    GmmOptions o;
    o.seed = 42;
    const auto m1 = fit_gmm(x, o), m2 = fit_gmm(x, o);
    EXPECT_EQ(m1.means, m2.means);
    EXPECT_EQ(m1.log_likelihood_trace, m2.log_likelihood_trace);
}

TEST(SoftAssign, ThresholdRule) {
    Eigen::MatrixXd r(3, 2);
    r << 0.95, 0.05, 0.55, 0.45, 0.02, 0.98;
    const auto s = soft_assign(r, 0.1);
    EXPECT_EQ(s[0], (std::vector<int>{0}));
    EXPECT_EQ(s[1], (std::vector<int>{0, 1}));
    EXPECT_EQ(s[2], (std::vector<int>{1}));
    Eigen::MatrixXd flat(1, 4);
    flat << 0.25, 0.25, 0.26, 0.24;
    EXPECT_EQ(soft_assign(flat, 0.9)[0], (std::vector<int>{2}));
}

TEST(SoftAssign, SingleComponentTakesEveryPoint) {
    Eigen::MatrixXd x(5, 2);
    x.setRandom();
    const auto m = fit_gmm_components(x, 1, {});
    const auto r = m.responsibilities(x);
    for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(r(i, 0), 1.0);
    for (const auto& s : soft_assign(m, x, 0.1)) EXPECT_EQ(s, (std::vector<int>{0}));
}

// ---------------------------------------------------------------- trees

std::vector<Chunk> chunks_from(const std::vector<std::string>& texts) {
    std::vector<Chunk> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Chunk c;
        c.filing_id = "F";
        c.item_label = "7";
        c.chunk_id = make_chunk_id("F", "7", i);
        c.text = texts[i];
        c.token_count = count_words(texts[i]);
        out.push_back(c);
    }
    return out;
}

std::string topic_text(const std::vector<std::string>& vocab, std::mt19937& rng, int words) {
    std::string s;
    for (int i = 0; i < words; ++i) {
        s += vocab[rng() % vocab.size()];
        s += (i % 9 == 8) ? ". " : " ";
    }
    return s + ".";
}

TEST(SummaryTree, SingleChunkIsALeafForest) {
    StubProvider p(64);
    const auto chunks = chunks_from({"Only one chunk of text here."});
    const TreeIndex t = build_summary_tree(chunks, IndexConfig{}, p, p);
    EXPECT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.root_ids, (std::vector<NodeId>{0}));
    EXPECT_EQ(t.height(), 0);
    EXPECT_EQ(t.internal_count(), 0u);
    EXPECT_EQ(kind_of([&] { build_summary_tree(std::vector<Chunk>{}, IndexConfig{}, p, p); }), ErrorKind::EmptyItem);
}

TEST(SummaryTree, TwoTopicsGiveTwoParents) {
    std::mt19937 rng(9);
    const std::vector<std::string> a{"liquidity", "deposits", "funding", "treasury", "reserves", "borrowing", "cash"};
    const std::vector<std::string> b{"litigation", "lawsuit", "counsel", "settlement", "court", "plaintiff", "claims"};
    std::vector<std::string> texts;
    for (int i = 0; i < 3; ++i) texts.push_back(topic_text(a, rng, 60));
    for (int i = 0; i < 3; ++i) texts.push_back(topic_text(b, rng, 60));
    StubProvider p(256);
    IndexConfig cfg;
    cfg.seed = 1;
    const TreeIndex t = build_summary_tree(chunks_from(texts), cfg, p, p);
    ASSERT_EQ(t.internal_count(), 2u);
    std::set<std::set<std::string>> groups;
    for (const auto& n : t.nodes) {
        if (n.is_leaf()) continue;
        std::set<std::string> g;
        for (NodeId c : n.children) g.insert(t.node(c).chunk_id);
        groups.insert(g);
        EXPECT_FALSE(n.summary.empty());
        EXPECT_FALSE(n.title.empty());
    }
    const std::set<std::set<std::string>> want{{"F/7/0", "F/7/1", "F/7/2"}, {"F/7/3", "F/7/4", "F/7/5"}};
    EXPECT_EQ(groups, want);
}

class RandomItemTrees : public ::testing::TestWithParam<int> {};

TEST_P(RandomItemTrees, StructuralInvariants) {
    std::mt19937 rng(static_cast<unsigned>(GetParam()));
    std::vector<std::vector<std::string>> topics;
    for (int t = 0; t < 4; ++t) {
        std::vector<std::string> v;
        for (int w = 0; w < 8; ++w) v.push_back("t" + std::to_string(t) + "w" + std::to_string(w));
        topics.push_back(v);
    }
    std::vector<std::string> texts;
    const int n = 1 + static_cast<int>(rng() % 25);
    for (int i = 0; i < n; ++i) texts.push_back(topic_text(topics[rng() % topics.size()], rng, 30));
    const auto chunks = chunks_from(texts);
    StubProvider p(128);
    IndexConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(GetParam());
    cfg.max_depth = 1 + GetParam() % 3;
    const TreeIndex s = build_summary_tree(chunks, cfg, p, p);
    const TreeIndex q = build_question_tree(s, p, p, cfg);

    std::set<std::string> want;
    for (const auto& c : chunks) want.insert(c.chunk_id);
    const auto leaves = s.leaf_chunk_ids();
    EXPECT_EQ(std::set<std::string>(leaves.begin(), leaves.end()), want);
    EXPECT_EQ(s.topology_hash, compute_topology_hash(s));
    EXPECT_EQ(q.topology_hash, s.topology_hash);
    EXPECT_EQ(q.leaf_chunk_ids(), leaves);
    EXPECT_EQ(q.kind, TreeKind::Question);
    EXPECT_LE(s.height(), cfg.max_depth);
    ASSERT_EQ(q.nodes.size(), s.nodes.size());
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        const auto& sn = s.nodes[i];
        const auto& qn = q.nodes[i];
        EXPECT_EQ(sn.children, qn.children);
        EXPECT_EQ(sn.is_leaf(), sn.children.empty());
        EXPECT_EQ(sn.is_leaf(), !sn.chunk_id.empty());
        EXPECT_LE(sn.depth, cfg.max_depth);
        for (NodeId c : sn.children) EXPECT_LT(c, sn.id);
        if (sn.is_leaf()) {
            EXPECT_TRUE(qn.questions.empty());
            ASSERT_TRUE(qn.embedding.has_value());
            EXPECT_EQ(qn.embedding->space_tag, "qa");
        } else {
            EXPECT_FALSE(sn.summary.empty());
            EXPECT_EQ(qn.questions.size(), static_cast<std::size_t>(cfg.questions_per_node));
            EXPECT_EQ(qn.question_embeddings.size(), qn.questions.size());
        }
    }
    // Rebuilding with the same seed is identical.
    EXPECT_EQ(build_summary_tree(chunks, cfg, p, p), s);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomItemTrees, ::testing::Range(0, 24));

TEST(TopologyHash, SensitiveToStructureOnly) {
    StubProvider p(64);
    std::mt19937 rng(4);
    std::vector<std::string> texts;
    for (int i = 0; i < 8; ++i) texts.push_back(topic_text({"a1", "b2", "c3", "d4"}, rng, 20));
    TreeIndex t = build_summary_tree(chunks_from(texts), IndexConfig{}, p, p);
    TreeIndex renamed = t;
    for (auto& n : renamed.nodes) n.summary = "changed";
    EXPECT_EQ(compute_topology_hash(renamed), t.topology_hash);
    TreeIndex moved = t;
    moved.nodes[0].chunk_id = "F/7/99";
    EXPECT_NE(compute_topology_hash(moved), t.topology_hash);
}

TEST(IndexConfig, Validation) {
    IndexConfig c;
    EXPECT_NO_THROW(c.validate());
    c.responsibility_threshold = 1.0;
    EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::InvalidConfig);
    c = IndexConfig{};
    c.max_depth = 0;
    EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::InvalidConfig);
    c = IndexConfig{};
    EXPECT_NE(c.gmm_options(1).seed, c.gmm_options(2).seed);
    EXPECT_EQ(c.gmm_options(1).max_components, 50);
}

} // namespace
