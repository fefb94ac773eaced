#include "sectree/tree.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

#include "sectree/error.hpp"
#include "sectree/hash.hpp"
#include "sectree/text.hpp"

namespace sectree {

void IndexConfig::validate() const {
    if (reduced_dim < 1) throw Error(ErrorKind::InvalidConfig, "reduced_dim must be >= 1");
    if (gmm_max_components < 1) throw Error(ErrorKind::InvalidConfig, "gmm_max_components must be >= 1");
    if (!(responsibility_threshold > 0 && responsibility_threshold < 1)) {
        throw Error(ErrorKind::InvalidConfig, "responsibility_threshold must lie in (0, 1)");
    }
    if (max_depth < 1) throw Error(ErrorKind::InvalidConfig, "max_depth must be >= 1");
    if (questions_per_node < 1) throw Error(ErrorKind::InvalidConfig, "questions_per_node must be >= 1");
    if (em_max_iters < 1) throw Error(ErrorKind::InvalidConfig, "em_max_iters must be >= 1");
    if (!(em_tol > 0)) throw Error(ErrorKind::InvalidConfig, "em_tol must be positive");
}

GmmOptions IndexConfig::gmm_options(std::uint64_t salt) const {
    GmmOptions o;
    o.max_components = gmm_max_components;
    o.max_iters = em_max_iters;
    o.tol = em_tol;
    o.seed = mix64(seed ^ salt);
    return o;
}

std::vector<std::string> TreeIndex::leaf_chunk_ids() const {
    std::vector<std::string> ids;
    for (const auto& n : nodes) {
        if (n.is_leaf()) ids.push_back(n.chunk_id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::size_t TreeIndex::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t TreeIndex::internal_count() const { return nodes.size() - leaf_count(); }

int TreeIndex::height() const {
    std::vector<int> down(nodes.size(), -1);
    std::function<int(NodeId)> walk = [&](NodeId id) {
        int& d = down.at(id);
        if (d >= 0) return d;
        d = 0;
        for (NodeId c : nodes[id].children) d = std::max(d, walk(c) + 1);
        return d;
    };
    int h = 0;
    for (NodeId r : root_ids) h = std::max(h, walk(r));
    return h;
}

double TreeIndex::mean_leaf_depth() const {
    std::vector<int> depth(nodes.size(), -1);
    std::deque<NodeId> queue;
    for (NodeId r : root_ids) {
        if (depth.at(r) < 0) {
            depth[r] = 0;
            queue.push_back(r);
        }
    }
    while (!queue.empty()) {
        const NodeId id = queue.front();
        queue.pop_front();
        for (NodeId c : nodes[id].children) {
            if (depth.at(c) < 0) {
                depth[c] = depth[id] + 1;
                queue.push_back(c);
            }
        }
    }
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i].is_leaf() || depth[i] < 0) continue;
        sum += depth[i];
        ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

const TreeNode* TreeIndex::find_leaf(std::string_view chunk_id) const {
    for (const auto& n : nodes) {
        if (n.is_leaf() && n.chunk_id == chunk_id) return &n;
    }
    return nullptr;
}

std::string compute_topology_hash(const TreeIndex& tree) {
    std::string canon = "roots:";
    for (NodeId r : tree.root_ids) canon += std::to_string(r) + ",";
    canon += "\n";
    for (const auto& n : tree.nodes) {
        canon += std::to_string(n.id);
        canon += n.is_leaf() ? ":L:" : ":I:";
        for (NodeId c : n.children) canon += std::to_string(c) + ",";
        canon += ":";
        canon += n.chunk_id;
        canon += "\n";
    }
    return sha256_hex(canon);
}

namespace {

void assign_depths(TreeIndex& tree) {
    for (auto& n : tree.nodes) n.depth = -1;
    std::deque<NodeId> queue;
    for (NodeId r : tree.root_ids) {
        tree.nodes[r].depth = 0;
        queue.push_back(r);
    }
    while (!queue.empty()) {
        const NodeId id = queue.front();
        queue.pop_front();
        for (NodeId c : tree.nodes[id].children) {
            if (tree.nodes[c].depth < 0) {
                tree.nodes[c].depth = tree.nodes[id].depth + 1;
                queue.push_back(c);
            }
        }
    }
}

std::string joined_child_text(const TreeIndex& tree, const std::vector<NodeId>& children, std::size_t max_words) {
    std::string text;
    for (NodeId c : children) {
        const auto& child = tree.nodes[c];
        if (!text.empty()) text += "\n\n";
        text += child.is_leaf() ? child.text : child.summary;
    }
    if (count_words(text) <= max_words) return text;
    // Truncate while keeping paragraph breaks for the summarizer.
    std::string out;
    std::size_t words = 0;
    for (const auto& para : split_paragraphs(text)) {
        const std::size_t n = count_words(para);
        if (words + n > max_words) {
            if (words < max_words) {
                if (!out.empty()) out += "\n\n";
                out += truncate_words(para, max_words - words);
            }
            break;
        }
        if (!out.empty()) out += "\n\n";
        out += para;
        words += n;
    }
    return out;
}

} // namespace

TreeIndex build_summary_tree(std::span<const Chunk> chunks, const IndexConfig& cfg, const ModelProvider& embedder,
                             const ModelProvider& summarizer, const DimensionReducer& reducer) {
    cfg.validate();
    if (chunks.empty()) throw Error(ErrorKind::EmptyItem, "cannot build a tree over zero chunks");

    TreeIndex tree;
    tree.filing_id = chunks.front().filing_id;
    tree.item_label = chunks.front().item_label;
    tree.kind = TreeKind::Summary;

    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    std::vector<EmbeddingVector> level_embeddings = embedder.embed_texts(texts, kQaSpace);

    std::vector<NodeId> level;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        TreeNode leaf;
        leaf.id = static_cast<NodeId>(i);
        leaf.kind = NodeKind::Leaf;
        leaf.chunk_id = chunks[i].chunk_id;
        leaf.text = chunks[i].text;
        leaf.embedding = level_embeddings[i];
        tree.nodes.push_back(std::move(leaf));
        level.push_back(static_cast<NodeId>(i));
    }

    const std::uint64_t item_salt = fnv1a64(tree.filing_id + "/" + tree.item_label);
    for (int round = 1; round < cfg.max_depth && level.size() > 1; ++round) {
        if (round > 1) {
            texts.clear();
            for (NodeId id : level) texts.push_back(tree.nodes[id].summary);
            level_embeddings = embedder.embed_texts(texts, kQaSpace);
        }
        const Eigen::MatrixXd reduced = reducer.reduce(to_matrix(level_embeddings), cfg.reduced_dim);
        const GmmModel model = fit_gmm(reduced, cfg.gmm_options(item_salt ^ static_cast<std::uint64_t>(round)));
        const auto membership = soft_assign(model, reduced, cfg.responsibility_threshold);

        std::vector<std::vector<NodeId>> groups(static_cast<std::size_t>(model.n_components));
        for (std::size_t p = 0; p < membership.size(); ++p) {
            for (int c : membership[p]) groups[static_cast<std::size_t>(c)].push_back(level[p]);
        }
        std::erase_if(groups, [](const std::vector<NodeId>& g) { return g.empty(); });
        const bool no_grouping = groups.size() == level.size() &&
                                 std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.size() == 1; });
        if (no_grouping) break;

        std::vector<NodeId> next;
        for (auto& g : groups) {
            TreeNode node;
            node.id = static_cast<NodeId>(tree.nodes.size());
            node.kind = NodeKind::Internal;
            node.children = std::move(g);
            node.summary = summarizer.summarize(joined_child_text(tree, node.children, cfg.summary_input_words));
            node.title = summarizer.generate_title(node.summary);
            next.push_back(node.id);
            tree.nodes.push_back(std::move(node));
        }
        level = std::move(next);
    }
    tree.root_ids = level;
    assign_depths(tree);
    tree.topology_hash = compute_topology_hash(tree);
    return tree;
}

TreeIndex build_question_tree(const TreeIndex& summary_tree, const ModelProvider& question_generator,
                              const ModelProvider& embedder, const IndexConfig& cfg) {
    cfg.validate();
    TreeIndex tree;
    tree.filing_id = summary_tree.filing_id;
    tree.item_label = summary_tree.item_label;
    tree.kind = TreeKind::Question;
    tree.root_ids = summary_tree.root_ids;
    tree.nodes.reserve(summary_tree.nodes.size());
    for (const auto& src : summary_tree.nodes) {
        TreeNode node;
        node.id = src.id;
        node.kind = src.kind;
        node.children = src.children;
        node.depth = src.depth;
        node.chunk_id = src.chunk_id;
        if (src.is_leaf()) {
            node.embedding = src.embedding;
            if (!node.embedding) node.embedding = embedder.embed_text(src.text, kQaSpace);
        } else {
            node.questions =
                question_generator.generate_questions(src.summary, static_cast<std::size_t>(cfg.questions_per_node));
            node.question_embeddings = embedder.embed_texts(node.questions, kQaSpace);
        }
        tree.nodes.push_back(std::move(node));
    }
    tree.topology_hash = compute_topology_hash(tree);
    return tree;
}

} // namespace sectree
