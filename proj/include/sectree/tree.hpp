#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sectree/gmm.hpp"
#include "sectree/ingest.hpp"
#include "sectree/providers.hpp"
#include "sectree/reduce.hpp"

namespace sectree {

struct IndexConfig {
    int reduced_dim = 10;
    int gmm_max_components = 50;
    double responsibility_threshold = 0.1;
    int max_depth = 2;
    int questions_per_node = 5;
    int em_max_iters = 200;
    double em_tol = 1e-4;
    std::uint64_t seed = 0;
    // Words of concatenated child text handed to the summarizer.
    std::size_t summary_input_words = 3000;

    void validate() const;
    GmmOptions gmm_options(std::uint64_t salt) const;
};

enum class NodeKind { Internal, Leaf };
enum class TreeKind { Summary, Question };

using NodeId = std::uint32_t;

struct TreeNode {
    NodeId id = 0;
    NodeKind kind = NodeKind::Leaf;
    std::vector<NodeId> children;
    int depth = 0;

    // Summary tree, internal nodes.
    std::string summary;
    std::string title;
    // Question tree, internal nodes.
    std::vector<std::string> questions;
    std::vector<EmbeddingVector> question_embeddings;
    // Leaves, both trees.
    std::string chunk_id;
    std::optional<EmbeddingVector> embedding;
    // Summary tree leaves keep the chunk text.
    std::string text;

    bool is_leaf() const { return kind == NodeKind::Leaf; }
    bool operator==(const TreeNode&) const = default;
};

// One tree (or forest) over the chunks of a single Item. Leaves occupy ids
// [0, n_chunks) in chunk order; internal nodes follow, level by level.
// Soft membership may give a node several parents.
struct TreeIndex {
    std::string filing_id;
    std::string item_label;
    TreeKind kind = TreeKind::Summary;
    std::vector<NodeId> root_ids;
    std::vector<TreeNode> nodes;
    std::string topology_hash;

    const TreeNode& node(NodeId id) const { return nodes.at(id); }
    std::vector<std::string> leaf_chunk_ids() const; // sorted
    std::size_t leaf_count() const;
    std::size_t internal_count() const;
    // Longest root-to-leaf edge count.
    int height() const;
    // Mean root-to-leaf edge count over leaves (shallowest parent path).
    double mean_leaf_depth() const;
    const TreeNode* find_leaf(std::string_view chunk_id) const;

    bool operator==(const TreeIndex&) const = default;
};

// SHA-256 over roots, parent->children lists and leaf chunk ids.
std::string compute_topology_hash(const TreeIndex& tree);

// Bottom-up build: embed the current level, reduce, fit a mixture, soft-assign,
// and make one internal node per non-empty component, summarizing its
// children. Repeats for at most max_depth - 1 levels or until one node remains.
TreeIndex build_summary_tree(std::span<const Chunk> chunks, const IndexConfig& cfg, const ModelProvider& embedder,
                             const ModelProvider& summarizer, const DimensionReducer& reducer = PcaReducer{});

// Same topology; internal nodes carry generated sub-questions and their embeddings.
TreeIndex build_question_tree(const TreeIndex& summary_tree, const ModelProvider& question_generator,
                              const ModelProvider& embedder, const IndexConfig& cfg);

struct ItemIndex {
    TreeIndex summary;
    TreeIndex question;

    const std::string& item_label() const { return summary.item_label; }
    bool operator==(const ItemIndex&) const = default;
};

} // namespace sectree
