#include "sectree/index.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <sstream>

#include "sectree/error.hpp"
#include "sectree/hash.hpp"

namespace sectree {

namespace fs = std::filesystem;
using nlohmann::json;

const ItemIndex* FilingIndex::find_item(std::string_view item_label) const {
    for (const auto& item : items) {
        if (item.item_label() == item_label) return &item;
    }
    return nullptr;
}

std::vector<std::string> FilingIndex::item_labels() const {
    std::vector<std::string> out;
    for (const auto& item : items) out.push_back(item.item_label());
    return out;
}

const std::string* FilingIndex::chunk_text(std::string_view chunk_id) const {
    for (const auto& item : items) {
        if (const TreeNode* leaf = item.summary.find_leaf(chunk_id)) return &leaf->text;
    }
    return nullptr;
}

bool FilingIndex::operator==(const FilingIndex& other) const {
    return filing_id == other.filing_id && company == other.company && fiscal_year == other.fiscal_year &&
           items == other.items && term_counts.item_labels == other.term_counts.item_labels &&
           term_counts.counts == other.term_counts.counts;
}

const FilingIndex* IndexSet::find_filing(std::string_view filing_id) const {
    for (const auto& f : filings) {
        if (f.filing_id == filing_id) return &f;
    }
    return nullptr;
}

TermFrequencyTable IndexSet::corpus_term_counts() const {
    TermFrequencyTable total;
    for (const auto& f : filings) total.merge(f.term_counts);
    return total;
}

FilingIndex build_filing_index(const ChunkedFiling& cf, const Lexicon& lexicon, const IndexConfig& cfg,
                               const ProviderSet& providers) {
    FilingIndex fi;
    fi.filing_id = cf.filing.filing_id;
    fi.company = cf.filing.company;
    fi.fiscal_year = cf.filing.fiscal_year;
    fi.term_counts = match_terms(cf.filing, lexicon);
    for (const auto& item : cf.filing.items) {
        std::vector<Chunk> chunks;
        for (const auto& c : cf.chunks) {
            if (c.item_label == item.item_label) chunks.push_back(c);
        }
        if (chunks.empty()) continue;
        ItemIndex ii;
        ii.summary = build_summary_tree(chunks, cfg, *providers.embedder, *providers.summarizer);
        ii.question = build_question_tree(ii.summary, *providers.question_generator, *providers.embedder, cfg);
        fi.items.push_back(std::move(ii));
    }
    return fi;
}

IndexSet build_index(const std::vector<ChunkedFiling>& corpus, std::vector<LexiconTerm> lexicon_terms,
                     const IndexConfig& cfg, const ProviderSet& providers) {
    cfg.validate();
    if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "no filings to index");
    std::size_t total_chunks = 0;
    for (const auto& cf : corpus) total_chunks += cf.chunks.size();
    if (total_chunks == 0) throw Error(ErrorKind::EmptyCorpus, "corpus has no chunks");

    IndexSet index;
    index.config = cfg;
    index.lexicon = cluster_terms(std::move(lexicon_terms), *providers.embedder, cfg.reduced_dim,
                                  cfg.gmm_options(fnv1a64("lexicon")));
    for (const auto& cf : corpus) index.filings.push_back(build_filing_index(cf, index.lexicon, cfg, providers));
    std::sort(index.filings.begin(), index.filings.end(),
              [](const FilingIndex& a, const FilingIndex& b) { return a.filing_id < b.filing_id; });
    return index;
}

json to_json(const IndexConfig& cfg) {
    return {{"reduced_dim", cfg.reduced_dim},
            {"gmm_max_components", cfg.gmm_max_components},
            {"responsibility_threshold", cfg.responsibility_threshold},
            {"max_depth", cfg.max_depth},
            {"questions_per_node", cfg.questions_per_node},
            {"em_max_iters", cfg.em_max_iters},
            {"em_tol", cfg.em_tol},
            {"seed", cfg.seed},
            {"summary_input_words", cfg.summary_input_words}};
}

IndexConfig index_config_from_json(const json& j) {
    IndexConfig cfg;
    cfg.reduced_dim = j.value("reduced_dim", cfg.reduced_dim);
    cfg.gmm_max_components = j.value("gmm_max_components", cfg.gmm_max_components);
    cfg.responsibility_threshold = j.value("responsibility_threshold", cfg.responsibility_threshold);
    cfg.max_depth = j.value("max_depth", cfg.max_depth);
    cfg.questions_per_node = j.value("questions_per_node", cfg.questions_per_node);
    cfg.em_max_iters = j.value("em_max_iters", cfg.em_max_iters);
    cfg.em_tol = j.value("em_tol", cfg.em_tol);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.summary_input_words = j.value("summary_input_words", cfg.summary_input_words);
    return cfg;
}

namespace {

constexpr char kEmbeddingMagic[8] = {'S', 'E', 'C', 'T', 'E', 'M', 'B', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteReader {
public:
    ByteReader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}
    std::uint64_t get(int bytes) {
        need(static_cast<std::size_t>(bytes));
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(bytes);
        return v;
    }
    std::string_view take(std::size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t position() const { return pos_; }
    std::size_t size() const { return data_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw Error(ErrorKind::ChecksumMismatch, "truncated embedding file " + source_);
    }
    std::string_view data_;
    std::string source_;
    std::size_t pos_ = 0;
};

// Collects every embedding of one Item into a sidecar; nodes reference slots.
struct EmbeddingTable {
    std::string space_tag = std::string(kQaSpace);
    std::vector<const EmbeddingVector*> vectors;

    std::uint32_t add(const EmbeddingVector& v) {
        if (v.space_tag != space_tag) throw Error(ErrorKind::DimensionMismatch, "mixed embedding spaces in one Item");
        vectors.push_back(&v);
        return static_cast<std::uint32_t>(vectors.size() - 1);
    }

    std::string serialize() const {
        std::string out(kEmbeddingMagic, sizeof(kEmbeddingMagic));
        put_u32(out, static_cast<std::uint32_t>(vectors.size()));
        put_u32(out, static_cast<std::uint32_t>(space_tag.size()));
        out += space_tag;
        std::uint64_t offset = 0;
        for (const auto* v : vectors) {
            put_u64(out, offset);
            put_u32(out, static_cast<std::uint32_t>(v->values.size()));
            put_u32(out, 0);
            offset += v->values.size();
        }
        for (const auto* v : vectors) {
            for (float x : v->values) {
                std::uint32_t bits;
                std::memcpy(&bits, &x, sizeof bits);
                put_u32(out, bits);
            }
        }
        return out;
    }
};

std::vector<EmbeddingVector> parse_embeddings(std::string_view bytes, const std::string& source) {
    ByteReader r(bytes, source);
    if (r.take(sizeof(kEmbeddingMagic)) != std::string_view(kEmbeddingMagic, sizeof(kEmbeddingMagic))) {
        throw Error(ErrorKind::ChecksumMismatch, "bad magic in " + source);
    }
    const auto count = static_cast<std::size_t>(r.get(4));
    const auto space_len = static_cast<std::size_t>(r.get(4));
    const std::string space(r.take(space_len));
    std::vector<std::pair<std::uint64_t, std::uint32_t>> table;
    table.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t offset = r.get(8);
        const auto dim = static_cast<std::uint32_t>(r.get(4));
        r.get(4);
        table.emplace_back(offset, dim);
    }
    const std::size_t data_start = r.position();
    std::vector<EmbeddingVector> out;
    out.reserve(count);
    for (const auto& [offset, dim] : table) {
        if (data_start + (offset + dim) * 4 > bytes.size()) {
            throw Error(ErrorKind::ChecksumMismatch, "embedding offset out of range in " + source);
        }
        ByteReader slot(bytes.substr(data_start + offset * 4, static_cast<std::size_t>(dim) * 4), source);
        EmbeddingVector v;
        v.space_tag = space;
        v.values.resize(dim);
        for (std::uint32_t j = 0; j < dim; ++j) {
            const auto bits = static_cast<std::uint32_t>(slot.get(4));
            std::memcpy(&v.values[j], &bits, sizeof bits);
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::string node_lines(const TreeIndex& tree, EmbeddingTable& table) {
    std::string out;
    for (const auto& n : tree.nodes) {
        json j = {{"id", n.id}, {"kind", n.is_leaf() ? "leaf" : "internal"}, {"depth", n.depth}, {"children", n.children}};
        if (!n.chunk_id.empty()) j["chunk_id"] = n.chunk_id;
        if (!n.text.empty()) j["text"] = n.text;
        if (!n.summary.empty()) j["summary"] = n.summary;
        if (!n.title.empty()) j["title"] = n.title;
        if (!n.questions.empty()) j["questions"] = n.questions;
        if (!n.question_embeddings.empty()) {
            json slots = json::array();
            for (const auto& e : n.question_embeddings) slots.push_back(table.add(e));
            j["question_embeddings"] = slots;
        }
        if (n.embedding) j["embedding"] = table.add(*n.embedding);
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<TreeNode> parse_nodes(const std::string& lines, const std::vector<EmbeddingVector>& embeddings,
                                  const std::string& source) {
    std::vector<TreeNode> nodes;
    std::istringstream in(lines);
    std::string line;
    auto slot = [&](const json& s) -> const EmbeddingVector& {
        const auto idx = s.get<std::size_t>();
        if (idx >= embeddings.size()) throw Error(ErrorKind::ChecksumMismatch, "embedding slot out of range in " + source);
        return embeddings[idx];
    };
    try {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = json::parse(line);
            TreeNode n;
            n.id = j.at("id").get<NodeId>();
            n.kind = j.at("kind").get<std::string>() == "leaf" ? NodeKind::Leaf : NodeKind::Internal;
            n.depth = j.at("depth").get<int>();
            n.children = j.at("children").get<std::vector<NodeId>>();
            n.chunk_id = j.value("chunk_id", "");
            n.text = j.value("text", "");
            n.summary = j.value("summary", "");
            n.title = j.value("title", "");
            n.questions = j.value("questions", std::vector<std::string>{});
            if (j.contains("question_embeddings")) {
                for (const auto& s : j["question_embeddings"]) n.question_embeddings.push_back(slot(s));
            }
            if (j.contains("embedding")) n.embedding = slot(j["embedding"]);
            if (n.id != nodes.size()) throw Error(ErrorKind::ChecksumMismatch, "node ids out of order in " + source);
            nodes.push_back(std::move(n));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ChecksumMismatch, "malformed node table " + source + ": " + e.what());
    }
    return nodes;
}

json file_entry(const fs::path& root, const std::string& rel, const std::string& contents) {
    write_text_file(root / rel, contents);
    return {{"file", rel}, {"sha256", sha256_hex(contents)}};
}

std::string read_verified(const fs::path& root, const json& entry) {
    const auto rel = entry.at("file").get<std::string>();
    std::string contents = read_text_file(root / rel);
    if (sha256_hex(contents) != entry.at("sha256").get<std::string>()) {
        throw Error(ErrorKind::ChecksumMismatch, "checksum mismatch for " + rel);
    }
    return contents;
}

std::string manifest_digest(json manifest) {
    manifest.erase("checksum");
    return sha256_hex(manifest.dump());
}

std::string filing_dir_name(std::size_t ordinal) {
    std::string s = std::to_string(ordinal);
    return "f" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

} // namespace

void save_index(const IndexSet& index, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format_version"] = kIndexFormatVersion;
    manifest["config"] = to_json(index.config);
    manifest["lexicon"] = file_entry(dir, "lexicon.json", to_json(index.lexicon).dump() + "\n");

    json filings = json::array();
    for (std::size_t f = 0; f < index.filings.size(); ++f) {
        const auto& fi = index.filings[f];
        const std::string sub = filing_dir_name(f);
        json fj = {{"filing_id", fi.filing_id}, {"company", fi.company}, {"fiscal_year", fi.fiscal_year}, {"dir", sub}};
        fj["terms"] = file_entry(dir, sub + "/terms.json", to_json(fi.term_counts).dump() + "\n");
        json items = json::array();
        for (const auto& item : fi.items) {
            const std::string stem = sub + "/item_" + item.item_label();
            EmbeddingTable table;
            const std::string summary_lines = node_lines(item.summary, table);
            const std::string question_lines = node_lines(item.question, table);
            json ij = {{"item_label", item.item_label()}, {"topology_hash", item.summary.topology_hash}};
            ij["summary_nodes"] = file_entry(dir, stem + ".summary.jsonl", summary_lines);
            ij["question_nodes"] = file_entry(dir, stem + ".question.jsonl", question_lines);
            ij["embeddings"] = file_entry(dir, stem + ".emb", table.serialize());
            ij["summary_roots"] = item.summary.root_ids;
            ij["question_roots"] = item.question.root_ids;
            items.push_back(std::move(ij));
        }
        fj["items"] = std::move(items);
        filings.push_back(std::move(fj));
    }
    manifest["filings"] = std::move(filings);
    manifest["checksum"] = manifest_digest(manifest);
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

IndexSet load_index(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw Error(ErrorKind::IndexMissing, "no index manifest at " + manifest_path.string());
    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ChecksumMismatch, std::string("index manifest is corrupt: ") + e.what());
    }
    if (!manifest.is_object() || !manifest.contains("format_version") || !manifest["format_version"].is_number_integer()) {
        throw Error(ErrorKind::ChecksumMismatch, "index manifest lacks a format version");
    }
    const int version = manifest["format_version"].get<int>();
    if (version != kIndexFormatVersion) {
        throw Error(ErrorKind::VersionMismatch, "index format version " + std::to_string(version) +
                                                    " is not supported (expected " +
                                                    std::to_string(kIndexFormatVersion) + ")");
    }
    if (manifest.value("checksum", "") != manifest_digest(manifest)) {
        throw Error(ErrorKind::ChecksumMismatch, "index manifest checksum does not match its contents");
    }

    IndexSet index;
    try {
        index.config = index_config_from_json(manifest.at("config"));
        index.lexicon = lexicon_from_json(json::parse(read_verified(dir, manifest.at("lexicon"))));
        for (const auto& fj : manifest.at("filings")) {
            FilingIndex fi;
            fi.filing_id = fj.at("filing_id").get<std::string>();
            fi.company = fj.value("company", "");
            fi.fiscal_year = fj.value("fiscal_year", 0);
            fi.term_counts = term_table_from_json(json::parse(read_verified(dir, fj.at("terms"))));
            for (const auto& ij : fj.at("items")) {
                const std::string label = ij.at("item_label").get<std::string>();
                const std::string emb_bytes = read_verified(dir, ij.at("embeddings"));
                const auto embeddings = parse_embeddings(emb_bytes, ij.at("embeddings").at("file").get<std::string>());
                ItemIndex ii;
                for (auto [tree, key, roots, kind] :
                     {std::tuple{&ii.summary, "summary_nodes", "summary_roots", TreeKind::Summary},
                      std::tuple{&ii.question, "question_nodes", "question_roots", TreeKind::Question}}) {
                    tree->filing_id = fi.filing_id;
                    tree->item_label = label;
                    tree->kind = kind;
                    tree->nodes = parse_nodes(read_verified(dir, ij.at(key)), embeddings, ij.at(key).at("file"));
                    tree->root_ids = ij.at(roots).get<std::vector<NodeId>>();
                    tree->topology_hash = compute_topology_hash(*tree);
                    if (tree->topology_hash != ij.at("topology_hash").get<std::string>()) {
                        throw Error(ErrorKind::ChecksumMismatch, "topology hash mismatch for Item " + label + " of " +
                                                                     fi.filing_id);
                    }
                }
                fi.items.push_back(std::move(ii));
            }
            index.filings.push_back(std::move(fi));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ChecksumMismatch, std::string("index contents are corrupt: ") + e.what());
    }
    return index;
}

} // namespace sectree
