#include "sectree/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sectree/error.hpp"

namespace sectree {

using nlohmann::json;

namespace {

struct Heading {
    std::string label;
    std::string title;
    std::size_t line_begin;
    std::size_t body_begin;
};

std::string canonical_label(std::string raw) {
    for (auto& c : raw) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
    }
    std::size_t nz = 0;
    while (nz + 1 < raw.size() && raw[nz] == '0' && raw[nz + 1] >= '0' && raw[nz + 1] <= '9') ++nz;
    return raw.substr(nz);
}

std::string clean_title(std::string_view raw) {
    std::string t = trim(raw);
    auto strip = [&](std::string_view marker) {
        while (t.size() >= marker.size() && t.compare(t.size() - marker.size(), marker.size(), marker) == 0) {
            t.erase(t.size() - marker.size());
            t = trim(t);
        }
        while (t.size() >= marker.size() && t.compare(0, marker.size(), marker) == 0) {
            t.erase(0, marker.size());
            t = trim(t);
        }
    };
    strip("**");
    strip("__");
    return t;
}

CharSpan trimmed_span(std::string_view source, std::size_t begin, std::size_t end) {
    auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (begin < end && space(source[begin])) ++begin;
    while (end > begin && space(source[end - 1])) --end;
    return {begin, end};
}

} // namespace

const ItemSection* Filing::find_item(std::string_view label) const {
    for (const auto& item : items) {
        if (item.item_label == label) return &item;
    }
    return nullptr;
}

void ChunkingConfig::validate() const {
    if (chunk_tokens == 0) throw Error(ErrorKind::InvalidConfig, "chunk_tokens must be positive");
    if (overlap_tokens >= chunk_tokens) throw Error(ErrorKind::InvalidConfig, "overlap_tokens must be < chunk_tokens");
}

std::string make_chunk_id(std::string_view filing_id, std::string_view item_label, std::size_t ordinal) {
    std::string id;
    id.reserve(filing_id.size() + item_label.size() + 8);
    id.append(filing_id).append("/").append(item_label).append("/").append(std::to_string(ordinal));
    return id;
}

Filing parse_filing(std::string_view source, std::string filing_id, const ParseOptions& options) {
    const std::regex re(options.heading_pattern, std::regex::ECMAScript | std::regex::icase);

    std::vector<Heading> headings;
    std::size_t pos = 0;
    while (pos < source.size()) {
        std::size_t eol = source.find('\n', pos);
        std::size_t line_end = eol == std::string_view::npos ? source.size() : eol;
        std::string line(source.substr(pos, line_end - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (std::regex_match(line, m, re) && m.size() >= 2 && m[1].matched) {
            headings.push_back({canonical_label(m[1].str()), m.size() >= 3 ? clean_title(m[2].str()) : std::string{},
                                pos, eol == std::string_view::npos ? source.size() : eol + 1});
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    if (headings.empty()) throw Error(ErrorKind::NoItemsFound, "no Item headings in filing '" + filing_id + "'");

    Filing filing;
    filing.filing_id = std::move(filing_id);
    std::set<std::string> seen;
    for (std::size_t h = 0; h < headings.size(); ++h) {
        std::size_t end = h + 1 < headings.size() ? headings[h + 1].line_begin : source.size();
        CharSpan span = trimmed_span(source, headings[h].body_begin, end);
        if (span.begin == span.end) {
            filing.warnings.push_back("Item " + headings[h].label + " has an empty body; skipped");
            continue;
        }
        if (!seen.insert(headings[h].label).second) {
            if (options.strict) {
                throw Error(ErrorKind::DuplicateItem,
                            "Item " + headings[h].label + " appears twice in filing '" + filing.filing_id + "'");
            }
            filing.warnings.push_back("duplicate Item " + headings[h].label + " ignored; first occurrence kept");
            continue;
        }
        ItemSection item;
        item.item_label = headings[h].label;
        item.title = headings[h].title;
        item.body = std::string(source.substr(span.begin, span.end - span.begin));
        item.char_span = span;
        filing.items.push_back(std::move(item));
    }
    if (filing.items.empty()) {
        throw Error(ErrorKind::NoItemsFound, "every Item heading in '" + filing.filing_id + "' has an empty body");
    }
    return filing;
}

std::string render_filing(const Filing& filing) {
    std::string out;
    for (const auto& item : filing.items) {
        out += "## Item " + item.item_label + ".";
        if (!item.title.empty()) out += " " + item.title;
        out += "\n\n";
        out += item.body;
        out += "\n\n";
    }
    return out;
}

std::vector<Chunk> chunk_item(std::string_view filing_id, const ItemSection& section, const ChunkingConfig& cfg) {
    cfg.validate();
    const auto tokens = tokenize_spans(section.body, cfg.tokenizer);
    std::vector<Chunk> chunks;
    const std::size_t n = tokens.size();
    const std::size_t stride = cfg.chunk_tokens - cfg.overlap_tokens;
    for (std::size_t start = 0; start < n; start += stride) {
        const std::size_t end = std::min(start + cfg.chunk_tokens, n);
        Chunk c;
        c.chunk_id = make_chunk_id(filing_id, section.item_label, chunks.size());
        c.filing_id = std::string(filing_id);
        c.item_label = section.item_label;
        c.token_span = {start, end};
        c.token_count = end - start;
        const std::size_t cb = tokens[start].begin;
        c.text = section.body.substr(cb, tokens[end - 1].end - cb);
        chunks.push_back(std::move(c));
        if (end == n) break;
    }
    return chunks;
}

std::vector<Chunk> chunk_filing(const Filing& filing, const ChunkingConfig& cfg) {
    std::vector<Chunk> out;
    for (const auto& item : filing.items) {
        auto chunks = chunk_item(filing.filing_id, item, cfg);
        std::move(chunks.begin(), chunks.end(), std::back_inserter(out));
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

std::vector<Filing> load_corpus(const std::filesystem::path& dir, const std::filesystem::path& manifest,
                                const ParseOptions& options) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error(ErrorKind::IoError, "corpus directory not found: " + dir.string());

    std::map<std::string, ManifestEntry> entries;
    if (!manifest.empty()) {
        json doc;
        try {
            doc = json::parse(read_text_file(manifest));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::IoError, "malformed corpus manifest " + manifest.string() + ": " + e.what());
        }
        for (const auto& [id, v] : doc.items()) {
            ManifestEntry e;
            e.filing_id = id;
            e.company = v.value("company", "");
            e.fiscal_year = v.value("year", 0);
            e.path = v.value("path", id + ".md");
            if (e.path.is_relative()) e.path = dir / e.path;
            entries.emplace(id, std::move(e));
        }
    } else {
        for (const auto& de : fs::directory_iterator(dir)) {
            if (!de.is_regular_file() || de.path().extension() != ".md") continue;
            ManifestEntry e;
            e.filing_id = de.path().stem().string();
            e.path = de.path();
            entries.emplace(e.filing_id, std::move(e));
        }
    }
    if (entries.empty()) throw Error(ErrorKind::EmptyCorpus, "no filings found in " + dir.string());

    std::vector<Filing> filings;
    for (auto& [id, e] : entries) {
        Filing f = parse_filing(read_text_file(e.path), id, options);
        f.company = e.company;
        f.fiscal_year = e.fiscal_year;
        f.source_path = e.path.string();
        filings.push_back(std::move(f));
    }
    return filings;
}

std::vector<ChunkedFiling> chunk_corpus(std::vector<Filing> filings, const ChunkingConfig& cfg) {
    std::vector<ChunkedFiling> out;
    out.reserve(filings.size());
    for (auto& f : filings) {
        auto chunks = chunk_filing(f, cfg);
        out.push_back({std::move(f), std::move(chunks)});
    }
    return out;
}

void write_chunks_jsonl(std::ostream& out, const std::vector<ChunkedFiling>& corpus) {
    for (const auto& cf : corpus) {
        for (const auto& c : cf.chunks) {
            json j = {{"chunk_id", c.chunk_id},
                      {"filing_id", c.filing_id},
                      {"item_label", c.item_label},
                      {"token_span", {c.token_span.begin, c.token_span.end}},
                      {"token_count", c.token_count},
                      {"text", c.text}};
            out << j.dump() << '\n';
        }
    }
}

std::vector<Chunk> read_chunks_jsonl(std::istream& in) {
    std::vector<Chunk> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            Chunk c;
            c.chunk_id = j.at("chunk_id").get<std::string>();
            c.filing_id = j.value("filing_id", "");
            c.item_label = j.at("item_label").get<std::string>();
            c.token_span = {j.at("token_span").at(0).get<std::size_t>(), j.at("token_span").at(1).get<std::size_t>()};
            c.token_count = j.value("token_count", c.token_span.end - c.token_span.begin);
            c.text = j.at("text").get<std::string>();
            if (c.filing_id.empty()) c.filing_id = c.chunk_id.substr(0, c.chunk_id.find('/'));
            out.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::IoError, "bad chunk record on line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace sectree
