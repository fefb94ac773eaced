#include "sectree/providers.hpp"

#include <cctype>
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "sectree/error.hpp"
#include "sectree/hash.hpp"
#include "sectree/ingest.hpp"
#include "sectree/text.hpp"

namespace sectree {

using nlohmann::json;

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.space_tag != b.space_tag) {
        throw Error(ErrorKind::DimensionMismatch,
                    "cannot compare embeddings from spaces '" + a.space_tag + "' and '" + b.space_tag + "'");
    }
    if (a.values.size() != b.values.size()) {
        throw Error(ErrorKind::DimensionMismatch, "embedding dimensions differ: " + std::to_string(a.values.size()) +
                                                      " vs " + std::to_string(b.values.size()));
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += static_cast<double>(a.values[i]) * b.values[i];
        na += static_cast<double>(a.values[i]) * a.values[i];
        nb += static_cast<double>(b.values[i]) * b.values[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
}

void ProviderConfig::validate() const {
    if (mode == Mode::Remote && endpoint.empty()) {
        throw Error(ErrorKind::InvalidConfig, "remote provider requires an endpoint");
    }
    if (max_concurrency < 1) throw Error(ErrorKind::InvalidConfig, "max_concurrency must be >= 1");
    if (retries < 0) throw Error(ErrorKind::InvalidConfig, "retries must be >= 0");
    if (dimension == 0) throw Error(ErrorKind::InvalidConfig, "embedding dimension must be positive");
}

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.summarize_template =
        "The content provided below is a subset of a 10-K filing. The 10-K report is a comprehensive document "
        "outlining the company's financial performance, including revenue, expenses, and profits. Your task is to "
        "generate a detailed summary using only the provided content, without embellishment. Summarize main topics, "
        "key insights (5–7), and unusual observations (1–2). Use clear paragraphs and Markdown headings.";
    t.title_template = "Generate a title for a subsection of a 10-K report based on the provided summary.";
    t.question_template = "Suppose you are a financial analyst. Generate {num_questions} questions based on the "
                          "provided summary, focusing on financial aspects and factual details.";
    return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t = defaults();
    auto maybe = [&](const char* name, std::string& slot) {
        auto p = dir / name;
        if (std::filesystem::exists(p)) slot = trim(read_text_file(p));
    };
    maybe("summarize.txt", t.summarize_template);
    maybe("title.txt", t.title_template);
    maybe("questions.txt", t.question_template);
    t.validate();
    return t;
}

void PromptTemplates::validate() const {
    if (summarize_template.empty() || title_template.empty()) {
        throw Error(ErrorKind::InvalidConfig, "prompt templates must be non-empty");
    }
    if (question_template.find("{num_questions}") == std::string::npos) {
        throw Error(ErrorKind::InvalidConfig, "question template lacks the {num_questions} placeholder");
    }
}

std::string PromptTemplates::question_prompt(std::size_t num_questions) const {
    std::string out = question_template;
    const std::string key = "{num_questions}";
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos)) {
        out.replace(pos, key.size(), std::to_string(num_questions));
    }
    return out;
}

std::vector<double> ModelProvider::score_pairs(std::string_view query, std::span<const std::string> passages) const {
    std::vector<double> out;
    out.reserve(passages.size());
    for (const auto& p : passages) out.push_back(score_pair(query, p));
    return out;
}

EmbeddingVector ModelProvider::embed_text(const std::string& text, std::string_view space_tag) const {
    return embed_texts(std::span<const std::string>(&text, 1), space_tag).front();
}

namespace {

void normalize(std::vector<float>& v) {
    double norm = 0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm == 0) return;
    for (auto& x : v) x = static_cast<float>(x / norm);
}

std::set<std::string> token_set(std::string_view text) {
    auto toks = content_tokens(text);
    return {toks.begin(), toks.end()};
}

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t n = 0;
    for (const auto& t : a) n += b.count(t);
    return n;
}

} // namespace

// ---------------------------------------------------------------- stub

StubProvider::StubProvider(std::size_t dimension, std::size_t summary_words)
    : dimension_(dimension), summary_words_(summary_words) {
    if (dimension_ == 0) throw Error(ErrorKind::InvalidConfig, "embedding dimension must be positive");
}

std::vector<EmbeddingVector> StubProvider::embed_texts(std::span<const std::string> texts,
                                                       std::string_view space_tag) const {
    const std::uint64_t space_seed = fnv1a64(space_tag);
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (trim(text).empty()) throw Error(ErrorKind::InvalidInput, "cannot embed an empty string");
        EmbeddingVector e;
        e.space_tag = std::string(space_tag);
        e.values.assign(dimension_, 0.0f);
        auto toks = content_tokens(text);
        if (toks.empty()) toks.push_back(trim(text));
        for (const auto& t : toks) {
            const std::uint64_t h = fnv1a64(t, space_seed);
            const std::size_t bucket = static_cast<std::size_t>((h >> 1) % dimension_);
            e.values[bucket] += (h & 1U) ? 1.0f : -1.0f;
        }
        normalize(e.values);
        if (std::all_of(e.values.begin(), e.values.end(), [](float x) { return x == 0.0f; })) {
            // Every token cancelled out; fall back to a single deterministic axis.
            e.values[static_cast<std::size_t>(fnv1a64(text, space_seed) % dimension_)] = 1.0f;
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string StubProvider::summarize(std::string_view text) const {
    if (trim(text).empty()) throw Error(ErrorKind::InvalidInput, "cannot summarize empty text");
    std::string summary;
    std::size_t words = 0;
    for (const auto& para : split_paragraphs(text)) {
        auto sentences = split_sentences(para);
        if (sentences.empty()) continue;
        std::string first = sentences.front();
        std::replace(first.begin(), first.end(), '\n', ' ');
        const std::size_t n = count_words(first);
        if (words + n > summary_words_) {
            if (words < summary_words_) {
                if (!summary.empty()) summary.push_back(' ');
                summary += truncate_words(first, summary_words_ - words);
            }
            break;
        }
        if (!summary.empty()) summary.push_back(' ');
        summary += first;
        words += n;
    }
    if (summary.empty()) summary = truncate_words(text, summary_words_);
    return summary;
}

std::string StubProvider::generate_title(std::string_view summary) const {
    if (trim(summary).empty()) throw Error(ErrorKind::InvalidInput, "cannot title an empty summary");
    auto sentences = split_sentences(summary);
    return truncate_words(sentences.empty() ? summary : std::string_view(sentences.front()), 8);
}

std::vector<std::string> StubProvider::generate_questions(std::string_view summary, std::size_t n) const {
    if (n == 0) throw Error(ErrorKind::InvalidInput, "number of questions must be >= 1");
    if (trim(summary).empty()) throw Error(ErrorKind::InvalidInput, "cannot generate questions from empty text");
    auto toks = content_tokens(summary);
    std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> stats; // token -> (count, first index)
    for (std::size_t i = 0; i < toks.size(); ++i) {
        auto [it, inserted] = stats.try_emplace(toks[i], 0, i);
        ++it->second.first;
    }
    std::vector<std::string> ranked;
    ranked.reserve(stats.size());
    for (const auto& [tok, _] : stats) ranked.push_back(tok);
    std::sort(ranked.begin(), ranked.end(), [&](const std::string& a, const std::string& b) {
        const auto& sa = stats.at(a);
        const auto& sb = stats.at(b);
        if (sa.first != sb.first) return sa.first > sb.first;
        return sa.second < sb.second;
    });
    if (ranked.empty()) ranked.push_back(trim(summary));

    static constexpr std::string_view kTemplates[] = {
        "What is stated about ",
        "What figures are reported for ",
        "How does the filing describe ",
    };
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tok = ranked[i % ranked.size()];
        const auto tmpl = kTemplates[(i / ranked.size()) % std::size(kTemplates)];
        out.push_back(std::string(tmpl) + tok + "?");
    }
    return out;
}

double StubProvider::score_pair(std::string_view query, std::string_view passage) const {
    const auto q = token_set(query);
    const auto p = token_set(passage);
    if (q.empty() || p.empty()) return 0.0;
    return static_cast<double>(intersection_size(q, p)) /
           std::sqrt(static_cast<double>(q.size()) * static_cast<double>(p.size()));
}

double StubProvider::judge_relevancy(std::string_view query, std::span<const std::string> passages) const {
    if (passages.empty()) throw Error(ErrorKind::InvalidInput, "relevancy needs at least one passage");
    double sum = 0;
    for (const auto& p : passages) sum += std::clamp(score_pair(query, p), 0.0, 1.0);
    return sum / static_cast<double>(passages.size());
}

namespace {

// A standalone figure, not a digit inside a name such as "CET1".
bool has_number_token(std::string_view sentence) {
    for (const auto& t : tokenize(sentence, TokenizerRule::Word)) {
        if (std::isdigit(static_cast<unsigned char>(t.front()))) return true;
    }
    return false;
}

} // namespace

std::string StubProvider::read_answer(std::string_view query, std::span<const std::string> passages) const {
    const auto q = token_set(query);
    for (const auto& passage : passages) {
        for (const auto& para : split_paragraphs(passage)) {
            for (const auto& sentence : split_sentences(para)) {
                if (!has_number_token(sentence)) continue;
                if (intersection_size(q, token_set(sentence)) == 0) continue;
                std::string s = sentence;
                std::replace(s.begin(), s.end(), '\n', ' ');
                return s;
            }
        }
    }
    return "unknown";
}

// ---------------------------------------------------------------- remote

namespace {

// Caps the number of in-flight requests.
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int slots) : free_(slots) {}
    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int free_;
};

} // namespace

struct RemoteProvider::Impl {
    ProviderConfig config;
    PromptTemplates templates;
    std::string host; // scheme://host[:port]
    std::string base_path;
    mutable ConcurrencyLimiter limiter;

    Impl(ProviderConfig cfg, PromptTemplates t)
        : config(std::move(cfg)), templates(std::move(t)), limiter(config.max_concurrency) {
        const std::string& ep = config.endpoint;
        const auto scheme_end = ep.find("://");
        if (scheme_end == std::string::npos || ep.compare(0, scheme_end, "http") != 0) {
            throw Error(ErrorKind::InvalidConfig, "remote endpoint must be an http:// URL: " + ep);
        }
        const auto path_start = ep.find('/', scheme_end + 3);
        host = ep.substr(0, path_start);
        base_path = path_start == std::string::npos ? std::string{} : ep.substr(path_start);
        while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();
    }

    json call(std::string_view capability, json inputs, json params) const {
        json body = {{"inputs", std::move(inputs)}, {"params", std::move(params)}};
        body["params"]["model"] = config.model_name;
        const std::string payload = body.dump();
        const std::string path = base_path + "/" + std::string(capability);

        limiter.acquire();
        struct Release {
            ConcurrencyLimiter* l;
            ~Release() { l->release(); }
        } release{&limiter};

        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= config.retries; ++attempt) {
            httplib::Client client(host);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
            const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());
            httplib::Headers headers;
            if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
            auto res = client.Post(path, headers, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_error = "HTTP " + std::to_string(res->status);
                if (res->status >= 400 && res->status < 500) break; // client errors are not retried
                continue;
            }
            try {
                auto reply = json::parse(res->body);
                return reply.at("outputs");
            } catch (const json::exception& e) {
                last_error = std::string("malformed response: ") + e.what();
                break;
            }
        }
        throw Error(ErrorKind::ProviderUnavailable,
                    std::string(capability) + " at " + host + path + " failed: " + last_error);
    }

    json passages_input(std::string_view query, std::span<const std::string> passages) const {
        return json::array({{{"query", query}, {"passages", std::vector<std::string>(passages.begin(), passages.end())}}});
    }

    template <typename T>
    T first_output(const json& outputs, std::string_view capability) const {
        try {
            return outputs.at(0).get<T>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ProviderUnavailable, std::string(capability) + " returned no usable output");
        }
    }
};

RemoteProvider::RemoteProvider(ProviderConfig config, PromptTemplates templates) {
    config.validate();
    templates.validate();
    impl_ = std::make_unique<Impl>(std::move(config), std::move(templates));
}

RemoteProvider::~RemoteProvider() = default;

std::vector<EmbeddingVector> RemoteProvider::embed_texts(std::span<const std::string> texts,
                                                         std::string_view space_tag) const {
    json outputs = impl_->call("embed", std::vector<std::string>(texts.begin(), texts.end()),
                               {{"space_tag", space_tag}, {"dimension", impl_->config.dimension}});
    if (!outputs.is_array() || outputs.size() != texts.size()) {
        throw Error(ErrorKind::ProviderUnavailable, "embed returned the wrong number of vectors");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& row : outputs) {
        EmbeddingVector e;
        e.space_tag = std::string(space_tag);
        e.values = row.get<std::vector<float>>();
        if (e.values.size() != impl_->config.dimension) {
            throw Error(ErrorKind::DimensionMismatch, "remote embedding has dimension " +
                                                          std::to_string(e.values.size()) + ", expected " +
                                                          std::to_string(impl_->config.dimension));
        }
        for (float x : e.values) {
            if (!std::isfinite(x)) throw Error(ErrorKind::ProviderUnavailable, "remote embedding is not finite");
        }
        normalize(e.values);
        out.push_back(std::move(e));
    }
    return out;
}

std::string RemoteProvider::summarize(std::string_view text) const {
    if (trim(text).empty()) throw Error(ErrorKind::InvalidInput, "cannot summarize empty text");
    auto out = impl_->call("summarize", json::array({text}), {{"prompt", impl_->templates.summarize_template}});
    return impl_->first_output<std::string>(out, "summarize");
}

std::string RemoteProvider::generate_title(std::string_view summary) const {
    auto out = impl_->call("title", json::array({summary}), {{"prompt", impl_->templates.title_template}});
    return impl_->first_output<std::string>(out, "title");
}

std::vector<std::string> RemoteProvider::generate_questions(std::string_view summary, std::size_t n) const {
    if (n == 0) throw Error(ErrorKind::InvalidInput, "number of questions must be >= 1");
    auto out = impl_->call("generate_questions", json::array({summary}),
                           {{"prompt", impl_->templates.question_prompt(n)}, {"num_questions", n}});
    std::vector<std::string> qs;
    try {
        qs = out.get<std::vector<std::string>>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::ProviderUnavailable, "generate_questions returned non-string outputs");
    }
    if (qs.size() < n) {
        throw Error(ErrorKind::ProviderUnavailable,
                    "generate_questions returned " + std::to_string(qs.size()) + " of " + std::to_string(n));
    }
    qs.resize(n);
    return qs;
}

double RemoteProvider::score_pair(std::string_view query, std::string_view passage) const {
    std::string p(passage);
    return score_pairs(query, std::span<const std::string>(&p, 1)).front();
}

std::vector<double> RemoteProvider::score_pairs(std::string_view query, std::span<const std::string> passages) const {
    json inputs = json::array();
    for (const auto& p : passages) inputs.push_back({{"query", query}, {"passage", p}});
    auto out = impl_->call("score_pair", std::move(inputs), json::object());
    if (!out.is_array() || out.size() != passages.size()) {
        throw Error(ErrorKind::ProviderUnavailable, "score_pair returned the wrong number of scores");
    }
    return out.get<std::vector<double>>();
}

double RemoteProvider::judge_relevancy(std::string_view query, std::span<const std::string> passages) const {
    if (passages.empty()) throw Error(ErrorKind::InvalidInput, "relevancy needs at least one passage");
    auto out = impl_->call("judge_relevancy", impl_->passages_input(query, passages), json::object());
    return std::clamp(impl_->first_output<double>(out, "judge_relevancy"), 0.0, 1.0);
}

std::string RemoteProvider::read_answer(std::string_view query, std::span<const std::string> passages) const {
    auto out = impl_->call("read_answer", impl_->passages_input(query, passages), json::object());
    return impl_->first_output<std::string>(out, "read_answer");
}

std::shared_ptr<ModelProvider> make_provider(const ProviderConfig& config, const PromptTemplates& templates) {
    config.validate();
    if (config.mode == ProviderConfig::Mode::Remote) return std::make_shared<RemoteProvider>(config, templates);
    return std::make_shared<StubProvider>(config.dimension, config.summary_words);
}

ProviderSet ProviderSet::all(std::shared_ptr<ModelProvider> provider) {
    return {provider, provider, provider, provider, provider, provider};
}

ProviderSet ProviderSet::stub(std::size_t dimension) { return all(std::make_shared<StubProvider>(dimension)); }

} // namespace sectree
