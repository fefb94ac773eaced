#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sectree {

inline constexpr std::string_view kLexiconSpace = "lexicon";
inline constexpr std::string_view kQaSpace = "qa";

struct EmbeddingVector {
    std::vector<float> values;
    std::string space_tag;

    std::size_t dimension() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

// Cosine similarity. Throws DimensionMismatch when the vectors come from
// different spaces or have different lengths.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct ProviderConfig {
    enum class Mode { Stub, Remote };

    Mode mode = Mode::Stub;
    std::string endpoint; // remote only, e.g. "http://127.0.0.1:8080/v1"
    std::string model_name = "stub";
    std::string api_key;
    std::chrono::milliseconds timeout{30000};
    int max_concurrency = 4;
    int retries = 2;
    std::size_t dimension = 768;
    std::size_t summary_words = 200; // stub extractive summary budget

    void validate() const;
};

struct PromptTemplates {
    std::string summarize_template;
    std::string title_template;
    std::string question_template; // must contain {num_questions}

    static PromptTemplates defaults();
    // Reads summarize.txt, title.txt and questions.txt from `dir`; missing
    // files fall back to the defaults.
    static PromptTemplates load(const std::filesystem::path& dir);

    void validate() const;
    std::string question_prompt(std::size_t num_questions) const;
};

// Every external-model capability used by indexing, retrieval and evaluation.
// Implementations must be safe to call concurrently.
class ModelProvider {
public:
    virtual ~ModelProvider() = default;

    // One unit-norm vector per input text.
    virtual std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                                     std::string_view space_tag) const = 0;
    virtual std::string summarize(std::string_view text) const = 0;
    virtual std::string generate_title(std::string_view summary) const = 0;
    virtual std::vector<std::string> generate_questions(std::string_view summary, std::size_t n) const = 0;
    virtual double score_pair(std::string_view query, std::string_view passage) const = 0;
    virtual std::vector<double> score_pairs(std::string_view query, std::span<const std::string> passages) const;
    virtual double judge_relevancy(std::string_view query, std::span<const std::string> passages) const = 0;
    virtual std::string read_answer(std::string_view query, std::span<const std::string> passages) const = 0;

    EmbeddingVector embed_text(const std::string& text, std::string_view space_tag) const;
};

// Deterministic offline implementations of every capability.
class StubProvider final : public ModelProvider {
public:
    explicit StubProvider(std::size_t dimension = 768, std::size_t summary_words = 200);

    std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                             std::string_view space_tag) const override;
    // First sentence of each paragraph, up to the word budget.
    std::string summarize(std::string_view text) const override;
    std::string generate_title(std::string_view summary) const override;
    // "What is stated about <token>?" over the summary's most frequent content tokens.
    std::vector<std::string> generate_questions(std::string_view summary, std::size_t n) const override;
    // Cosine over binary bags of content tokens.
    double score_pair(std::string_view query, std::string_view passage) const override;
    double judge_relevancy(std::string_view query, std::span<const std::string> passages) const override;
    // First number-bearing sentence sharing a content token with the query,
    // scanning passages in rank order; "unknown" when none qualifies.
    std::string read_answer(std::string_view query, std::span<const std::string> passages) const override;

private:
    std::size_t dimension_;
    std::size_t summary_words_;
};

// JSON-over-HTTP client: POST <endpoint>/<capability> with {inputs, params},
// expecting {outputs}. Non-200 responses and transport failures raise
// ProviderUnavailable once retries are exhausted.
class RemoteProvider final : public ModelProvider {
public:
    RemoteProvider(ProviderConfig config, PromptTemplates templates);
    ~RemoteProvider() override;

    std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                             std::string_view space_tag) const override;
    std::string summarize(std::string_view text) const override;
    std::string generate_title(std::string_view summary) const override;
    std::vector<std::string> generate_questions(std::string_view summary, std::size_t n) const override;
    double score_pair(std::string_view query, std::string_view passage) const override;
    std::vector<double> score_pairs(std::string_view query, std::span<const std::string> passages) const override;
    double judge_relevancy(std::string_view query, std::span<const std::string> passages) const override;
    std::string read_answer(std::string_view query, std::span<const std::string> passages) const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::shared_ptr<ModelProvider> make_provider(const ProviderConfig& config,
                                             const PromptTemplates& templates = PromptTemplates::defaults());

// Capability -> provider routing. Any member may point at the same object.
struct ProviderSet {
    std::shared_ptr<ModelProvider> embedder;
    std::shared_ptr<ModelProvider> summarizer;
    std::shared_ptr<ModelProvider> question_generator;
    std::shared_ptr<ModelProvider> cross_encoder;
    std::shared_ptr<ModelProvider> judge;
    std::shared_ptr<ModelProvider> reader;

    static ProviderSet all(std::shared_ptr<ModelProvider> provider);
    static ProviderSet stub(std::size_t dimension = 768);
};

} // namespace sectree
