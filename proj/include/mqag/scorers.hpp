#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mqag/http.hpp"
#include "mqag/kb.hpp"
#include "mqag/svo.hpp"

// Provider interfaces for the learned components of the pipeline. Each has a
// deterministic offline baseline and an HTTP adapter; all are shareable across
// threads.
namespace mqag::scorers {

struct ProviderConfig {
    enum class Kind { Offline, Http };

    Kind kind = Kind::Offline;
    std::optional<std::string> endpoint;
    std::chrono::milliseconds timeout{10'000};
    std::optional<std::filesystem::path> cache_path;
    http::RetryPolicy retry{};

    // Throws Error(InvalidInput) unless endpoint is set iff kind == Http.
    void validate() const;
};

struct Embedding {
    std::vector<double> values;
    double norm = 0.0;
};

double cosine(const Embedding& a, const Embedding& b);

inline constexpr std::size_t kOfflineEmbeddingDim = 256;

class SentenceEncoder {
public:
    virtual ~SentenceEncoder() = default;
    virtual Embedding embed(const std::string& sentence) const = 0;
};

/// Hashed bag of words: lowercase tokens, FNV-1a 32-bit over the token bytes
/// modulo 256, counts, L2-normalized. The empty sentence maps to the zero
/// vector.
class HashedBagOfWords final : public SentenceEncoder {
public:
    Embedding embed(const std::string& sentence) const override;
    static std::size_t bucket(const std::string& token);
};

struct ImageRef {
    std::string image_id;
    std::vector<std::string> object_tags;
};

class ImageTextScorer {
public:
    virtual ~ImageTextScorer() = default;
    virtual double score(const ImageRef& image, const std::string& sentence) const = 0;
};

/// Jaccard overlap between the object tags and the sentence's content tokens.
class TagJaccard final : public ImageTextScorer {
public:
    double score(const ImageRef& image, const std::string& sentence) const override;
};

class MaskFiller {
public:
    virtual ~MaskFiller() = default;
    virtual std::vector<std::string> fill(const std::string& prompt, std::size_t n) const = 0;
};

/// Fills the mask with knowledge-base neighbors of the prompt's head noun over
/// the distractor relation pool.
class KbMaskFiller final : public MaskFiller {
public:
    explicit KbMaskFiller(const kb::KnowledgeStore* store) : store_(store) {}
    std::vector<std::string> fill(const std::string& prompt, std::size_t n) const override;

private:
    const kb::KnowledgeStore* store_;
};

class ConceptRealizer {
public:
    virtual ~ConceptRealizer() = default;
    virtual std::vector<std::string> realize(const std::vector<std::string>& concepts,
                                             std::size_t n) const = 0;
};

/// "The <c1> <c2> the <c3>." and close variants.
class RuleConceptRealizer final : public ConceptRealizer {
public:
    std::vector<std::string> realize(const std::vector<std::string>& concepts,
                                     std::size_t n) const override;
};

struct GrammarResult {
    bool ok = false;
    std::string corrected;
};

class GrammarChecker {
public:
    virtual ~GrammarChecker() = default;
    virtual GrammarResult check(const std::string& sentence) const = 0;
};

/// Initial capital, single terminal mark, a verb from the lexicon, balanced
/// double quotes. Only casing and punctuation are corrected.
class RuleGrammarChecker final : public GrammarChecker {
public:
    GrammarResult check(const std::string& sentence) const override;
};

// --- HTTP adapters --------------------------------------------------------

class HttpAdapter {
protected:
    // A null cache with cfg.cache_path set opens a private cache on that file.
    HttpAdapter(std::string provider, const ProviderConfig& cfg,
                std::shared_ptr<http::ResponseCache> cache);
    nlohmann::json call(const nlohmann::json& request) const;

private:
    std::string provider_;
    http::JsonClient client_;
    std::shared_ptr<http::ResponseCache> cache_;
};

// POST {text} -> {embedding: [...]}
class HttpSentenceEncoder final : public SentenceEncoder, HttpAdapter {
public:
    explicit HttpSentenceEncoder(const ProviderConfig& cfg, std::shared_ptr<http::ResponseCache> cache = nullptr)
        : HttpAdapter("similarity", cfg, std::move(cache)) {}
    Embedding embed(const std::string& sentence) const override;
};

// POST {image_id, text} -> {score}
class HttpImageTextScorer final : public ImageTextScorer, HttpAdapter {
public:
    explicit HttpImageTextScorer(const ProviderConfig& cfg, std::shared_ptr<http::ResponseCache> cache = nullptr)
        : HttpAdapter("image_text", cfg, std::move(cache)) {}
    double score(const ImageRef& image, const std::string& sentence) const override;
};

// POST {prompt, n} -> {fills: [...]}
class HttpMaskFiller final : public MaskFiller, HttpAdapter {
public:
    explicit HttpMaskFiller(const ProviderConfig& cfg, std::shared_ptr<http::ResponseCache> cache = nullptr)
        : HttpAdapter("mask_fill", cfg, std::move(cache)) {}
    std::vector<std::string> fill(const std::string& prompt, std::size_t n) const override;
};

// POST {concepts, n} -> {sentences: [...]}
class HttpConceptRealizer final : public ConceptRealizer, HttpAdapter {
public:
    explicit HttpConceptRealizer(const ProviderConfig& cfg, std::shared_ptr<http::ResponseCache> cache = nullptr)
        : HttpAdapter("realizer", cfg, std::move(cache)) {}
    std::vector<std::string> realize(const std::vector<std::string>& concepts,
                                     std::size_t n) const override;
};

// POST {text} -> {ok, corrected}
class HttpGrammarChecker final : public GrammarChecker, HttpAdapter {
public:
    explicit HttpGrammarChecker(const ProviderConfig& cfg, std::shared_ptr<http::ResponseCache> cache = nullptr)
        : HttpAdapter("grammar", cfg, std::move(cache)) {}
    GrammarResult check(const std::string& sentence) const override;
};

// POST {text} -> {triplets: [{s, p, o}]}
class HttpStatementParser final : public svo::StatementParser, HttpAdapter {
public:
    explicit HttpStatementParser(const ProviderConfig& cfg, std::shared_ptr<http::ResponseCache> cache = nullptr)
        : HttpAdapter("parser", cfg, std::move(cache)) {}
    std::vector<Triplet> parse(const Statement& s) const override;
    std::string name() const override { return "http"; }
};

// --- bundle ---------------------------------------------------------------

struct ProvidersConfig {
    // keys: similarity, image_text, mask_fill, realizer, grammar, parser
    std::map<std::string, ProviderConfig> providers;

    const ProviderConfig& get(const std::string& name) const;

    // MQAG_<NAME>_ENDPOINT switches the named provider to HTTP at that URL.
    void apply_env_overrides();
};

inline constexpr const char* kProviderNames[] = {"similarity", "image_text", "mask_fill",
                                                 "realizer", "grammar", "parser"};

struct Providers {
    std::shared_ptr<const SentenceEncoder> encoder;
    std::shared_ptr<const ImageTextScorer> image_text;
    std::shared_ptr<const MaskFiller> mask_filler;
    std::shared_ptr<const ConceptRealizer> realizer;
    std::shared_ptr<const GrammarChecker> grammar;
    std::shared_ptr<const svo::StatementParser> parser;
    const kb::KnowledgeStore* store = nullptr;  // not owned; may be null

    static Providers offline(const kb::KnowledgeStore* store);
    static Providers from_config(const ProvidersConfig& cfg, const kb::KnowledgeStore* store);
};

// --- operations -----------------------------------------------------------

double sentence_similarity(const Providers& p, const std::string& a, const std::string& b);

double image_text_score(const Providers& p, const ImageRef& image, const std::string& sentence);

inline constexpr std::string_view kMaskToken = "[mask]";

// Throws Error(InvalidPrompt) when the prompt lacks "[mask]".
std::vector<std::string> mask_fill(const Providers& p, const std::string& prompt, std::size_t n);

// Sentences that do not mention every input concept are dropped with a warning.
std::vector<std::string> realize_from_concepts(const Providers& p,
                                               const std::vector<std::string>& concepts,
                                               std::size_t n);

GrammarResult grammar_ok(const Providers& p, const std::string& sentence);

bool mentions_concept(const std::string& sentence, const std::string& term);

}  // namespace mqag::scorers
