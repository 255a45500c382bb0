#pragma once
// Text backends: generation, plausibility scoring and embedding. Each comes
// in two flavors, an HTTP/JSON client for a hosted model and a deterministic
// offline mock. Pipelines only see the abstract interfaces.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ig {

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenParams {
    int max_tokens = 256;
    double temperature = 0.0;
};

class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string generate(const std::string& prompt, const GenParams& params) = 0;
};

class PlausibilityScorer {
public:
    virtual ~PlausibilityScorer() = default;
    // Plausibility of a natural-language statement in [0, 1].
    virtual double score(const std::string& statement) = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
    virtual int dim() const = 0;
};

// POST endpoints: /generate {"prompt","max_tokens","temperature"} -> {"text"},
// /score {"statement"} -> {"score"}, /embed {"text"} -> {"vector":[...]}.
struct HttpConfig {
    std::string base_url;       // e.g. http://localhost:8900
    int timeout_ms = 30000;
    int max_retries = 3;        // total attempts, not extra retries
    int backoff_ms = 100;       // doubles after each failed attempt
};

class HttpGenerator : public TextGenerator {
public:
    explicit HttpGenerator(HttpConfig cfg) : cfg_(std::move(cfg)) {}
    std::string generate(const std::string& prompt, const GenParams& params) override;

private:
    HttpConfig cfg_;
};

class HttpScorer : public PlausibilityScorer {
public:
    explicit HttpScorer(HttpConfig cfg) : cfg_(std::move(cfg)) {}
    double score(const std::string& statement) override;

private:
    HttpConfig cfg_;
};

class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(HttpConfig cfg, int dim) : cfg_(std::move(cfg)), dim_(dim) {}
    std::vector<double> embed(const std::string& text) override;
    int dim() const override { return dim_; }

private:
    HttpConfig cfg_;
    int dim_;
};

// Offline stand-in for the hosted model. Completions are a pure function of
// the prompt: exact overrides win, then the two prompt families this project
// uses (intention listing, concept extraction) get rule-based answers, and
// anything else falls back to a hash-tagged stub line.
class MockGenerator : public TextGenerator {
public:
    explicit MockGenerator(uint64_t seed = 0) : seed_(seed) {}
    void set_override(const std::string& prompt, const std::string& completion);
    std::string generate(const std::string& prompt, const GenParams& params) override;

private:
    uint64_t seed_;
    std::map<std::string, std::string> overrides_;
};

// The three intention texts MockGenerator can emit for a one-token theme, in
// template order. Synthetic-data planning precomputes scorer overrides from
// these instead of re-deriving generator output.
std::vector<std::string> mock_intention_texts(const std::string& theme);

// Scores are hash-uniform in [0, 1) unless an exact statement override is
// present. Override tables can be loaded from a JSON object file.
class MockScorer : public PlausibilityScorer {
public:
    explicit MockScorer(uint64_t seed = 0) : seed_(seed) {}
    void set_override(const std::string& statement, double score);
    void load_overrides(const std::filesystem::path& json_path);
    double score(const std::string& statement) override;

private:
    uint64_t seed_;
    std::map<std::string, double> overrides_;
};

// Hashed bag of words: lowercase tokens split on whitespace/punctuation,
// each token hashes to a bucket in [0, dim), counts are L2-normalized.
// Texts sharing tokens correlate; cosine is non-negative.
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(int dim = 64, uint64_t seed = 0) : dim_(dim), seed_(seed) {}
    std::vector<double> embed(const std::string& text) override;
    int dim() const override { return dim_; }

private:
    int dim_;
    uint64_t seed_;
};

struct BackendSet {
    std::shared_ptr<TextGenerator> generator;
    std::shared_ptr<PlausibilityScorer> scorer;
    std::shared_ptr<Embedder> embedder;
};

}  // namespace ig
