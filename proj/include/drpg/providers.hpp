#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drpg/error.hpp"

namespace drpg {

struct GenerationRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::string model_name;
};

void validate(const GenerationRequest& req);

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

struct ProviderConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    int max_concurrent = 4;
    int retry_limit = 3;
    int timeout_ms = 120000;
    int backoff_base_ms = 500;
    std::string chat_model = "gpt-4o-mini";
    std::string embed_model = "text-embedding-3-large";
    std::size_t embed_dim = 1024;
    std::size_t embed_batch = 64;
};

void validate(const ProviderConfig& cfg);

// Thrown by provider backends for failures worth retrying (network errors,
// rate limits, 5xx). Anything else derived from Error is final.
class TransientError : public Error {
public:
    using Error::Error;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string generate(const GenerationRequest& req) = 0;
};

// Batches, validates and counts; backends implement embed_batch.
class Embedder {
public:
    virtual ~Embedder() = default;

    // One vector per text, order preserved. Every text must be non-blank.
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);
    EmbeddingVector embed_one(const std::string& text);

    virtual std::size_t dim() const = 0;
    virtual std::string name() const = 0;
    virtual std::size_t batch_limit() const { return 64; }

    std::size_t embed_calls() const { return calls_.load(); }
    std::size_t embedded_texts() const { return texts_.load(); }

protected:
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;

private:
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> texts_{0};
};

// ---------------------------------------------------------------------------
// Retry and concurrency decorators

struct RetryPolicy {
    int retry_limit = 3;
    std::chrono::milliseconds base{500};
    std::uint64_t jitter_seed = 0;
    // Injected so tests do not sleep.
    std::function<void(std::chrono::milliseconds)> sleep;

    // Exponential with full jitter: uniform in [d/2, d] for d = base * 2^attempt.
    std::chrono::milliseconds backoff(int attempt) const;
};

// Runs fn up to retry_limit + 1 times while it throws TransientError.
template <class Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const TransientError& e) {
            if (attempt >= policy.retry_limit) {
                throw Error(e.code(), std::string(e.what()) + " (after " + std::to_string(attempt + 1) +
                                          " attempt" + (attempt ? "s" : "") + ")");
            }
            if (policy.sleep) policy.sleep(policy.backoff(attempt));
        }
    }
}

class ConcurrencyGate {
public:
    explicit ConcurrencyGate(int max_concurrent);

    class Slot {
    public:
        explicit Slot(ConcurrencyGate& gate) : gate_(gate) { gate_.sem_.acquire(); }
        ~Slot() { gate_.sem_.release(); }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        ConcurrencyGate& gate_;
    };

    int limit() const { return limit_; }

private:
    int limit_;
    std::counting_semaphore<1 << 20> sem_;
};

class ResilientChat : public ChatProvider {
public:
    ResilientChat(std::shared_ptr<ChatProvider> inner, RetryPolicy policy, std::shared_ptr<ConcurrencyGate> gate);
    std::string generate(const GenerationRequest& req) override;

private:
    std::shared_ptr<ChatProvider> inner_;
    RetryPolicy policy_;
    std::shared_ptr<ConcurrencyGate> gate_;
};

class ResilientEmbedder : public Embedder {
public:
    ResilientEmbedder(std::shared_ptr<Embedder> inner, RetryPolicy policy, std::shared_ptr<ConcurrencyGate> gate);

    std::size_t dim() const override { return inner_->dim(); }
    std::string name() const override { return inner_->name(); }
    std::size_t batch_limit() const override { return inner_->batch_limit(); }

protected:
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

private:
    std::shared_ptr<Embedder> inner_;
    RetryPolicy policy_;
    std::shared_ptr<ConcurrencyGate> gate_;
};

// ---------------------------------------------------------------------------
// Chat-completions / embeddings HTTP backends

class HttpChat : public ChatProvider {
public:
    explicit HttpChat(ProviderConfig cfg);
    std::string generate(const GenerationRequest& req) override;

private:
    ProviderConfig cfg_;
};

class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(ProviderConfig cfg);

    std::size_t dim() const override { return cfg_.embed_dim; }
    std::string name() const override { return cfg_.embed_model; }
    std::size_t batch_limit() const override { return cfg_.embed_batch; }

protected:
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

private:
    ProviderConfig cfg_;
};

// ---------------------------------------------------------------------------
// Offline providers

// Unit-norm bag-of-tokens embedding: each token maps to a seeded pseudo-random
// direction and the text embeds to the normalized sum, so texts sharing tokens
// have positive cosine and identical texts embed identically.
EmbeddingVector mock_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class MockEmbedder : public Embedder {
public:
    MockEmbedder(std::size_t dim, std::uint64_t seed, std::size_t batch_limit = 64);

    std::size_t dim() const override { return dim_; }
    std::string name() const override;
    std::size_t batch_limit() const override { return batch_limit_; }

protected:
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::size_t batch_limit_;
};

std::uint64_t prompt_hash(const GenerationRequest& req);

// Deterministic chat stand-in. Canned responses (keyed by prompt_hash) win;
// otherwise the system prompt identifies the role and a plausible, parseable
// answer is synthesized from the user message and the seed.
class MockChat : public ChatProvider {
public:
    explicit MockChat(std::uint64_t seed);

    void set_canned(std::uint64_t hash, std::string response);
    std::string generate(const GenerationRequest& req) override;
    std::size_t calls() const { return calls_.load(); }

private:
    std::uint64_t seed_;
    std::atomic<std::size_t> calls_{0};
    mutable std::mutex mu_;
    std::map<std::uint64_t, std::string> canned_;
};

// Delegates to a callable; the test-side scripting hook.
class FunctionChat : public ChatProvider {
public:
    using Fn = std::function<std::string(const GenerationRequest&)>;
    explicit FunctionChat(Fn fn) : fn_(std::move(fn)) {}
    std::string generate(const GenerationRequest& req) override { return fn_(req); }

private:
    Fn fn_;
};

// ---------------------------------------------------------------------------

struct Providers {
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<Embedder> embedder;
    // Judge and comparator calls; falls back to chat when unset.
    std::shared_ptr<ChatProvider> judge;

    ChatProvider& judge_chat() const { return judge ? *judge : *chat; }
};

// "mock:SEED" or "http". HTTP providers share one concurrency gate and use
// the configured retry policy.
Providers make_providers(std::string_view spec, const ProviderConfig& cfg);

}  // namespace drpg
