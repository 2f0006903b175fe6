#include "drpg/providers.hpp"

#include <cmath>
#include <thread>

#include "drpg/text.hpp"

namespace drpg {

void validate(const GenerationRequest& req) {
    if (text::is_blank(req.system_prompt) || text::is_blank(req.user_prompt)) {
        throw Error(ErrorCode::InvalidArgument, "generation prompts must be non-blank");
    }
    if (!std::isfinite(req.temperature) || req.temperature < 0) {
        throw Error(ErrorCode::InvalidArgument, "temperature must be finite and non-negative");
    }
    if (req.max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
}

void validate(const ProviderConfig& cfg) {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
    if (cfg.max_concurrent < 1) bad("max_concurrent must be >= 1");
    if (cfg.retry_limit < 0) bad("retry_limit must be >= 0");
    if (cfg.timeout_ms <= 0) bad("timeout_ms must be positive");
    if (cfg.backoff_base_ms < 0) bad("backoff_base_ms must be >= 0");
    if (cfg.embed_dim < 2) bad("embed_dim must be >= 2");
    if (cfg.embed_batch < 1) bad("embed_batch must be >= 1");
}

std::vector<EmbeddingVector> Embedder::embed(const std::vector<std::string>& texts) {
    for (const auto& t : texts) {
        if (text::is_blank(t)) throw Error(ErrorCode::InvalidArgument, "cannot embed blank text");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    const std::size_t limit = std::max<std::size_t>(1, batch_limit());
    const std::span<const std::string> all(texts);
    for (std::size_t start = 0; start < texts.size(); start += limit) {
        auto batch = all.subspan(start, std::min(limit, texts.size() - start));
        ++calls_;
        texts_ += batch.size();
        auto vecs = embed_batch(batch);
        if (vecs.size() != batch.size()) {
            throw Error(ErrorCode::ProviderFailure, "embedding service returned " + std::to_string(vecs.size()) +
                                                        " vectors for " + std::to_string(batch.size()) + " texts");
        }
        for (auto& v : vecs) {
            if (v.dim() != dim()) {
                throw Error(ErrorCode::DimensionMismatch, "embedding width " + std::to_string(v.dim()) +
                                                              " != configured " + std::to_string(dim()));
            }
            for (double x : v.values) {
                if (!std::isfinite(x)) throw Error(ErrorCode::ProviderFailure, "non-finite embedding entry");
            }
            out.push_back(std::move(v));
        }
    }
    return out;
}

EmbeddingVector Embedder::embed_one(const std::string& text) { return embed({text}).front(); }

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
    const double full = static_cast<double>(base.count()) * std::ldexp(1.0, attempt);
    const auto r = text::mix64(jitter_seed ^ static_cast<std::uint64_t>(attempt));
    const double u = static_cast<double>(r >> 11) * 0x1.0p-53;
    return std::chrono::milliseconds(static_cast<long long>(full * (0.5 + 0.5 * u)));
}

ConcurrencyGate::ConcurrencyGate(int max_concurrent) : limit_(max_concurrent), sem_(max_concurrent) {
    if (max_concurrent < 1) throw Error(ErrorCode::ConfigError, "max_concurrent must be >= 1");
}

ResilientChat::ResilientChat(std::shared_ptr<ChatProvider> inner, RetryPolicy policy,
                             std::shared_ptr<ConcurrencyGate> gate)
    : inner_(std::move(inner)), policy_(std::move(policy)), gate_(std::move(gate)) {}

std::string ResilientChat::generate(const GenerationRequest& req) {
    validate(req);
    return with_retries(policy_, [&] {
        if (!gate_) return inner_->generate(req);
        ConcurrencyGate::Slot slot(*gate_);
        return inner_->generate(req);
    });
}

ResilientEmbedder::ResilientEmbedder(std::shared_ptr<Embedder> inner, RetryPolicy policy,
                                     std::shared_ptr<ConcurrencyGate> gate)
    : inner_(std::move(inner)), policy_(std::move(policy)), gate_(std::move(gate)) {}

std::vector<EmbeddingVector> ResilientEmbedder::embed_batch(std::span<const std::string> texts) {
    std::vector<std::string> owned(texts.begin(), texts.end());
    return with_retries(policy_, [&] {
        if (!gate_) return inner_->embed(owned);
        ConcurrencyGate::Slot slot(*gate_);
        return inner_->embed(owned);
    });
}

Providers make_providers(std::string_view spec, const ProviderConfig& cfg) {
    validate(cfg);
    Providers p;
    if (spec.starts_with("mock")) {
        std::uint64_t seed = 0;
        if (spec.size() > 4) {
            if (spec[4] != ':') throw Error(ErrorCode::ConfigError, "provider spec must be mock:SEED or http");
            try {
                seed = std::stoull(std::string(spec.substr(5)));
            } catch (const std::exception&) {
                throw Error(ErrorCode::ConfigError, "bad mock seed in \"" + std::string(spec) + "\"");
            }
        }
        p.chat = std::make_shared<MockChat>(seed);
        p.embedder = std::make_shared<MockEmbedder>(cfg.embed_dim, seed, cfg.embed_batch);
        p.judge = p.chat;
        return p;
    }
    if (spec != "http") throw Error(ErrorCode::ConfigError, "unknown provider \"" + std::string(spec) + "\"");

    RetryPolicy policy;
    policy.retry_limit = cfg.retry_limit;
    policy.base = std::chrono::milliseconds(cfg.backoff_base_ms);
    policy.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    auto gate = std::make_shared<ConcurrencyGate>(cfg.max_concurrent);
    p.chat = std::make_shared<ResilientChat>(std::make_shared<HttpChat>(cfg), policy, gate);
    p.embedder = std::make_shared<ResilientEmbedder>(std::make_shared<HttpEmbedder>(cfg), policy, gate);
    p.judge = p.chat;
    return p;
}

}  // namespace drpg
