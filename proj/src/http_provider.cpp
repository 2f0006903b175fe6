#include <algorithm>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "drpg/providers.hpp"

namespace drpg {

namespace {

using nlohmann::json;

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash, e.g. "/v1"
};

Endpoint split_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "base_url needs a scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = base_url.substr(0, path_start);
    if (path_start != std::string::npos) ep.prefix = base_url.substr(path_start);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

json post_json(const ProviderConfig& cfg, const std::string& path, const json& body) {
    auto ep = split_url(cfg.base_url);
    httplib::Client client(ep.origin);
    const auto secs = cfg.timeout_ms / 1000;
    const auto usecs = (cfg.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    auto res = client.Post(ep.prefix + path, headers, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                               err == httplib::Error::Write;
        throw TransientError(timed_out ? ErrorCode::Timeout : ErrorCode::ProviderFailure,
                             "POST " + path + ": " + httplib::to_string(err));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientError(ErrorCode::ProviderFailure, "POST " + path + ": HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::ProviderFailure,
                    "POST " + path + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderFailure, "POST " + path + ": unparseable response body: " + e.what());
    }
}

}  // namespace

HttpChat::HttpChat(ProviderConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

std::string HttpChat::generate(const GenerationRequest& req) {
    validate(req);
    json body = {
        {"model", req.model_name.empty() ? cfg_.chat_model : req.model_name},
        {"messages",
         json::array({{{"role", "system"}, {"content", req.system_prompt}},
                      {{"role", "user"}, {"content", req.user_prompt}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };
    auto resp = post_json(cfg_, "/chat/completions", body);
    try {
        return resp.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::ProviderFailure, "chat response lacks choices[0].message.content");
    }
}

HttpEmbedder::HttpEmbedder(ProviderConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(std::span<const std::string> texts) {
    json body = {
        {"model", cfg_.embed_model},
        {"input", std::vector<std::string>(texts.begin(), texts.end())},
    };
    auto resp = post_json(cfg_, "/embeddings", body);
    std::vector<EmbeddingVector> out(texts.size());
    try {
        const auto& data = resp.at("data");
        if (data.size() != texts.size()) {
            throw Error(ErrorCode::ProviderFailure, "embeddings response has " + std::to_string(data.size()) +
                                                        " entries for " + std::to_string(texts.size()) + " inputs");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            // Entries carry their input position; fall back to list order.
            std::size_t pos = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
            if (pos >= out.size()) throw Error(ErrorCode::ProviderFailure, "embedding index out of range");
            out[pos].values = data[i].at("embedding").get<std::vector<double>>();
        }
    } catch (const json::exception&) {
        throw Error(ErrorCode::ProviderFailure, "embeddings response lacks data[].embedding");
    }
    return out;
}

}  // namespace drpg
