#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "drpg/providers.hpp"
#include "helpers.hpp"

using namespace drpg;
using nlohmann::json;

namespace {

GenerationRequest request(std::string user = "hello") {
    GenerationRequest r;
    r.system_prompt = "You are terse.";
    r.user_prompt = std::move(user);
    return r;
}

// Fails with TransientError for the first `failures` calls.
class FlakyChat : public ChatProvider {
public:
    explicit FlakyChat(int failures) : failures_(failures) {}
    std::string generate(const GenerationRequest&) override {
        if (calls++ < failures_) throw TransientError(ErrorCode::ProviderFailure, "flaky");
        return "ok";
    }
    int calls = 0;

private:
    int failures_;
};

// Local stand-in for a chat-completions / embeddings service.
class FakeService {
public:
    FakeService() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++chat_calls;
            last_auth = req.get_header_value("Authorization");
            last_body = json::parse(req.body);
            if (chat_calls <= fail_first) {
                res.status = 503;
                return;
            }
            if (reject) {
                res.status = 400;
                res.set_content(R"({"error":"bad request"})", "application/json");
                return;
            }
            json out = {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", "pong"}}}}})}};
            res.set_content(out.dump(), "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++embed_calls;
            auto body = json::parse(req.body);
            json data = json::array();
            const auto& input = body.at("input");
            // Reverse order with explicit indices to check reassembly.
            for (std::size_t i = input.size(); i-- > 0;) {
                const double len = static_cast<double>(input[i].get<std::string>().size());
                data.push_back({{"index", i}, {"embedding", {len, 1.0}}});
            }
            res.set_content(json{{"data", data}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    std::atomic<int> chat_calls{0};
    std::atomic<int> embed_calls{0};
    int fail_first = 0;
    bool reject = false;
    std::string last_auth;
    json last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ProviderConfig http_config(const FakeService& svc) {
    ProviderConfig cfg;
    cfg.base_url = svc.base_url();
    cfg.api_key_env = "DRPG_TEST_API_KEY";
    cfg.backoff_base_ms = 0;
    cfg.timeout_ms = 5000;
    cfg.embed_dim = 2;
    cfg.embed_batch = 3;
    return cfg;
}

}  // namespace

TEST_CASE("mock_embed is deterministic and unit norm") {
    const auto a = mock_embed("retrieval augmented generation", 32, 1);
    CHECK(a == mock_embed("retrieval augmented generation", 32, 1));
    double norm = 0;
    for (double x : a.values) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a != mock_embed("retrieval augmented generation", 32, 2));
    CHECK(a.dim() == 32);
}

TEST_CASE("mock embedder batches and keeps order") {
    MockEmbedder e(16, 3, 100);
    std::vector<std::string> texts;
    for (int i = 0; i < 1000; ++i) texts.push_back("text number " + std::to_string(i));
    const auto all = e.embed(texts);
    REQUIRE(all.size() == 1000);
    CHECK(e.embed_calls() == 10);
    for (int i : {0, 1, 99, 100, 517, 999}) CHECK(all[i] == e.embed_one(texts[i]));

    const auto twins = e.embed({"a", "a"});
    CHECK(twins[0] == twins[1]);
    CHECK(e.embed({}).empty());
    CHECK_THROWS_CODE(e.embed({"ok", "  "}), ErrorCode::InvalidArgument);
}

TEST_CASE("mock chat prefers canned responses") {
    MockChat chat(5);
    const auto req = request("anything at all");
    chat.set_canned(prompt_hash(req), "X");
    CHECK(chat.generate(req) == "X");
    CHECK(chat.generate(request("other")) == MockChat(5).generate(request("other")));
    CHECK(chat.calls() == 2);
}

TEST_CASE("retries recover from transient failures") {
    auto flaky = std::make_shared<FlakyChat>(2);
    RetryPolicy policy;
    policy.retry_limit = 3;
    std::vector<std::chrono::milliseconds> slept;
    policy.sleep = [&](std::chrono::milliseconds d) { slept.push_back(d); };
    ResilientChat chat(flaky, policy, nullptr);
    CHECK(chat.generate(request()) == "ok");
    CHECK(flaky->calls == 3);
    CHECK(slept.size() == 2);

    auto broken = std::make_shared<FlakyChat>(100);
    policy.retry_limit = 0;
    ResilientChat once(broken, policy, nullptr);
    CHECK_THROWS_CODE(once.generate(request()), ErrorCode::ProviderFailure);
    CHECK(broken->calls == 1);
}

TEST_CASE("backoff doubles with jitter in [d/2, d]") {
    RetryPolicy policy;
    policy.base = std::chrono::milliseconds(100);
    for (std::uint64_t seed : {0ull, 1ull, 77ull}) {
        policy.jitter_seed = seed;
        for (int attempt = 0; attempt < 5; ++attempt) {
            const auto full = 100 << attempt;
            const auto d = policy.backoff(attempt).count();
            CHECK(d >= full / 2);
            CHECK(d <= full);
        }
    }
}

TEST_CASE("concurrency gate bounds in-flight calls") {
    std::atomic<int> in_flight{0}, peak{0};
    auto inner = std::make_shared<FunctionChat>([&](const GenerationRequest&) {
        const int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --in_flight;
        return std::string("done");
    });
    auto gate = std::make_shared<ConcurrencyGate>(2);
    ResilientChat chat(inner, {}, gate);
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&] { chat.generate(request()); });
    threads.clear();
    CHECK(peak.load() <= 2);
    CHECK(peak.load() >= 1);
    CHECK_THROWS_CODE(ConcurrencyGate(0), ErrorCode::ConfigError);
}

TEST_CASE("http chat speaks the chat-completions wire format") {
    FakeService svc;
    ::setenv("DRPG_TEST_API_KEY", "sk-test", 1);
    auto cfg = http_config(svc);
    HttpChat chat(cfg);
    auto req = request("ping");
    req.temperature = 0.25;
    CHECK(chat.generate(req) == "pong");
    CHECK(svc.last_auth == "Bearer sk-test");
    CHECK(svc.last_body.at("model") == cfg.chat_model);
    CHECK(svc.last_body.at("temperature") == 0.25);
    REQUIRE(svc.last_body.at("messages").size() == 2);
    CHECK(svc.last_body["messages"][0]["role"] == "system");
    CHECK(svc.last_body["messages"][1]["content"] == "ping");
}

TEST_CASE("http providers retry 5xx and fail fast on 4xx") {
    FakeService svc;
    auto cfg = http_config(svc);
    cfg.retry_limit = 3;
    svc.fail_first = 2;
    auto providers = make_providers("http", cfg);
    CHECK(providers.chat->generate(request()) == "pong");
    CHECK(svc.chat_calls == 3);

    svc.reject = true;
    CHECK_THROWS_CODE(providers.chat->generate(request()), ErrorCode::ProviderFailure);
    CHECK(svc.chat_calls == 4);
}

TEST_CASE("http embedder batches and reassembles by index") {
    FakeService svc;
    auto providers = make_providers("http", http_config(svc));
    const auto vecs = providers.embedder->embed({"a", "bb", "ccc", "dddd"});
    REQUIRE(vecs.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(vecs[i].values[0] == static_cast<double>(i + 1));
    CHECK(svc.embed_calls == 2);
}

TEST_CASE("unreachable service surfaces a provider error") {
    ProviderConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.retry_limit = 0;
    cfg.timeout_ms = 500;
    auto providers = make_providers("http", cfg);
    bool thrown = false;
    try {
        providers.chat->generate(request());
    } catch (const Error& e) {
        thrown = true;
        CHECK((e.code() == ErrorCode::ProviderFailure || e.code() == ErrorCode::Timeout));
    }
    CHECK(thrown);
}

TEST_CASE("provider specs and configs are validated") {
    CHECK_THROWS_CODE(make_providers("mock:x", {}), ErrorCode::ConfigError);
    CHECK_THROWS_CODE(make_providers("carrier-pigeon", {}), ErrorCode::ConfigError);
    ProviderConfig bad;
    bad.max_concurrent = 0;
    CHECK_THROWS_CODE(make_providers("mock:1", bad), ErrorCode::ConfigError);
    auto req = request();
    req.user_prompt = " ";
    CHECK_THROWS_CODE(validate(req), ErrorCode::InvalidArgument);
}
