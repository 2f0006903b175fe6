#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>

#include <nlohmann/json.hpp>

#include "drpg/prompts.hpp"
#include "drpg/providers.hpp"
#include "drpg/text.hpp"

namespace drpg {

namespace {

double unit_from_bits(std::uint64_t r) { return static_cast<double>(r >> 11) * 0x1.0p-53; }

void add_token_direction(std::vector<double>& acc, std::string_view token, std::uint64_t seed) {
    const auto base = text::fnv1a64(token, seed);
    for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i] += 2.0 * unit_from_bits(text::mix64(base + 0x9e3779b97f4a7c15ULL * (i + 1))) - 1.0;
    }
}

std::string first_words(std::string_view s, std::size_t n) {
    auto words = text::tokenize(s);
    if (words.size() > n) words.resize(n);
    return text::join(words, " ");
}

std::string between(const std::string& s, std::string_view open, std::string_view close) {
    auto b = s.find(open);
    if (b == std::string::npos) return {};
    b += open.size();
    auto e = close.empty() ? std::string::npos : s.find(close, b);
    return text::trim(s.substr(b, e == std::string::npos ? std::string::npos : e - b));
}

int find_int_after(const std::string& s, const std::regex& re, int fallback) {
    std::smatch m;
    if (std::regex_search(s, m, re)) return std::stoi(m[1].str());
    return fallback;
}

std::string mock_decompose(const std::string& review) {
    auto sentences = text::split_sentences(review);
    if (sentences.empty()) sentences.push_back(text::trim(review));
    return nlohmann::json(sentences).dump(4);
}

std::string mock_propose(const std::string& user, std::uint64_t h) {
    auto point = between(user, "Input: \"", "");
    if (!point.empty() && point.back() == '"') point.pop_back();
    const auto topic = first_words(point, 10);
    const std::vector<std::string> options = {
        "Clarification: the paper already addresses the concern that " + topic,
        "Clarification: the reviewer may have misread how the method handles " + topic,
        "Clarification: the reported results already cover " + topic,
        "Justification: the issue of " + topic + " does not undermine the core contribution",
        "Justification: addressing " + topic + " is outside the scope of this work",
        "Justification: the design choice behind " + topic + " follows standard practice",
    };
    // Seeded choice of which option to drop, then a seeded rotation.
    std::vector<std::string> picked;
    const std::size_t drop = h % options.size();
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (i != drop) picked.push_back(options[i]);
    }
    std::rotate(picked.begin(), picked.begin() + static_cast<long>((h >> 8) % picked.size()), picked.end());
    return nlohmann::json(picked).dump(4);
}

std::string mock_respond_point(const std::string& user) {
    const auto point = between(user, "Review comment:\n", "\n\nRelevant content from the paper:");
    const auto first_para = between(user, "]\n", "\n");
    auto sentences = text::split_sentences(first_para);
    std::string evidence = sentences.empty() ? first_para : sentences.front();
    std::string out = "We thank the reviewer for the comment on " + first_words(point, 8) + ". ";
    const auto pos = user.find(prompts::kPerspectiveHeader);
    if (pos != std::string::npos) {
        const auto lines = user.substr(pos);
        const auto nl = lines.rfind('\n', lines.size() - 2);
        out += "Our position is that " + text::trim(lines.substr(nl + 1)) + ". ";
    }
    out += "The paper states: " + evidence;
    return out;
}

std::string mock_respond_whole(const std::string& user, std::uint64_t h) {
    const auto review = between(user, "\n\nReview:\n", "");
    auto sentences = text::split_sentences(review);
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        out += "Question: " + sentences[i] + "\nResponse: We respectfully clarify that " +
               first_words(sentences[i], 8) + " is addressed in the paper.\n";
    }
    if (out.empty()) out = "We thank the reviewer (" + std::to_string(h % 1000) + ").";
    return text::trim(out);
}

std::string mock_judge(const std::string& user, std::uint64_t h) {
    static const std::regex kOriginal(R"(Original score:\s*(\d+))");
    const int original = find_int_after(user, kOriginal, 5);
    const int final_score = std::clamp(original + static_cast<int>(h % 3 == 0), 1, 10);
    return "The authors address the main concerns with arguments grounded in the paper. "
           "Some points still rest on claims I cannot verify (" +
           std::to_string(h % 97) + ").\nMy final score is " + std::to_string(final_score);
}

std::string mock_compare(std::uint64_t h) {
    static const char* const kVerdicts[] = {
        "I think response 1 is better",
        "I think response 2 is better",
        "I think two responses are similar in quality",
    };
    return "Both responses engage with the review; they differ in how concretely they cite the paper.\n" +
           std::string(kVerdicts[h % 3]);
}

std::string mock_recover(const std::string& user, std::uint64_t h) {
    static const std::regex kFinal(R"(Final score:\s*(\d+))");
    const int final_score = find_int_after(user, kFinal, 5);
    const int initial = std::clamp(final_score - static_cast<int>(h % 2), 1, 10);
    return nlohmann::json{{"opinion", "The discussion suggests a modest change after the rebuttal."},
                          {"initial_score", std::to_string(initial)}}
        .dump();
}

std::string mock_ground_truth(const std::string& user) {
    const auto rebuttal = between(user, "Authors' rebuttal:\n", "");
    auto sentences = text::split_sentences(rebuttal);
    const std::string gist = sentences.empty() ? first_words(rebuttal, 12) : sentences.front();
    return nlohmann::json::array({"Justification: " + gist}).dump();
}

}  // namespace

EmbeddingVector mock_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 2) throw Error(ErrorCode::InvalidArgument, "mock_embed needs dim >= 2");
    std::vector<double> acc(dim, 0.0);
    auto tokens = text::tokenize(text);
    if (tokens.empty()) {
        add_token_direction(acc, text, seed);
    } else {
        for (const auto& t : tokens) add_token_direction(acc, t, seed);
    }
    double norm = 0;
    for (double x : acc) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0) {
        acc.assign(dim, 0.0);
        acc[0] = 1.0;
        norm = 1.0;
    }
    for (auto& x : acc) x /= norm;
    return EmbeddingVector{std::move(acc)};
}

MockEmbedder::MockEmbedder(std::size_t dim, std::uint64_t seed, std::size_t batch_limit)
    : dim_(dim), seed_(seed), batch_limit_(batch_limit) {
    if (dim_ < 2) throw Error(ErrorCode::InvalidArgument, "mock embedder needs dim >= 2");
}

std::string MockEmbedder::name() const { return "mock-" + std::to_string(seed_); }

std::vector<EmbeddingVector> MockEmbedder::embed_batch(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(mock_embed(t, dim_, seed_));
    return out;
}

std::uint64_t prompt_hash(const GenerationRequest& req) {
    return text::fnv1a64(req.system_prompt + '\x1f' + req.user_prompt);
}

MockChat::MockChat(std::uint64_t seed) : seed_(seed) {}

void MockChat::set_canned(std::uint64_t hash, std::string response) {
    std::lock_guard lock(mu_);
    canned_[hash] = std::move(response);
}

std::string MockChat::generate(const GenerationRequest& req) {
    validate(req);
    ++calls_;
    const auto key = prompt_hash(req);
    {
        std::lock_guard lock(mu_);
        if (auto it = canned_.find(key); it != canned_.end()) return it->second;
    }
    const auto h = text::mix64(key ^ text::mix64(seed_));
    const auto& sys = req.system_prompt;
    const auto& user = req.user_prompt;
    if (sys == prompts::kDecomposer) return mock_decompose(user);
    if (sys == prompts::kPerspectiveProposer) return mock_propose(user, h);
    if (sys == prompts::kExecutorPoint) return mock_respond_point(user);
    if (sys == prompts::kExecutorWhole) return mock_respond_whole(user, h);
    if (sys == prompts::kJudge) return mock_judge(user, h);
    if (sys == prompts::kCompare) return mock_compare(h);
    if (sys == prompts::kScoreRecovery) return mock_recover(user, h);
    if (sys == prompts::kGroundTruthExtraction) return mock_ground_truth(user);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("Mock response ") + buf;
}

}  // namespace drpg
