#include "drpg/decomposer.hpp"

#include "drpg/llm_output.hpp"
#include "drpg/prompts.hpp"
#include "drpg/text.hpp"

namespace drpg::decomposer {

std::vector<std::string> extract_array(std::string_view raw) {
    auto arr = llm_output::first_array(raw, [](const nlohmann::json& j) {
        if (!j.is_array()) return false;
        for (const auto& e : j) {
            if (!e.is_string()) return false;
        }
        return true;
    });
    if (!arr) throw Error(ErrorCode::ParseFailure, "no array of strings found in model output");
    std::vector<std::string> out;
    for (const auto& e : *arr) {
        auto s = text::trim(e.get<std::string>());
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::vector<std::string> request_points(const Review& review, ChatProvider& chat, const DecomposeOptions& options,
                                        bool strict) {
    GenerationRequest req;
    req.system_prompt = std::string(prompts::kDecomposer);
    req.user_prompt = prompts::decomposer_user(review.text);
    if (strict) {
        req.user_prompt += "\n\n";
        req.user_prompt += prompts::kArrayOnlyReminder;
    }
    req.temperature = options.temperature;
    req.model_name = options.model_name;
    auto items = extract_array(chat.generate(req));
    if (items.empty()) throw Error(ErrorCode::ParseFailure, "decomposer returned no points");
    return items;
}

}  // namespace

std::vector<ReviewPoint> decompose(const Review& review, ChatProvider& chat, const DecomposeOptions& options) {
    if (text::is_blank(review.text)) throw Error(ErrorCode::InvalidArgument, "review text is blank");
    std::vector<std::string> items;
    try {
        items = request_points(review, chat, options, false);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseFailure) throw;
        items = request_points(review, chat, options, true);
    }
    std::vector<ReviewPoint> points;
    points.reserve(items.size());
    for (auto& item : items) {
        points.push_back(ReviewPoint{review.id, points.size(), std::move(item)});
    }
    return points;
}

}  // namespace drpg::decomposer
