#include "drpg/executor.hpp"

#include "drpg/text.hpp"

namespace drpg::executor {

GenerationRequest point_request(const ReviewPoint& point, const std::vector<prompts::ContextParagraph>& context,
                                const std::optional<PerspectiveCandidate>& perspective,
                                const ExecuteOptions& options) {
    if (context.empty()) throw Error(ErrorCode::EmptyContext, "point " + std::to_string(point.index) + " has no context");
    GenerationRequest req;
    req.system_prompt = std::string(prompts::kExecutorPoint);
    req.user_prompt = prompts::executor_point_user(point.text, context, perspective);
    req.temperature = options.temperature;
    req.model_name = options.model_name;
    return req;
}

RebuttalUnit respond_point(const ReviewPoint& point, const std::vector<prompts::ContextParagraph>& context,
                           const std::optional<PerspectiveCandidate>& perspective, ChatProvider& chat,
                           const ExecuteOptions& options) {
    const auto req = point_request(point, context, perspective, options);
    RebuttalUnit unit;
    unit.point_index = point.index;
    unit.response_text = chat.generate(req);
    unit.perspective_used = perspective;
    for (const auto& c : context) unit.context_indices.push_back(c.index);
    unit.point_text = point.text;
    return unit;
}

GenerationRequest whole_request(const Review& review, const Paper& paper, const ExecuteOptions& options) {
    GenerationRequest req;
    req.system_prompt = std::string(prompts::kExecutorWhole);
    req.user_prompt = prompts::executor_whole_user(paper.full_text(), review.text);
    req.temperature = options.temperature;
    req.model_name = options.model_name;
    return req;
}

Rebuttal respond_whole(const Review& review, const Paper& paper, ChatProvider& chat, const ExecuteOptions& options) {
    auto completion = chat.generate(whole_request(review, paper, options));
    Rebuttal r;
    r.review_id = review.id;
    RebuttalUnit unit;
    unit.point_index = 0;
    unit.response_text = completion;
    unit.point_text = review.text;
    r.units.push_back(std::move(unit));
    r.merged_text = std::move(completion);
    return r;
}

namespace {

std::string q_marker(std::size_t i) { return "**Q" + std::to_string(i) + ":** "; }
std::string r_marker(std::size_t i) { return "**R" + std::to_string(i) + ":** "; }

}  // namespace

Rebuttal merge(std::string review_id, std::vector<RebuttalUnit> units) {
    if (units.empty()) throw Error(ErrorCode::EmptySet, "nothing to merge");
    for (std::size_t i = 1; i < units.size(); ++i) {
        if (units[i].point_index <= units[i - 1].point_index) {
            throw Error(ErrorCode::InvalidArgument, "units must be sorted by point_index");
        }
    }
    Rebuttal r;
    r.review_id = std::move(review_id);
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (i) r.merged_text += "\n\n";
        r.merged_text += q_marker(i + 1) + units[i].point_text + "\n" + r_marker(i + 1) + units[i].response_text;
    }
    r.units = std::move(units);
    return r;
}

std::vector<std::pair<std::string, std::string>> split_merged(std::string_view merged) {
    std::vector<std::pair<std::string, std::string>> out;
    if (!merged.starts_with(q_marker(1))) throw Error(ErrorCode::ParseFailure, "merged text does not start with Q1");
    std::size_t pos = 0;
    for (std::size_t i = 1; pos < merged.size(); ++i) {
        const auto q = q_marker(i);
        if (merged.substr(pos, q.size()) != q) throw Error(ErrorCode::ParseFailure, "expected block " + q);
        const auto r = "\n" + r_marker(i);
        const auto r_pos = merged.find(r, pos + q.size());
        if (r_pos == std::string_view::npos) throw Error(ErrorCode::ParseFailure, "block " + std::to_string(i) + " has no response");
        const auto next = "\n\n" + q_marker(i + 1);
        auto end = merged.find(next, r_pos + r.size());
        std::string point(merged.substr(pos + q.size(), r_pos - pos - q.size()));
        std::string response(merged.substr(r_pos + r.size(), (end == std::string_view::npos ? merged.size() : end) -
                                                                 r_pos - r.size()));
        out.emplace_back(std::move(point), std::move(response));
        pos = end == std::string_view::npos ? merged.size() : end + 2;
    }
    return out;
}

}  // namespace drpg::executor
