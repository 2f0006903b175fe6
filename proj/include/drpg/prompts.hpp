#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drpg/types.hpp"

// System prompts for every model role, and the builders for the matching
// user messages. System prompt texts are fixed wording that downstream
// parsers rely on; the user-message layouts are local choices.
namespace drpg::prompts {

extern const std::string_view kDecomposer;
extern const std::string_view kPerspectiveProposer;
extern const std::string_view kExecutorWhole;
extern const std::string_view kExecutorPoint;
extern const std::string_view kJudge;
extern const std::string_view kCompare;
extern const std::string_view kScoreRecovery;
// Outside the runtime pipeline: distills the perspective a human rebuttal
// took for one point, to label planner training data.
extern const std::string_view kGroundTruthExtraction;

// Appended to the user message on a repair retry.
extern const std::string_view kArrayOnlyReminder;
extern const std::string_view kVerdictReminder;

// Header that opens the perspective section of a per-point executor prompt.
extern const std::string_view kPerspectiveHeader;

std::string decomposer_user(std::string_view review_text);
std::string proposer_user(std::string_view point_text);

struct ContextParagraph {
    std::size_t index = 0;
    std::string text;
};

std::string executor_point_user(std::string_view point_text,
                                const std::vector<ContextParagraph>& context,
                                const std::optional<PerspectiveCandidate>& perspective);
std::string executor_whole_user(std::string_view paper_text, std::string_view review_text);
std::string judge_user(std::string_view review_text, std::string_view rebuttal_text, int original_score);
std::string compare_user(std::string_view review_text, std::string_view first, std::string_view second);
std::string score_recovery_user(std::string_view discussion_text, int final_score);
std::string ground_truth_user(std::string_view point_text, std::string_view rebuttal_text);

}  // namespace drpg::prompts
