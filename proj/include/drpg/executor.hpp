#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drpg/prompts.hpp"
#include "drpg/providers.hpp"
#include "drpg/types.hpp"

namespace drpg::executor {

struct ExecuteOptions {
    std::string model_name;
    double temperature = 0.0;
};

// The exact request respond_point sends. The perspective section is present
// iff perspective is set.
GenerationRequest point_request(const ReviewPoint& point, const std::vector<prompts::ContextParagraph>& context,
                                const std::optional<PerspectiveCandidate>& perspective,
                                const ExecuteOptions& options = {});

// Throws EmptyContext for an empty context.
RebuttalUnit respond_point(const ReviewPoint& point, const std::vector<prompts::ContextParagraph>& context,
                           const std::optional<PerspectiveCandidate>& perspective, ChatProvider& chat,
                           const ExecuteOptions& options = {});

GenerationRequest whole_request(const Review& review, const Paper& paper, const ExecuteOptions& options = {});

// One generation over the whole review and the full paper; a one-unit
// rebuttal whose merged text is the completion itself.
Rebuttal respond_whole(const Review& review, const Paper& paper, ChatProvider& chat,
                       const ExecuteOptions& options = {});

// Units must be sorted by point_index. Each becomes a numbered block
//   **Q{i}:** <point text>
//   **R{i}:** <response>
// with blocks separated by a blank line and i counting from 1.
Rebuttal merge(std::string review_id, std::vector<RebuttalUnit> units);

// Inverse of merge's layout: (point text, response) per block, in order.
// Throws ParseFailure when the text does not follow the layout.
std::vector<std::pair<std::string, std::string>> split_merged(std::string_view merged_text);

}  // namespace drpg::executor
