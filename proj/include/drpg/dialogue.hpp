#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "drpg/evaluation.hpp"
#include "drpg/pipeline.hpp"
#include "drpg/types.hpp"

namespace drpg::dialogue {

inline constexpr int kDefaultRounds = 3;

struct SimulateOptions {
    // Score the judge treats as the original one in round 1; defaults to the
    // review's initial_score.
    std::optional<int> initial_score;
    std::shared_ptr<const planner::PerspectiveScorer> scorer;
    // transcript.json after every round, plus round-N/ run traces.
    std::optional<std::filesystem::path> out_dir;
};

// Round 1 answers the review. Every later round answers the previous judge's
// reasoning, and the judge sees the previous round's score as the original
// one. The paper index is built once. Stops early when the judge gives no
// reasoning.
DiscussionTranscript simulate_rounds(const Paper& paper, const Review& review, const pipeline::PipelineConfig& cfg,
                                     int rounds, const Providers& providers, const SimulateOptions& options = {});

std::vector<int> score_trajectory(const DiscussionTranscript& transcript);

}  // namespace drpg::dialogue
