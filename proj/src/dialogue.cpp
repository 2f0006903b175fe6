#include "drpg/dialogue.hpp"

#include "drpg/corpus.hpp"
#include "drpg/text.hpp"

namespace drpg::dialogue {

DiscussionTranscript simulate_rounds(const Paper& paper, const Review& review, const pipeline::PipelineConfig& cfg,
                                     int rounds, const Providers& providers, const SimulateOptions& options) {
    if (rounds < 1) throw Error(ErrorCode::InvalidArgument, "rounds must be >= 1");
    const auto initial = options.initial_score ? options.initial_score : review.initial_score;
    if (!initial || !valid_score(*initial)) {
        throw Error(ErrorCode::InvalidArgument, "simulation needs an initial score in [1, 10]");
    }
    pipeline::validate(cfg);

    pipeline::RunOptions run_options;
    run_options.scorer = options.scorer;
    if (pipeline::uses_retriever(cfg.mode)) run_options.index = pipeline::make_index(paper, cfg, *providers.embedder);
    if (pipeline::uses_planner(cfg.mode) && !run_options.scorer) {
        run_options.scorer = pipeline::make_scorer(cfg, providers.embedder->dim(), providers.embedder->name());
    }

    DiscussionTranscript transcript;
    transcript.paper_id = paper.id;
    auto persist = [&] {
        if (options.out_dir) corpus::persist_artifact(transcript, *options.out_dir / "transcript.json");
    };

    Review current = review;
    int previous_score = *initial;
    for (int r = 1; r <= rounds; ++r) {
        if (options.out_dir) run_options.trace_dir = *options.out_dir / ("round-" + std::to_string(r));
        try {
            auto result = pipeline::run(paper, current, cfg, providers, run_options);
            auto verdict = evaluation::judge(current, result.rebuttal.merged_text, previous_score,
                                             providers.judge_chat(), "round-" + std::to_string(r),
                                             {cfg.judge.model_name, cfg.judge.temperature});
            transcript.rounds.push_back({current.text, std::move(result.rebuttal), verdict.score});
            persist();
            if (text::is_blank(verdict.rationale_cot)) break;
            previous_score = verdict.score;
            current.id = review.id + "-round-" + std::to_string(r + 1);
            current.text = std::move(verdict.rationale_cot);
            current.initial_score = previous_score;
            current.final_score.reset();
        } catch (...) {
            persist();
            throw;
        }
    }
    return transcript;
}

std::vector<int> score_trajectory(const DiscussionTranscript& transcript) {
    std::vector<int> out;
    out.reserve(transcript.rounds.size());
    for (const auto& r : transcript.rounds) out.push_back(r.judge_score);
    return out;
}

}  // namespace drpg::dialogue
