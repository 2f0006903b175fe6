#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drpg/corpus.hpp"
#include "drpg/mlp.hpp"
#include "drpg/planner.hpp"
#include "drpg/providers.hpp"
#include "drpg/retriever.hpp"
#include "drpg/types.hpp"

namespace drpg::pipeline {

// Component chains:
//   Direct  whole-review executor over the full paper
//   Decomp  decompose, answer each point with the full paper as context
//   DRG     decompose, retrieve, answer
//   DRPG    decompose, retrieve, plan, answer
//   DRPG-C / DRPG-J  DRPG restricted to one perspective kind
enum class Mode { Direct, Decomp, Drg, Drpg, DrpgC, DrpgJ };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);  // "direct", "decomp", "drg", "drpg", "drpg-c", "drpg-j"

bool uses_decomposer(Mode m);
bool uses_retriever(Mode m);
bool uses_planner(Mode m);

struct RoleSettings {
    std::string model_name;
    double temperature = 0.0;
};

struct PlannerSettings {
    std::string checkpoint;  // empty: a freshly initialized model seeded from the run seed
    std::vector<std::size_t> hidden = kDefaultHidden;
    Activation activation = Activation::Relu;
};

struct PipelineConfig {
    Mode mode = Mode::Drpg;
    std::size_t k = 15;
    double threshold = 0.8;
    std::size_t max_candidates = 5;
    RoleSettings decomposer;
    RoleSettings proposer{"", 0.7};
    RoleSettings executor;
    RoleSettings judge;
    RoleSettings extractor;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;  // concurrent points
    std::string index_cache_dir;  // empty: no on-disk cache
    PlannerSettings planner;
    planner::TrainConfig training;
    ProviderConfig provider;
    corpus::SegmentationPolicy segmentation;
};

// Throws ConfigError.
void validate(const PipelineConfig& cfg);

// Every key is optional; unknown keys are a ConfigError.
void to_json(nlohmann::json& j, const PipelineConfig& cfg);
void from_json(const nlohmann::json& j, PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Trace

struct CandidateRecord {
    std::size_t point_index = 0;
    std::vector<PerspectiveCandidate> candidates;  // after any kind filter
    std::vector<std::string> errors;
};

struct ScoreRecord {
    std::size_t point_index = 0;
    std::string scorer;
    std::vector<std::vector<double>> pairs;  // candidates x context paragraphs
    std::vector<double> supportive;
};

struct SelectionRecord {
    std::size_t point_index = 0;
    planner::SelectionOutcome outcome;
};

struct PromptRecord {
    std::optional<std::size_t> point_index;  // absent for the whole-review prompt
    std::string system_prompt;
    std::string user_prompt;
};

struct FailureRecord {
    std::optional<std::size_t> point_index;
    std::string stage;
    std::string code;
    std::string message;
};

struct RunTrace {
    Mode mode = Mode::Drpg;
    std::string paper_id;
    std::string review_id;
    nlohmann::json config;
    bool complete = false;
    std::size_t embed_calls = 0;
    // Stages that ran; only those get files.
    bool decomposed = false;
    bool retrieved = false;
    bool planned = false;

    std::vector<ReviewPoint> points;
    std::vector<RetrievedContext> contexts;
    std::vector<CandidateRecord> candidates;
    std::vector<ScoreRecord> scores;
    std::vector<SelectionRecord> selections;
    std::vector<PromptRecord> prompts;
    std::vector<FailureRecord> failures;
    std::vector<RebuttalUnit> units;
};

void to_json(nlohmann::json& j, const CandidateRecord& r);
void from_json(const nlohmann::json& j, CandidateRecord& r);
void to_json(nlohmann::json& j, const ScoreRecord& r);
void from_json(const nlohmann::json& j, ScoreRecord& r);
void to_json(nlohmann::json& j, const SelectionRecord& r);
void from_json(const nlohmann::json& j, SelectionRecord& r);
void to_json(nlohmann::json& j, const PromptRecord& r);
void from_json(const nlohmann::json& j, PromptRecord& r);
void to_json(nlohmann::json& j, const FailureRecord& r);
void from_json(const nlohmann::json& j, FailureRecord& r);

// Directory layout: run.json plus one JSONL file per stage that ran
// (points, contexts, candidates, scores, selections, prompts, units,
// failures). Existing files of the same names are replaced.
void write_trace(const RunTrace& trace, const std::filesystem::path& dir);
RunTrace load_trace(const std::filesystem::path& dir);

// Fraction of points answered with a perspective. WrongMode outside the
// DRPG family.
double perspective_usage(const RunTrace& trace);

// ---------------------------------------------------------------------------

struct RunOptions {
    // Perspective scorer for planner modes; when null one is built from
    // cfg.planner.
    std::shared_ptr<const planner::PerspectiveScorer> scorer;
    // Prebuilt paragraph index of this paper, reused instead of embedding.
    std::shared_ptr<const EmbeddingIndex> index;
    // When set the trace is written here, also after a failure.
    std::optional<std::filesystem::path> trace_dir;
};

struct RunResult {
    Rebuttal rebuttal;
    RunTrace trace;
};

std::shared_ptr<const planner::PerspectiveScorer> make_scorer(const PipelineConfig& cfg, std::size_t encoder_dim,
                                                              const std::string& encoder_name);

// Paragraph index for the paper, through the configured cache if any.
std::shared_ptr<const EmbeddingIndex> make_index(const Paper& paper, const PipelineConfig& cfg, Embedder& embedder);

RunResult run(const Paper& paper, const Review& review, const PipelineConfig& cfg, const Providers& providers,
              const RunOptions& options = {});

struct SampleBuild {
    std::vector<PlannerTrainingSample> samples;
    std::vector<std::string> skipped;  // one note per point left out
};

// Planner training data from one review thread and the authors' rebuttal:
// decompose, retrieve, propose, and label the perspective the rebuttal took.
// Threads whose score did not go up are rejected with InvalidArgument.
SampleBuild build_training_samples(const Paper& paper, const Review& review, std::string_view rebuttal_text,
                                   const PipelineConfig& cfg, const Providers& providers);

}  // namespace drpg::pipeline
