#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "drpg/mlp.hpp"
#include "drpg/providers.hpp"
#include "drpg/retriever.hpp"
#include "drpg/types.hpp"

namespace drpg::planner {

// ---------------------------------------------------------------------------
// Proposal

struct ProposeOptions {
    std::size_t max_candidates = 5;
    std::string model_name;
    double temperature = 0.7;
};

struct ProposalResult {
    std::vector<PerspectiveCandidate> candidates;
    std::vector<std::string> errors;  // one message per rejected entry
};

// "Clarification: ..." or "Justification: ..." (case-insensitive tag).
// Returns nullopt for an untagged or empty entry.
std::optional<PerspectiveCandidate> parse_tagged(std::string_view entry, PerspectiveSource source);

// Asks for perspectives from the point alone; no paper text is sent. The
// first max_candidates entries are parsed; bad entries are reported in
// errors. Throws ParseFailure when nothing usable comes back.
ProposalResult propose_perspectives(const ReviewPoint& point, ChatProvider& chat, const ProposeOptions& options = {});

// ---------------------------------------------------------------------------
// Scoring

// Pair scorer behind the supportive score. supportive() is the row mean of
// pairs() and needs at least one paragraph.
class PerspectiveScorer {
public:
    virtual ~PerspectiveScorer() = default;
    virtual Eigen::MatrixXd pairs(std::span<const EmbeddingVector> perspectives,
                                  std::span<const EmbeddingVector> paragraphs) const = 0;
    virtual std::string name() const = 0;

    std::vector<double> supportive(std::span<const EmbeddingVector> perspectives,
                                   std::span<const EmbeddingVector> paragraphs) const;
};

class MlpScorer : public PerspectiveScorer {
public:
    explicit MlpScorer(std::shared_ptr<const PlannerModel> model);
    Eigen::MatrixXd pairs(std::span<const EmbeddingVector> perspectives,
                          std::span<const EmbeddingVector> paragraphs) const override;
    std::string name() const override { return "mlp"; }
    const PlannerModel& model() const { return *model_; }

private:
    std::shared_ptr<const PlannerModel> model_;
};

// Training-free: cosine between perspective and paragraph embeddings.
class EncoderScorer : public PerspectiveScorer {
public:
    Eigen::MatrixXd pairs(std::span<const EmbeddingVector> perspectives,
                          std::span<const EmbeddingVector> paragraphs) const override;
    std::string name() const override { return "encoder"; }
};

// Mean model score of one perspective over the given paragraph texts.
double supportive_score(const PlannerModel& model, const PerspectiveCandidate& perspective,
                        const std::vector<std::string>& paragraphs, Embedder& embedder);

// ---------------------------------------------------------------------------
// Selection

struct SelectionOutcome {
    std::optional<PerspectiveCandidate> chosen;
    std::size_t best_index = 0;  // argmax, reported even on fallback
    double confidence = 0;
    std::vector<double> all_scores;
    bool fell_back = true;

    friend bool operator==(const SelectionOutcome&, const SelectionOutcome&) = default;
};

void to_json(nlohmann::json& j, const SelectionOutcome& s);
void from_json(const nlohmann::json& j, SelectionOutcome& s);

std::vector<double> softmax(std::span<const double> scores);

// Argmax with ties to the lowest index; the candidate is kept iff its
// softmax probability reaches threshold.
SelectionOutcome select(const std::vector<PerspectiveCandidate>& candidates, std::span<const double> scores,
                        double threshold);

double selection_accuracy(const PerspectiveScorer& scorer, std::span<const PlannerTrainingSample> samples);

// ---------------------------------------------------------------------------
// Interpretability

inline constexpr double kDisplayCutoff = 0.2;

struct ScoreMatrix {
    Eigen::MatrixXd raw;         // candidates x paragraphs
    Eigen::MatrixXd normalized;  // logistic sigmoid of raw
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> shown;  // normalized >= kDisplayCutoff
};

ScoreMatrix score_matrix(const Eigen::MatrixXd& raw);
ScoreMatrix score_matrix(const PerspectiveScorer& scorer, const std::vector<PerspectiveCandidate>& candidates,
                         const std::vector<std::string>& paragraphs, Embedder& embedder);

// ---------------------------------------------------------------------------
// Ablations

enum class AblationVariant { NoPaper, FullPaper, Encoder };

std::string_view to_string(AblationVariant v);
AblationVariant parse_ablation_variant(std::string_view s);

// NoPaper: each perspective against an all-zero paragraph slot.
// FullPaper: mean over every paper paragraph rather than the retrieved set.
// Encoder: mean cosine over the retrieved set; the model is unused.
std::vector<double> ablation_score(AblationVariant variant, const PlannerModel& model,
                                   std::span<const EmbeddingVector> perspectives,
                                   std::span<const EmbeddingVector> retrieved,
                                   std::span<const EmbeddingVector> full_paper);

// Rewrites a sample's paragraph inputs the way the variant sees them, so the
// variant can be trained and scored with the regular routines. Encoder
// samples are unchanged.
PlannerTrainingSample to_variant_sample(const PlannerTrainingSample& sample, AblationVariant variant,
                                        std::span<const EmbeddingVector> full_paper);

// ---------------------------------------------------------------------------
// Training data

struct ExtractOptions {
    std::string model_name;
    double temperature = 0.0;
};

// Labels the perspective a human rebuttal took for one point.
PerspectiveCandidate extract_ground_truth_perspective(const ReviewPoint& point, std::string_view rebuttal_text,
                                                      ChatProvider& chat, const ExtractOptions& options = {});

// Only threads whose score went up are used for training.
bool eligible_for_training(const Review& review);

// Inserts the ground truth among the proposed candidates at a position drawn
// from seed and the point text, then embeds every candidate and paragraph.
PlannerTrainingSample make_training_sample(const ReviewPoint& point, std::vector<PerspectiveCandidate> proposed,
                                           PerspectiveCandidate ground_truth, const RetrievedContext& context,
                                           const Paper& paper, Embedder& embedder, std::uint64_t seed);

// Throws SchemaViolation unless exactly one candidate is the ground truth
// and it sits at gt_index, and cached vectors (if any) align with texts.
void validate(const PlannerTrainingSample& sample);

// Embeds candidate and paragraph texts for samples loaded without vectors.
void ensure_embeddings(PlannerTrainingSample& sample, Embedder& embedder);

}  // namespace drpg::planner
