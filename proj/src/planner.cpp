#include "drpg/planner.hpp"

#include <algorithm>
#include <cmath>

#include "drpg/decomposer.hpp"
#include "drpg/json_util.hpp"
#include "drpg/prompts.hpp"
#include "drpg/text.hpp"

namespace drpg::planner {

// ---------------------------------------------------------------------------
// Proposal

std::optional<PerspectiveCandidate> parse_tagged(std::string_view entry, PerspectiveSource source) {
    const auto s = text::trim(entry);
    const auto colon = s.find(':');
    if (colon == std::string::npos) return std::nullopt;
    auto kind = parse_perspective_kind(text::trim(std::string_view(s).substr(0, colon)));
    if (!kind) return std::nullopt;
    auto body = text::trim(std::string_view(s).substr(colon + 1));
    if (body.empty()) return std::nullopt;
    return PerspectiveCandidate{std::move(body), *kind, source};
}

ProposalResult propose_perspectives(const ReviewPoint& point, ChatProvider& chat, const ProposeOptions& options) {
    if (text::is_blank(point.text)) throw Error(ErrorCode::InvalidArgument, "review point text is blank");
    if (options.max_candidates < 1) throw Error(ErrorCode::ConfigError, "max_candidates must be >= 1");
    GenerationRequest req;
    req.system_prompt = std::string(prompts::kPerspectiveProposer);
    req.user_prompt = prompts::proposer_user(point.text);
    req.temperature = options.temperature;
    req.model_name = options.model_name;
    auto entries = decomposer::extract_array(chat.generate(req));
    if (entries.size() > options.max_candidates) entries.resize(options.max_candidates);

    ProposalResult result;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (auto c = parse_tagged(entries[i], PerspectiveSource::Proposed)) {
            result.candidates.push_back(std::move(*c));
        } else {
            result.errors.push_back("entry " + std::to_string(i) + " has no Clarification/Justification tag: \"" +
                                    entries[i] + "\"");
        }
    }
    if (result.candidates.empty()) {
        throw Error(ErrorCode::ParseFailure, "proposer returned no tagged perspectives for point " +
                                                 std::to_string(point.index));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Scoring

std::vector<double> PerspectiveScorer::supportive(std::span<const EmbeddingVector> perspectives,
                                                  std::span<const EmbeddingVector> paragraphs) const {
    if (paragraphs.empty()) throw Error(ErrorCode::EmptyContext, "supportive score needs at least one paragraph");
    const auto m = pairs(perspectives, paragraphs);
    std::vector<double> out(perspectives.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.row(static_cast<Eigen::Index>(i)).mean();
    return out;
}

MlpScorer::MlpScorer(std::shared_ptr<const PlannerModel> model) : model_(std::move(model)) {
    if (!model_) throw Error(ErrorCode::InvalidArgument, "null planner model");
    drpg::validate(*model_);
}

Eigen::MatrixXd MlpScorer::pairs(std::span<const EmbeddingVector> perspectives,
                                 std::span<const EmbeddingVector> paragraphs) const {
    return pair_scores(*model_, perspectives, paragraphs);
}

Eigen::MatrixXd EncoderScorer::pairs(std::span<const EmbeddingVector> perspectives,
                                     std::span<const EmbeddingVector> paragraphs) const {
    Eigen::MatrixXd m(perspectives.size(), paragraphs.size());
    for (std::size_t i = 0; i < perspectives.size(); ++i) {
        for (std::size_t j = 0; j < paragraphs.size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                retriever::cosine(perspectives[i], paragraphs[j]);
        }
    }
    return m;
}

double supportive_score(const PlannerModel& model, const PerspectiveCandidate& perspective,
                        const std::vector<std::string>& paragraphs, Embedder& embedder) {
    if (paragraphs.empty()) throw Error(ErrorCode::EmptyContext, "supportive score needs at least one paragraph");
    const auto pers = embedder.embed_one(perspective.text);
    const auto paras = embedder.embed(paragraphs);
    return supportive_scores(model, std::span(&pers, 1), paras)[0];
}

// ---------------------------------------------------------------------------
// Selection

void to_json(nlohmann::json& j, const SelectionOutcome& s) {
    j = nlohmann::json{{"best_index", s.best_index},
                       {"confidence", s.confidence},
                       {"all_scores", s.all_scores},
                       {"fell_back", s.fell_back}};
    j["chosen"] = s.chosen ? nlohmann::json(*s.chosen) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SelectionOutcome& s) {
    s.chosen = json_util::get_optional<PerspectiveCandidate>(j, "chosen");
    s.best_index = json_util::get<std::size_t>(j, "best_index");
    s.confidence = json_util::get<double>(j, "confidence");
    s.all_scores = json_util::get<std::vector<double>>(j, "all_scores");
    s.fell_back = json_util::get<bool>(j, "fell_back");
    if (s.fell_back == s.chosen.has_value()) {
        throw Error(ErrorCode::SchemaViolation, "fell_back must hold exactly when no perspective is chosen");
    }
}

std::vector<double> softmax(std::span<const double> scores) {
    if (scores.empty()) return {};
    const double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(scores[i] - mx);
    for (auto& x : p) x /= sum;
    return p;
}

SelectionOutcome select(const std::vector<PerspectiveCandidate>& candidates, std::span<const double> scores,
                        double threshold) {
    if (candidates.empty()) throw Error(ErrorCode::EmptySet, "no candidates to select from");
    if (scores.size() != candidates.size()) {
        throw Error(ErrorCode::DimensionMismatch, "score count differs from candidate count");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "non-finite candidate score");
    }
    SelectionOutcome out;
    out.all_scores.assign(scores.begin(), scores.end());
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[out.best_index]) out.best_index = i;
    }
    out.confidence = softmax(scores)[out.best_index];
    out.fell_back = out.confidence < threshold;
    if (!out.fell_back) out.chosen = candidates[out.best_index];
    return out;
}

double selection_accuracy(const PerspectiveScorer& scorer, std::span<const PlannerTrainingSample> samples) {
    if (samples.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& s : samples) {
        auto scores = scorer.supportive(s.candidate_vectors, s.paragraph_vectors);
        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i) {
            if (scores[i] > scores[best]) best = i;
        }
        if (best == s.gt_index) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Interpretability

ScoreMatrix score_matrix(const Eigen::MatrixXd& raw) {
    ScoreMatrix m;
    m.raw = raw;
    m.normalized = raw.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    m.shown = (m.normalized.array() >= kDisplayCutoff).matrix();
    return m;
}

ScoreMatrix score_matrix(const PerspectiveScorer& scorer, const std::vector<PerspectiveCandidate>& candidates,
                         const std::vector<std::string>& paragraphs, Embedder& embedder) {
    if (paragraphs.empty()) throw Error(ErrorCode::EmptyContext, "score matrix needs at least one paragraph");
    std::vector<std::string> texts;
    for (const auto& c : candidates) texts.push_back(c.text);
    const auto pers = embedder.embed(texts);
    const auto paras = embedder.embed(paragraphs);
    return score_matrix(scorer.pairs(pers, paras));
}

// ---------------------------------------------------------------------------
// Ablations

std::string_view to_string(AblationVariant v) {
    switch (v) {
        case AblationVariant::NoPaper: return "no-paper";
        case AblationVariant::FullPaper: return "full-paper";
        case AblationVariant::Encoder: return "encoder";
    }
    return "encoder";
}

AblationVariant parse_ablation_variant(std::string_view s) {
    if (s == "no-paper") return AblationVariant::NoPaper;
    if (s == "full-paper") return AblationVariant::FullPaper;
    if (s == "encoder") return AblationVariant::Encoder;
    throw Error(ErrorCode::ConfigError, "unknown ablation variant \"" + std::string(s) + "\"");
}

namespace {

EmbeddingVector zero_slot(std::size_t dim) { return EmbeddingVector{std::vector<double>(dim, 0.0)}; }

}  // namespace

std::vector<double> ablation_score(AblationVariant variant, const PlannerModel& model,
                                   std::span<const EmbeddingVector> perspectives,
                                   std::span<const EmbeddingVector> retrieved,
                                   std::span<const EmbeddingVector> full_paper) {
    switch (variant) {
        case AblationVariant::NoPaper: {
            const auto zero = zero_slot(model.encoder_dim());
            return supportive_scores(model, perspectives, std::span(&zero, 1));
        }
        case AblationVariant::FullPaper:
            return supportive_scores(model, perspectives, full_paper);
        case AblationVariant::Encoder:
            return EncoderScorer{}.supportive(perspectives, retrieved);
    }
    return {};
}

PlannerTrainingSample to_variant_sample(const PlannerTrainingSample& sample, AblationVariant variant,
                                        std::span<const EmbeddingVector> full_paper) {
    PlannerTrainingSample out = sample;
    if (variant == AblationVariant::NoPaper) {
        const auto dim = sample.candidate_vectors.empty() ? 0 : sample.candidate_vectors.front().dim();
        out.paragraph_vectors = {zero_slot(dim)};
        out.paragraph_texts.clear();
    } else if (variant == AblationVariant::FullPaper) {
        if (full_paper.empty()) throw Error(ErrorCode::EmptyContext, "full-paper variant needs paper paragraphs");
        out.paragraph_vectors.assign(full_paper.begin(), full_paper.end());
        out.paragraph_texts.clear();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training data

PerspectiveCandidate extract_ground_truth_perspective(const ReviewPoint& point, std::string_view rebuttal_text,
                                                      ChatProvider& chat, const ExtractOptions& options) {
    if (text::is_blank(rebuttal_text)) throw Error(ErrorCode::InvalidArgument, "rebuttal text is blank");
    GenerationRequest req;
    req.system_prompt = std::string(prompts::kGroundTruthExtraction);
    req.user_prompt = prompts::ground_truth_user(point.text, rebuttal_text);
    req.temperature = options.temperature;
    req.model_name = options.model_name;
    for (const auto& entry : decomposer::extract_array(chat.generate(req))) {
        if (auto c = parse_tagged(entry, PerspectiveSource::GroundTruth)) return *c;
    }
    throw Error(ErrorCode::ParseFailure, "no tagged perspective in extraction output for point " +
                                             std::to_string(point.index));
}

bool eligible_for_training(const Review& review) {
    return review.initial_score && review.final_score && *review.final_score > *review.initial_score;
}

PlannerTrainingSample make_training_sample(const ReviewPoint& point, std::vector<PerspectiveCandidate> proposed,
                                           PerspectiveCandidate ground_truth, const RetrievedContext& context,
                                           const Paper& paper, Embedder& embedder, std::uint64_t seed) {
    if (context.paragraph_indices.empty()) throw Error(ErrorCode::EmptyContext, "training sample needs context");
    for (auto& c : proposed) c.source = PerspectiveSource::Proposed;
    ground_truth.source = PerspectiveSource::GroundTruth;

    PlannerTrainingSample s;
    s.gt_index = text::mix64(seed ^ text::fnv1a64(point.text)) % (proposed.size() + 1);
    s.candidates = std::move(proposed);
    s.candidates.insert(s.candidates.begin() + static_cast<std::ptrdiff_t>(s.gt_index), std::move(ground_truth));
    s.context = context;
    for (auto idx : context.paragraph_indices) {
        if (idx >= paper.paragraphs.size()) throw Error(ErrorCode::IndexOutOfRange, "context paragraph not in paper");
        s.paragraph_texts.push_back(paper.paragraphs[idx].text);
    }
    ensure_embeddings(s, embedder);
    return s;
}

void validate(const PlannerTrainingSample& s) {
    if (s.candidates.empty()) throw Error(ErrorCode::SchemaViolation, "sample has no candidates");
    if (s.gt_index >= s.candidates.size()) throw Error(ErrorCode::SchemaViolation, "gt_index out of range");
    std::size_t gt_count = 0;
    for (const auto& c : s.candidates) gt_count += c.source == PerspectiveSource::GroundTruth;
    if (gt_count != 1 || s.candidates[s.gt_index].source != PerspectiveSource::GroundTruth) {
        throw Error(ErrorCode::SchemaViolation, "exactly one ground-truth candidate must sit at gt_index");
    }
    if (!s.candidate_vectors.empty() && s.candidate_vectors.size() != s.candidates.size()) {
        throw Error(ErrorCode::SchemaViolation, "candidate embeddings do not align with candidates");
    }
    if (!s.paragraph_texts.empty() && !s.paragraph_vectors.empty() &&
        s.paragraph_vectors.size() != s.paragraph_texts.size()) {
        throw Error(ErrorCode::SchemaViolation, "paragraph embeddings do not align with paragraph texts");
    }
}

void ensure_embeddings(PlannerTrainingSample& s, Embedder& embedder) {
    if (s.candidate_vectors.empty()) {
        std::vector<std::string> texts;
        for (const auto& c : s.candidates) texts.push_back(c.text);
        s.candidate_vectors = embedder.embed(texts);
    }
    if (s.paragraph_vectors.empty()) {
        if (s.paragraph_texts.empty()) throw Error(ErrorCode::EmptyContext, "sample has no paragraph texts to embed");
        s.paragraph_vectors = embedder.embed(s.paragraph_texts);
    }
}

}  // namespace drpg::planner
