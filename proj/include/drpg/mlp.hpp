#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drpg/providers.hpp"
#include "drpg/retriever.hpp"
#include "drpg/types.hpp"

// The planner's scorer: a feed-forward network over the concatenation of a
// perspective embedding and a paragraph embedding, trained with a softmax
// cross-entropy over the candidate perspectives of one review point.
namespace drpg {

enum class Activation { Relu, Tanh, Identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
};

struct PlannerModel {
    std::size_t input_dim = 0;      // 2 x encoder dim
    std::vector<DenseLayer> layers;  // hidden layers then the 1-wide output
    Activation activation = Activation::Relu;  // hidden layers; output is linear
    std::uint64_t seed = 0;
    std::string encoder;

    std::size_t encoder_dim() const { return input_dim / 2; }
    // Output widths of every layer, the final 1 included.
    std::vector<std::size_t> widths() const;
    std::size_t parameter_count() const;
};

inline const std::vector<std::size_t> kDefaultHidden = {2048, 1024, 512};

// Weights and biases uniform in +-1/sqrt(fan_in), drawn from a seeded stream.
PlannerModel make_model(std::size_t encoder_dim, const std::vector<std::size_t>& hidden = kDefaultHidden,
                        Activation activation = Activation::Relu, std::uint64_t seed = 0, std::string encoder = "");

// Throws DimensionMismatch / InvalidArgument when shapes or values are off.
void validate(const PlannerModel& model);

// Same shapes as the model's layers.
struct Gradient {
    std::vector<DenseLayer> layers;

    static Gradient zeros_like(const PlannerModel& model);
    void add_scaled(const Gradient& other, double scale);
};

struct PlannerTrainingSample {
    std::vector<PerspectiveCandidate> candidates;
    std::size_t gt_index = 0;
    RetrievedContext context;
    std::vector<std::string> paragraph_texts;  // aligned to context.paragraph_indices
    std::vector<EmbeddingVector> candidate_vectors;
    std::vector<EmbeddingVector> paragraph_vectors;
    // Review scores of the thread the sample came from, when known.
    std::optional<int> initial_score;
    std::optional<int> final_score;
};

void to_json(nlohmann::json& j, const PlannerTrainingSample& s);
void from_json(const nlohmann::json& j, PlannerTrainingSample& s);

}  // namespace drpg

namespace drpg::planner {

// Scalar score of one (perspective, paragraph) pair.
double forward(const PlannerModel& model, const EmbeddingVector& pers_vec, const EmbeddingVector& para_vec);

// Column-batched pass: inputs is input_dim x C, result has C entries.
Eigen::RowVectorXd forward_columns(const PlannerModel& model, const Eigen::MatrixXd& inputs);

// N x K matrix of pair scores.
Eigen::MatrixXd pair_scores(const PlannerModel& model, std::span<const EmbeddingVector> perspectives,
                            std::span<const EmbeddingVector> paragraphs);

// Mean of each row of pair_scores: the supportive score per candidate.
std::vector<double> supportive_scores(const PlannerModel& model, std::span<const EmbeddingVector> perspectives,
                                      std::span<const EmbeddingVector> paragraphs);

// Throws IndexOutOfRange for a bad gt_index, InvalidArgument for empty or
// non-finite scores.
double ce_loss(std::span<const double> scores, std::size_t gt_index);

struct LossAndGradient {
    double loss = 0;
    Gradient gradient;
};

// Exact gradient of ce_loss over one sample's candidates, through the
// per-paragraph mean and the network.
LossAndGradient backward(const PlannerModel& model, const PlannerTrainingSample& sample);

// Mean loss and gradient over several samples, evaluated in one batched pass.
LossAndGradient batch_backward(const PlannerModel& model, std::span<const PlannerTrainingSample* const> samples);

enum class Optimizer { Sgd, Adam };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view s);

struct TrainConfig {
    std::size_t epochs = 3;
    std::size_t batch_size = 32;
    double learning_rate = 5e-5;
    Optimizer optimizer = Optimizer::Sgd;
    std::uint64_t shuffle_seed = 0;
    // Stop after this many parameter updates; unset means no cap.
    std::optional<std::size_t> max_steps;
};

struct TrainMetrics {
    std::vector<double> epoch_losses;  // mean training loss seen during each epoch
    double baseline_accuracy = 0;      // held-out accuracy before training
    double heldout_accuracy = 0;
    std::size_t steps = 0;
};

struct TrainResult {
    PlannerModel model;
    TrainMetrics metrics;
};

// Fraction of samples whose highest supportive score is the ground truth.
double selection_accuracy(const PlannerModel& model, std::span<const PlannerTrainingSample> samples);

TrainResult train(PlannerModel model, std::span<const PlannerTrainingSample> samples, const TrainConfig& cfg,
                  std::span<const PlannerTrainingSample> heldout = {});

// Checkpoint, little-endian:
//   "DRPGMLP1"  u32 version  u32 input_dim  u32 layer_count
//   u32 width[layer_count]  str activation  u64 seed  str encoder
//   per layer: out x in f64 weights (row-major), then out f64 bias
// where str is a u32 byte length followed by UTF-8 bytes.
void save_checkpoint(const PlannerModel& model, const std::filesystem::path& path);
PlannerModel load_checkpoint(const std::filesystem::path& path);

}  // namespace drpg::planner
