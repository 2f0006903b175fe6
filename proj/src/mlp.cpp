#include "drpg/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "drpg/json_util.hpp"
#include "drpg/text.hpp"

namespace drpg {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "relu";
}

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "identity") return Activation::Identity;
    throw Error(ErrorCode::ConfigError, "unknown activation \"" + std::string(s) + "\"");
}

std::vector<std::size_t> PlannerModel::widths() const {
    std::vector<std::size_t> w;
    for (const auto& l : layers) w.push_back(static_cast<std::size_t>(l.weights.rows()));
    return w;
}

std::size_t PlannerModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

PlannerModel make_model(std::size_t encoder_dim, const std::vector<std::size_t>& hidden, Activation activation,
                        std::uint64_t seed, std::string encoder) {
    if (encoder_dim < 1) throw Error(ErrorCode::InvalidArgument, "encoder dim must be positive");
    PlannerModel model;
    model.input_dim = 2 * encoder_dim;
    model.activation = activation;
    model.seed = seed;
    model.encoder = std::move(encoder);
    std::mt19937_64 rng(seed);
    auto uniform = [&](double bound) {
        return (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0) * bound;
    };
    std::size_t fan_in = model.input_dim;
    auto widths = hidden;
    widths.push_back(1);
    for (auto out : widths) {
        if (out < 1) throw Error(ErrorCode::InvalidArgument, "layer widths must be positive");
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        DenseLayer layer{Eigen::MatrixXd(out, fan_in), Eigen::VectorXd(out)};
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = uniform(bound);
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = uniform(bound);
        model.layers.push_back(std::move(layer));
        fan_in = out;
    }
    return model;
}

void validate(const PlannerModel& model) {
    if (model.input_dim == 0 || model.input_dim % 2 != 0) {
        throw Error(ErrorCode::InvalidArgument, "model input width must be a positive even number");
    }
    if (model.layers.empty()) throw Error(ErrorCode::InvalidArgument, "model has no layers");
    auto fan_in = static_cast<Eigen::Index>(model.input_dim);
    for (const auto& l : model.layers) {
        if (l.weights.cols() != fan_in || l.bias.size() != l.weights.rows()) {
            throw Error(ErrorCode::DimensionMismatch, "layer shapes do not chain");
        }
        if (!l.weights.allFinite() || !l.bias.allFinite()) {
            throw Error(ErrorCode::InvalidArgument, "model has non-finite parameters");
        }
        fan_in = l.weights.rows();
    }
    if (fan_in != 1) throw Error(ErrorCode::DimensionMismatch, "output layer must have width 1");
}

Gradient Gradient::zeros_like(const PlannerModel& model) {
    Gradient g;
    for (const auto& l : model.layers) {
        g.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                            Eigen::VectorXd::Zero(l.bias.size())});
    }
    return g;
}

void Gradient::add_scaled(const Gradient& other, double scale) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].weights += scale * other.layers[i].weights;
        layers[i].bias += scale * other.layers[i].bias;
    }
}

namespace {

using nlohmann::json;

json vectors_to_json(const std::vector<EmbeddingVector>& vs) {
    json arr = json::array();
    for (const auto& v : vs) arr.push_back(v.values);
    return arr;
}

std::vector<EmbeddingVector> vectors_from_json(const json& j, const char* name) {
    std::vector<EmbeddingVector> out;
    for (auto& row : json_util::get<std::vector<std::vector<double>>>(j, name)) out.push_back({std::move(row)});
    return out;
}

}  // namespace

void to_json(json& j, const PlannerTrainingSample& s) {
    j = json{{"candidates", s.candidates},
             {"gt_index", s.gt_index},
             {"context", s.context},
             {"paragraph_texts", s.paragraph_texts}};
    if (!s.candidate_vectors.empty()) j["candidate_embeddings"] = vectors_to_json(s.candidate_vectors);
    if (!s.paragraph_vectors.empty()) j["paragraph_embeddings"] = vectors_to_json(s.paragraph_vectors);
    if (s.initial_score) j["initial_score"] = *s.initial_score;
    if (s.final_score) j["final_score"] = *s.final_score;
}

void from_json(const json& j, PlannerTrainingSample& s) {
    s.candidates = json_util::get<std::vector<PerspectiveCandidate>>(j, "candidates");
    s.gt_index = json_util::get<std::size_t>(j, "gt_index");
    s.context = json_util::field(j, "context").get<RetrievedContext>();
    s.paragraph_texts = json_util::get_optional<std::vector<std::string>>(j, "paragraph_texts").value_or(
        std::vector<std::string>{});
    s.candidate_vectors = j.contains("candidate_embeddings") ? vectors_from_json(j, "candidate_embeddings")
                                                             : std::vector<EmbeddingVector>{};
    s.paragraph_vectors = j.contains("paragraph_embeddings") ? vectors_from_json(j, "paragraph_embeddings")
                                                             : std::vector<EmbeddingVector>{};
    s.initial_score = json_util::get_optional<int>(j, "initial_score");
    s.final_score = json_util::get_optional<int>(j, "final_score");
    if (s.gt_index >= s.candidates.size()) throw Error(ErrorCode::SchemaViolation, "gt_index out of range");
}

}  // namespace drpg

namespace drpg::planner {

namespace {

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
        case Activation::Relu: return z.cwiseMax(0.0);
        case Activation::Tanh: return z.array().tanh().matrix();
        case Activation::Identity: return z;
    }
    return z;
}

// Derivative expressed through the pre-activation z.
Eigen::MatrixXd activate_grad(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
        case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
        case Activation::Tanh: return (1.0 - z.array().tanh().square()).matrix();
        case Activation::Identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;   // z per layer
    std::vector<Eigen::MatrixXd> post;  // input of each layer (post[0] = inputs)
};

Eigen::RowVectorXd run_forward(const PlannerModel& model, const Eigen::MatrixXd& inputs, ForwardCache* cache) {
    if (static_cast<std::size_t>(inputs.rows()) != model.input_dim) {
        throw Error(ErrorCode::DimensionMismatch, "input width " + std::to_string(inputs.rows()) +
                                                      " != model input " + std::to_string(model.input_dim));
    }
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        Eigen::MatrixXd z = layer.weights * a;
        z.colwise() += layer.bias;
        const bool last = l + 1 == model.layers.size();
        if (cache) {
            cache->post.push_back(std::move(a));
            cache->pre.push_back(z);
        }
        a = last ? std::move(z) : activate(model.activation, z);
    }
    return a.row(0);
}

void check_vec(const PlannerModel& model, const EmbeddingVector& v) {
    if (v.dim() != model.encoder_dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "embedding width " + std::to_string(v.dim()) + " != model encoder dim " +
                        std::to_string(model.encoder_dim()));
    }
}

Eigen::Map<const Eigen::VectorXd> as_eigen(const EmbeddingVector& v) {
    return {v.values.data(), static_cast<Eigen::Index>(v.values.size())};
}

// Column block for one sample: candidate-major, paragraph-minor.
void fill_pairs(Eigen::MatrixXd& inputs, Eigen::Index col0, std::span<const EmbeddingVector> perspectives,
                std::span<const EmbeddingVector> paragraphs) {
    const auto d = static_cast<Eigen::Index>(inputs.rows() / 2);
    Eigen::Index col = col0;
    for (const auto& p : perspectives) {
        for (const auto& q : paragraphs) {
            inputs.col(col).head(d) = as_eigen(p);
            inputs.col(col).tail(d) = as_eigen(q);
            ++col;
        }
    }
}

void check_sample(const PlannerModel& model, const PlannerTrainingSample& s) {
    if (s.candidate_vectors.empty()) throw Error(ErrorCode::InvalidArgument, "sample has no candidate embeddings");
    if (s.paragraph_vectors.empty()) throw Error(ErrorCode::EmptyContext, "sample has no paragraph embeddings");
    if (s.gt_index >= s.candidate_vectors.size()) throw Error(ErrorCode::IndexOutOfRange, "gt_index out of range");
    for (const auto& v : s.candidate_vectors) check_vec(model, v);
    for (const auto& v : s.paragraph_vectors) check_vec(model, v);
}

std::size_t argmax_lowest(std::span<const double> xs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (xs[i] > xs[best]) best = i;
    }
    return best;
}

}  // namespace

Eigen::RowVectorXd forward_columns(const PlannerModel& model, const Eigen::MatrixXd& inputs) {
    return run_forward(model, inputs, nullptr);
}

double forward(const PlannerModel& model, const EmbeddingVector& pers_vec, const EmbeddingVector& para_vec) {
    check_vec(model, pers_vec);
    check_vec(model, para_vec);
    Eigen::MatrixXd input(model.input_dim, 1);
    fill_pairs(input, 0, std::span(&pers_vec, 1), std::span(&para_vec, 1));
    return run_forward(model, input, nullptr)(0);
}

Eigen::MatrixXd pair_scores(const PlannerModel& model, std::span<const EmbeddingVector> perspectives,
                            std::span<const EmbeddingVector> paragraphs) {
    for (const auto& v : perspectives) check_vec(model, v);
    for (const auto& v : paragraphs) check_vec(model, v);
    const auto n = static_cast<Eigen::Index>(perspectives.size());
    const auto k = static_cast<Eigen::Index>(paragraphs.size());
    Eigen::MatrixXd inputs(model.input_dim, n * k);
    fill_pairs(inputs, 0, perspectives, paragraphs);
    Eigen::RowVectorXd out = n > 0 && k > 0 ? run_forward(model, inputs, nullptr) : Eigen::RowVectorXd();
    Eigen::MatrixXd scores(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) scores(i, j) = out(i * k + j);
    }
    return scores;
}

std::vector<double> supportive_scores(const PlannerModel& model, std::span<const EmbeddingVector> perspectives,
                                      std::span<const EmbeddingVector> paragraphs) {
    if (paragraphs.empty()) throw Error(ErrorCode::EmptyContext, "supportive score needs at least one paragraph");
    auto m = pair_scores(model, perspectives, paragraphs);
    std::vector<double> out(perspectives.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.row(static_cast<Eigen::Index>(i)).mean();
    return out;
}

double ce_loss(std::span<const double> scores, std::size_t gt_index) {
    if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "ce_loss of an empty score list");
    if (gt_index >= scores.size()) throw Error(ErrorCode::IndexOutOfRange, "gt_index out of range");
    double mx = scores[0];
    for (double s : scores) {
        if (!std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "non-finite score");
        mx = std::max(mx, s);
    }
    double sum = 0;
    for (double s : scores) sum += std::exp(s - mx);
    return std::max(0.0, mx + std::log(sum) - scores[gt_index]);
}

LossAndGradient batch_backward(const PlannerModel& model, std::span<const PlannerTrainingSample* const> samples) {
    if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
    Eigen::Index cols = 0;
    for (const auto* s : samples) {
        check_sample(model, *s);
        cols += static_cast<Eigen::Index>(s->candidate_vectors.size() * s->paragraph_vectors.size());
    }
    Eigen::MatrixXd inputs(model.input_dim, cols);
    {
        Eigen::Index col = 0;
        for (const auto* s : samples) {
            fill_pairs(inputs, col, s->candidate_vectors, s->paragraph_vectors);
            col += static_cast<Eigen::Index>(s->candidate_vectors.size() * s->paragraph_vectors.size());
        }
    }
    ForwardCache cache;
    const Eigen::RowVectorXd out = run_forward(model, inputs, &cache);

    // dL/d(out) for every pair column; L is the batch-mean loss.
    const double inv_batch = 1.0 / static_cast<double>(samples.size());
    Eigen::MatrixXd delta(1, cols);
    LossAndGradient result;
    Eigen::Index col = 0;
    for (const auto* s : samples) {
        const auto n = s->candidate_vectors.size();
        const auto k = static_cast<Eigen::Index>(s->paragraph_vectors.size());
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) scores[i] = out.segment(col + static_cast<Eigen::Index>(i) * k, k).mean();
        const double mx = *std::max_element(scores.begin(), scores.end());
        double sum = 0;
        for (double v : scores) sum += std::exp(v - mx);
        const double lse = mx + std::log(sum);
        result.loss += (lse - scores[s->gt_index]) * inv_batch;
        for (std::size_t i = 0; i < n; ++i) {
            const double residual = std::exp(scores[i] - lse) - (i == s->gt_index ? 1.0 : 0.0);
            delta.block(0, col + static_cast<Eigen::Index>(i) * k, 1, k).setConstant(residual * inv_batch /
                                                                                  static_cast<double>(k));
        }
        col += static_cast<Eigen::Index>(n) * k;
    }

    result.gradient = Gradient::zeros_like(model);
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const bool last = l + 1 == model.layers.size();
        if (!last) delta = delta.cwiseProduct(activate_grad(model.activation, cache.pre[l]));
        auto& g = result.gradient.layers[l];
        g.weights.noalias() = delta * cache.post[l].transpose();
        g.bias = delta.rowwise().sum();
        if (l > 0) delta = model.layers[l].weights.transpose() * delta;
    }
    return result;
}

LossAndGradient backward(const PlannerModel& model, const PlannerTrainingSample& sample) {
    const PlannerTrainingSample* one = &sample;
    return batch_backward(model, std::span(&one, 1));
}

std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view s) {
    if (s == "sgd") return Optimizer::Sgd;
    if (s == "adam") return Optimizer::Adam;
    throw Error(ErrorCode::ConfigError, "unknown optimizer \"" + std::string(s) + "\"");
}

double selection_accuracy(const PlannerModel& model, std::span<const PlannerTrainingSample> samples) {
    if (samples.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& s : samples) {
        check_sample(model, s);
        auto scores = supportive_scores(model, s.candidate_vectors, s.paragraph_vectors);
        if (argmax_lowest(scores) == s.gt_index) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

namespace {

struct AdamState {
    Gradient m, v;
    std::size_t t = 0;
};

void apply_update(PlannerModel& model, const Gradient& g, const TrainConfig& cfg, AdamState& adam) {
    if (cfg.optimizer == Optimizer::Sgd) {
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            model.layers[l].weights -= cfg.learning_rate * g.layers[l].weights;
            model.layers[l].bias -= cfg.learning_rate * g.layers[l].bias;
        }
        return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++adam.t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
    auto step = [&](auto& param, const auto& grad, auto& m, auto& v) {
        m = b1 * m + (1 - b1) * grad;
        v = b2 * v + (1 - b2) * grad.cwiseProduct(grad);
        param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        step(model.layers[l].weights, g.layers[l].weights, adam.m.layers[l].weights, adam.v.layers[l].weights);
        step(model.layers[l].bias, g.layers[l].bias, adam.m.layers[l].bias, adam.v.layers[l].bias);
    }
}

}  // namespace

TrainResult train(PlannerModel model, std::span<const PlannerTrainingSample> samples, const TrainConfig& cfg,
                  std::span<const PlannerTrainingSample> heldout) {
    validate(model);
    if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "no training samples");
    if (cfg.batch_size < 1) throw Error(ErrorCode::ConfigError, "batch_size must be >= 1");
    if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate < 0) {
        throw Error(ErrorCode::ConfigError, "learning_rate must be finite and non-negative");
    }
    for (const auto& s : samples) check_sample(model, s);
    const auto eval_set = heldout.empty() ? samples : heldout;

    TrainResult result;
    result.metrics.baseline_accuracy = selection_accuracy(model, eval_set);

    AdamState adam{Gradient::zeros_like(model), Gradient::zeros_like(model), 0};
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.shuffle_seed);
    std::vector<const PlannerTrainingSample*> batch;
    bool capped = false;
    for (std::size_t epoch = 0; epoch < cfg.epochs && !capped; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        double loss_sum = 0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            if (cfg.max_steps && result.metrics.steps >= *cfg.max_steps) {
                capped = true;
                break;
            }
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
                batch.push_back(&samples[order[i]]);
            }
            auto lg = batch_backward(model, batch);
            loss_sum += lg.loss * static_cast<double>(batch.size());
            seen += batch.size();
            apply_update(model, lg.gradient, cfg, adam);
            ++result.metrics.steps;
        }
        if (seen) result.metrics.epoch_losses.push_back(loss_sum / static_cast<double>(seen));
    }
    result.metrics.heldout_accuracy = selection_accuracy(model, eval_set);
    result.model = std::move(model);
    return result;
}

namespace {
constexpr char kCheckpointMagic[8] = {'D', 'R', 'P', 'G', 'M', 'L', 'P', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const PlannerModel& model, const std::filesystem::path& path) {
    using namespace binary_io;
    validate(model);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.input_dim));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.layers.size()));
    for (auto w : model.widths()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    put_str(out, std::string(to_string(model.activation)));
    put_le<std::uint64_t>(out, model.seed);
    put_str(out, model.encoder);
    for (const auto& l : model.layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) put_f64(out, l.weights(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) put_f64(out, l.bias(r));
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write error on " + path.string());
}

PlannerModel load_checkpoint(const std::filesystem::path& path) {
    using namespace binary_io;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    char magic[sizeof kCheckpointMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
        throw Error(ErrorCode::SchemaViolation, path.string() + " is not a planner checkpoint");
    }
    if (get_le<std::uint32_t>(in) != kCheckpointVersion) {
        throw Error(ErrorCode::SchemaViolation, "unsupported checkpoint version");
    }
    PlannerModel model;
    model.input_dim = get_le<std::uint32_t>(in);
    const auto count = get_le<std::uint32_t>(in);
    if (count == 0 || count > 64) throw Error(ErrorCode::SchemaViolation, "implausible layer count");
    std::vector<std::size_t> widths(count);
    for (auto& w : widths) w = get_le<std::uint32_t>(in);
    model.activation = parse_activation(get_str(in));
    model.seed = get_le<std::uint64_t>(in);
    model.encoder = get_str(in);
    std::size_t fan_in = model.input_dim;
    for (auto out_w : widths) {
        DenseLayer l{Eigen::MatrixXd(out_w, fan_in), Eigen::VectorXd(out_w)};
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = get_f64(in);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = get_f64(in);
        model.layers.push_back(std::move(l));
        fan_in = out_w;
    }
    validate(model);
    return model;
}

}  // namespace drpg::planner
