#include "drpg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <initializer_list>
#include <thread>

#include "drpg/decomposer.hpp"
#include "drpg/executor.hpp"
#include "drpg/json_util.hpp"
#include "drpg/text.hpp"

namespace drpg::pipeline {

using nlohmann::json;

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Direct: return "direct";
        case Mode::Decomp: return "decomp";
        case Mode::Drg: return "drg";
        case Mode::Drpg: return "drpg";
        case Mode::DrpgC: return "drpg-c";
        case Mode::DrpgJ: return "drpg-j";
    }
    return "drpg";
}

Mode parse_mode(std::string_view s) {
    const auto lower = text::to_lower(s);
    for (auto m : {Mode::Direct, Mode::Decomp, Mode::Drg, Mode::Drpg, Mode::DrpgC, Mode::DrpgJ}) {
        if (lower == to_string(m)) return m;
    }
    throw Error(ErrorCode::ConfigError, "unknown mode \"" + std::string(s) +
                                            "\" (expected direct, decomp, drg, drpg, drpg-c or drpg-j)");
}

bool uses_decomposer(Mode m) { return m != Mode::Direct; }
bool uses_retriever(Mode m) { return m != Mode::Direct && m != Mode::Decomp; }
bool uses_planner(Mode m) { return m == Mode::Drpg || m == Mode::DrpgC || m == Mode::DrpgJ; }

void validate(const PipelineConfig& cfg) {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
    if (cfg.k < 1) fail("k must be >= 1");
    if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) fail("threshold must be in (0, 1]");
    if (cfg.max_candidates < 1) fail("max_candidates must be >= 1");
    if (cfg.jobs < 1) fail("jobs must be >= 1");
    for (const auto* r : {&cfg.decomposer, &cfg.proposer, &cfg.executor, &cfg.judge, &cfg.extractor}) {
        if (!(r->temperature >= 0.0 && r->temperature <= 2.0)) fail("temperatures must be in [0, 2]");
    }
    if (cfg.training.batch_size < 1) fail("training.batch_size must be >= 1");
    if (!(cfg.training.learning_rate >= 0.0)) fail("training.learning_rate must be >= 0");
    if (cfg.segmentation.min_chars > cfg.segmentation.max_chars) fail("segmentation.min_chars exceeds max_chars");
    drpg::validate(cfg.provider);
}

// ---------------------------------------------------------------------------
// Config JSON

namespace {

void check_keys(const json& j, const char* where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(where) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw Error(ErrorCode::ConfigError, std::string("unknown key \"") + key + "\" in " + where);
        }
    }
}

template <class T>
void read_into(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::ConfigError, std::string("config key \"") + key + "\" is ill-typed");
    }
}

json role_json(const RoleSettings& r) { return {{"model", r.model_name}, {"temperature", r.temperature}}; }

void read_role(const json& j, const char* key, RoleSettings& r) {
    auto it = j.find(key);
    if (it == j.end()) return;
    check_keys(*it, key, {"model", "temperature"});
    read_into(*it, "model", r.model_name);
    read_into(*it, "temperature", r.temperature);
}

}  // namespace

void to_json(json& j, const PipelineConfig& c) {
    j = json{{"mode", to_string(c.mode)},
             {"k", c.k},
             {"threshold", c.threshold},
             {"max_candidates", c.max_candidates},
             {"seed", c.seed},
             {"jobs", c.jobs},
             {"index_cache_dir", c.index_cache_dir}};
    j["roles"] = {{"decomposer", role_json(c.decomposer)}, {"proposer", role_json(c.proposer)},
                  {"executor", role_json(c.executor)},     {"judge", role_json(c.judge)},
                  {"extractor", role_json(c.extractor)}};
    j["planner"] = {{"checkpoint", c.planner.checkpoint},
                    {"hidden", c.planner.hidden},
                    {"activation", to_string(c.planner.activation)}};
    j["training"] = {{"epochs", c.training.epochs},
                     {"batch_size", c.training.batch_size},
                     {"learning_rate", c.training.learning_rate},
                     {"optimizer", planner::to_string(c.training.optimizer)},
                     {"shuffle_seed", c.training.shuffle_seed}};
    if (c.training.max_steps) j["training"]["max_steps"] = *c.training.max_steps;
    const auto& p = c.provider;
    j["provider"] = {{"base_url", p.base_url},         {"api_key_env", p.api_key_env},
                     {"max_concurrent", p.max_concurrent}, {"retry_limit", p.retry_limit},
                     {"timeout_ms", p.timeout_ms},     {"backoff_base_ms", p.backoff_base_ms},
                     {"chat_model", p.chat_model},     {"embed_model", p.embed_model},
                     {"embed_dim", p.embed_dim},       {"embed_batch", p.embed_batch}};
    j["segmentation"] = {{"min_chars", c.segmentation.min_chars}, {"max_chars", c.segmentation.max_chars}};
}

void from_json(const json& j, PipelineConfig& c) {
    check_keys(j, "config", {"mode", "k", "threshold", "max_candidates", "seed", "jobs", "index_cache_dir", "roles",
                             "planner", "training", "provider", "segmentation"});
    if (auto it = j.find("mode"); it != j.end()) {
        if (!it->is_string()) throw Error(ErrorCode::ConfigError, "config key \"mode\" is ill-typed");
        c.mode = parse_mode(it->get<std::string>());
    }
    read_into(j, "k", c.k);
    read_into(j, "threshold", c.threshold);
    read_into(j, "max_candidates", c.max_candidates);
    read_into(j, "seed", c.seed);
    read_into(j, "jobs", c.jobs);
    read_into(j, "index_cache_dir", c.index_cache_dir);
    if (auto it = j.find("roles"); it != j.end()) {
        check_keys(*it, "roles", {"decomposer", "proposer", "executor", "judge", "extractor"});
        read_role(*it, "decomposer", c.decomposer);
        read_role(*it, "proposer", c.proposer);
        read_role(*it, "executor", c.executor);
        read_role(*it, "judge", c.judge);
        read_role(*it, "extractor", c.extractor);
    }
    if (auto it = j.find("planner"); it != j.end()) {
        check_keys(*it, "planner", {"checkpoint", "hidden", "activation"});
        read_into(*it, "checkpoint", c.planner.checkpoint);
        read_into(*it, "hidden", c.planner.hidden);
        std::string act(to_string(c.planner.activation));
        read_into(*it, "activation", act);
        c.planner.activation = parse_activation(act);
    }
    if (auto it = j.find("training"); it != j.end()) {
        check_keys(*it, "training", {"epochs", "batch_size", "learning_rate", "optimizer", "shuffle_seed", "max_steps"});
        read_into(*it, "epochs", c.training.epochs);
        read_into(*it, "batch_size", c.training.batch_size);
        read_into(*it, "learning_rate", c.training.learning_rate);
        read_into(*it, "shuffle_seed", c.training.shuffle_seed);
        std::string opt(planner::to_string(c.training.optimizer));
        read_into(*it, "optimizer", opt);
        c.training.optimizer = planner::parse_optimizer(opt);
        if (it->contains("max_steps")) {
            std::size_t steps = 0;
            read_into(*it, "max_steps", steps);
            c.training.max_steps = steps;
        }
    }
    if (auto it = j.find("provider"); it != j.end()) {
        check_keys(*it, "provider", {"base_url", "api_key_env", "max_concurrent", "retry_limit", "timeout_ms",
                                     "backoff_base_ms", "chat_model", "embed_model", "embed_dim", "embed_batch"});
        auto& p = c.provider;
        read_into(*it, "base_url", p.base_url);
        read_into(*it, "api_key_env", p.api_key_env);
        read_into(*it, "max_concurrent", p.max_concurrent);
        read_into(*it, "retry_limit", p.retry_limit);
        read_into(*it, "timeout_ms", p.timeout_ms);
        read_into(*it, "backoff_base_ms", p.backoff_base_ms);
        read_into(*it, "chat_model", p.chat_model);
        read_into(*it, "embed_model", p.embed_model);
        read_into(*it, "embed_dim", p.embed_dim);
        read_into(*it, "embed_batch", p.embed_batch);
    }
    if (auto it = j.find("segmentation"); it != j.end()) {
        check_keys(*it, "segmentation", {"min_chars", "max_chars"});
        read_into(*it, "min_chars", c.segmentation.min_chars);
        read_into(*it, "max_chars", c.segmentation.max_chars);
    }
    validate(c);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(corpus::read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    return j.get<PipelineConfig>();
}

// ---------------------------------------------------------------------------
// Trace records

namespace {

json opt_index(const std::optional<std::size_t>& i) { return i ? json(*i) : json(nullptr); }

}  // namespace

void to_json(json& j, const CandidateRecord& r) {
    j = json{{"point_index", r.point_index}, {"candidates", r.candidates}, {"errors", r.errors}};
}
void from_json(const json& j, CandidateRecord& r) {
    r.point_index = json_util::get<std::size_t>(j, "point_index");
    r.candidates = json_util::get<std::vector<PerspectiveCandidate>>(j, "candidates");
    r.errors = json_util::get<std::vector<std::string>>(j, "errors");
}
void to_json(json& j, const ScoreRecord& r) {
    j = json{{"point_index", r.point_index}, {"scorer", r.scorer}, {"pairs", r.pairs}, {"supportive", r.supportive}};
}
void from_json(const json& j, ScoreRecord& r) {
    r.point_index = json_util::get<std::size_t>(j, "point_index");
    r.scorer = json_util::get<std::string>(j, "scorer");
    r.pairs = json_util::get<std::vector<std::vector<double>>>(j, "pairs");
    r.supportive = json_util::get<std::vector<double>>(j, "supportive");
}
void to_json(json& j, const SelectionRecord& r) {
    j = json(r.outcome);
    j["point_index"] = r.point_index;
}
void from_json(const json& j, SelectionRecord& r) {
    r.point_index = json_util::get<std::size_t>(j, "point_index");
    r.outcome = j.get<planner::SelectionOutcome>();
}
void to_json(json& j, const PromptRecord& r) {
    j = json{{"point_index", opt_index(r.point_index)}, {"system", r.system_prompt}, {"user", r.user_prompt}};
}
void from_json(const json& j, PromptRecord& r) {
    r.point_index = json_util::get_optional<std::size_t>(j, "point_index");
    r.system_prompt = json_util::get<std::string>(j, "system");
    r.user_prompt = json_util::get<std::string>(j, "user");
}
void to_json(json& j, const FailureRecord& r) {
    j = json{{"point_index", opt_index(r.point_index)}, {"stage", r.stage}, {"code", r.code}, {"message", r.message}};
}
void from_json(const json& j, FailureRecord& r) {
    r.point_index = json_util::get_optional<std::size_t>(j, "point_index");
    r.stage = json_util::get<std::string>(j, "stage");
    r.code = json_util::get<std::string>(j, "code");
    r.message = json_util::get<std::string>(j, "message");
}

namespace {

constexpr const char* kStageFiles[] = {"points.jsonl",     "contexts.jsonl", "candidates.jsonl",
                                       "scores.jsonl",     "selections.jsonl", "prompts.jsonl",
                                       "units.jsonl",      "failures.jsonl"};

}  // namespace

void write_trace(const RunTrace& t, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const char* f : kStageFiles) std::filesystem::remove(dir / f);
    json run{{"mode", to_string(t.mode)},
             {"paper_id", t.paper_id},
             {"review_id", t.review_id},
             {"complete", t.complete},
             {"embed_calls", t.embed_calls},
             {"point_count", t.points.size()},
             {"unit_count", t.units.size()},
             {"config", t.config}};
    corpus::write_file(dir / "run.json", run.dump(2) + "\n");
    if (t.decomposed) corpus::write_jsonl(dir / "points.jsonl", t.points);
    if (t.retrieved) corpus::write_jsonl(dir / "contexts.jsonl", t.contexts);
    if (t.planned) {
        corpus::write_jsonl(dir / "candidates.jsonl", t.candidates);
        corpus::write_jsonl(dir / "scores.jsonl", t.scores);
        corpus::write_jsonl(dir / "selections.jsonl", t.selections);
    }
    if (!t.prompts.empty()) corpus::write_jsonl(dir / "prompts.jsonl", t.prompts);
    if (!t.units.empty()) corpus::write_jsonl(dir / "units.jsonl", t.units);
    if (!t.failures.empty()) corpus::write_jsonl(dir / "failures.jsonl", t.failures);
}

RunTrace load_trace(const std::filesystem::path& dir) {
    RunTrace t;
    json run;
    try {
        run = json::parse(corpus::read_file(dir / "run.json"));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, (dir / "run.json").string() + ": " + e.what());
    }
    t.mode = parse_mode(json_util::get<std::string>(run, "mode"));
    t.paper_id = json_util::get<std::string>(run, "paper_id");
    t.review_id = json_util::get<std::string>(run, "review_id");
    t.complete = json_util::get<bool>(run, "complete");
    t.embed_calls = json_util::get<std::size_t>(run, "embed_calls");
    t.config = json_util::field(run, "config");
    auto load = [&](const char* name, auto& out) {
        const auto p = dir / name;
        if (!std::filesystem::exists(p)) return false;
        out = corpus::load_records<typename std::decay_t<decltype(out)>::value_type>(p);
        return true;
    };
    t.decomposed = load("points.jsonl", t.points);
    t.retrieved = load("contexts.jsonl", t.contexts);
    t.planned = load("candidates.jsonl", t.candidates);
    load("scores.jsonl", t.scores);
    load("selections.jsonl", t.selections);
    load("prompts.jsonl", t.prompts);
    load("units.jsonl", t.units);
    load("failures.jsonl", t.failures);
    return t;
}

double perspective_usage(const RunTrace& trace) {
    if (!uses_planner(trace.mode)) {
        throw Error(ErrorCode::WrongMode,
                    "perspective usage needs a drpg-family run, got " + std::string(to_string(trace.mode)));
    }
    if (trace.points.empty()) return 0.0;
    std::size_t used = 0;
    for (const auto& u : trace.units) used += u.perspective_used.has_value();
    return static_cast<double>(used) / static_cast<double>(trace.points.size());
}

// ---------------------------------------------------------------------------
// Run

std::shared_ptr<const planner::PerspectiveScorer> make_scorer(const PipelineConfig& cfg, std::size_t encoder_dim,
                                                              const std::string& encoder_name) {
    std::shared_ptr<PlannerModel> model;
    if (!cfg.planner.checkpoint.empty()) {
        model = std::make_shared<PlannerModel>(planner::load_checkpoint(cfg.planner.checkpoint));
        if (model->encoder_dim() != encoder_dim) {
            throw Error(ErrorCode::DimensionMismatch, "planner checkpoint expects encoder dim " +
                                                          std::to_string(model->encoder_dim()) + ", embedder has " +
                                                          std::to_string(encoder_dim));
        }
    } else {
        model = std::make_shared<PlannerModel>(
            make_model(encoder_dim, cfg.planner.hidden, cfg.planner.activation, cfg.seed, encoder_name));
    }
    return std::make_shared<planner::MlpScorer>(std::move(model));
}

std::shared_ptr<const EmbeddingIndex> make_index(const Paper& paper, const PipelineConfig& cfg, Embedder& embedder) {
    if (cfg.index_cache_dir.empty()) return std::make_shared<EmbeddingIndex>(retriever::build_index(paper, embedder));
    retriever::IndexCache cache(cfg.index_cache_dir);
    return std::make_shared<EmbeddingIndex>(cache.get_or_build(paper, embedder));
}

namespace {

// Everything one point produces; merged into the trace in point order.
struct PointOutcome {
    std::optional<RetrievedContext> context;
    std::optional<CandidateRecord> candidates;
    std::optional<ScoreRecord> scores;
    std::optional<SelectionRecord> selection;
    std::optional<PromptRecord> prompt;
    std::vector<FailureRecord> failures;
    std::optional<RebuttalUnit> unit;
    std::exception_ptr error;
};

FailureRecord failure(std::optional<std::size_t> point, std::string stage, const Error& e) {
    return {point, std::move(stage), std::string(error_code_name(e.code())), e.what()};
}

std::optional<PerspectiveKind> kind_filter(Mode m) {
    if (m == Mode::DrpgC) return PerspectiveKind::Clarification;
    if (m == Mode::DrpgJ) return PerspectiveKind::Justification;
    return std::nullopt;
}

class PointRunner {
public:
    PointRunner(const Paper& paper, const PipelineConfig& cfg, const Providers& providers,
                const EmbeddingIndex* index, const planner::PerspectiveScorer* scorer)
        : paper_(paper), cfg_(cfg), providers_(providers), index_(index), scorer_(scorer) {}

    void run(const ReviewPoint& point, const std::optional<RetrievedContext>& retrieved, PointOutcome& out) const {
        std::vector<prompts::ContextParagraph> context;
        if (retrieved) {
            out.context = retrieved;
            for (auto idx : retrieved->paragraph_indices) context.push_back({idx, paper_.paragraphs.at(idx).text});
        } else {
            for (const auto& p : paper_.paragraphs) context.push_back({p.index, p.text});
        }

        std::optional<PerspectiveCandidate> perspective;
        if (uses_planner(cfg_.mode)) perspective = plan(point, *retrieved, out);

        executor::ExecuteOptions exec{cfg_.executor.model_name, cfg_.executor.temperature};
        auto req = executor::point_request(point, context, perspective, exec);
        out.prompt = PromptRecord{point.index, req.system_prompt, req.user_prompt};
        try {
            out.unit = executor::respond_point(point, context, perspective, *providers_.chat, exec);
        } catch (const Error& e) {
            out.failures.push_back(failure(point.index, "execute", e));
            throw;
        }
    }

private:
    std::optional<PerspectiveCandidate> plan(const ReviewPoint& point, const RetrievedContext& ctx,
                                             PointOutcome& out) const {
        CandidateRecord cands{point.index, {}, {}};
        try {
            auto proposal = planner::propose_perspectives(
                point, *providers_.chat,
                {cfg_.max_candidates, cfg_.proposer.model_name, cfg_.proposer.temperature});
            cands.candidates = std::move(proposal.candidates);
            cands.errors = std::move(proposal.errors);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseFailure) throw;
            // Unusable proposer output: answer without a perspective.
            out.failures.push_back(failure(point.index, "propose", e));
            out.candidates = std::move(cands);
            return std::nullopt;
        }
        if (auto kind = kind_filter(cfg_.mode)) {
            std::erase_if(cands.candidates, [&](const PerspectiveCandidate& c) { return c.kind != *kind; });
        }
        out.candidates = cands;
        if (cands.candidates.empty()) return std::nullopt;

        std::vector<std::string> texts;
        for (const auto& c : cands.candidates) texts.push_back(c.text);
        const auto pers = providers_.embedder->embed(texts);
        std::vector<EmbeddingVector> paras;
        for (auto idx : ctx.paragraph_indices) paras.push_back(index_->vectors.at(idx));
        const Eigen::MatrixXd m = scorer_->pairs(pers, paras);

        ScoreRecord rec{point.index, scorer_->name(), {}, {}};
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            rec.pairs.emplace_back(m.row(i).begin(), m.row(i).end());
            rec.supportive.push_back(m.row(i).mean());
        }
        auto outcome = planner::select(cands.candidates, rec.supportive, cfg_.threshold);
        out.scores = std::move(rec);
        out.selection = SelectionRecord{point.index, outcome};
        return outcome.chosen;
    }

    const Paper& paper_;
    const PipelineConfig& cfg_;
    const Providers& providers_;
    const EmbeddingIndex* index_;
    const planner::PerspectiveScorer* scorer_;
};

// Runs fn(i) for i in [0, n) on up to jobs threads.
template <class Fn>
void fan_out(std::size_t n, std::size_t jobs, Fn fn) {
    const std::size_t workers = std::min(jobs, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
        });
    }
}

void run_stages(const Paper& paper, const Review& review, const PipelineConfig& cfg, const Providers& providers,
                const RunOptions& options, RunTrace& trace, Rebuttal& rebuttal) {
    auto& embedder = *providers.embedder;
    if (cfg.mode == Mode::Direct) {
        executor::ExecuteOptions exec{cfg.executor.model_name, cfg.executor.temperature};
        auto req = executor::whole_request(review, paper, exec);
        trace.prompts.push_back({std::nullopt, req.system_prompt, req.user_prompt});
        try {
            rebuttal = executor::respond_whole(review, paper, *providers.chat, exec);
        } catch (const Error& e) {
            trace.failures.push_back(failure(std::nullopt, "execute", e));
            throw;
        }
        trace.units = rebuttal.units;
        return;
    }

    try {
        trace.points = decomposer::decompose(review, *providers.chat,
                                             {cfg.decomposer.model_name, cfg.decomposer.temperature});
    } catch (const Error& e) {
        trace.failures.push_back(failure(std::nullopt, "decompose", e));
        throw;
    }
    trace.decomposed = true;

    std::shared_ptr<const EmbeddingIndex> index;
    std::vector<std::optional<RetrievedContext>> contexts(trace.points.size());
    if (uses_retriever(cfg.mode)) {
        try {
            index = options.index ? options.index : make_index(paper, cfg, embedder);
            if (index->fingerprint != retriever::paper_fingerprint(paper) || index->dim != embedder.dim()) {
                throw Error(ErrorCode::DimensionMismatch, "supplied index does not match this paper and embedder");
            }
            auto all = retriever::retrieve_all(trace.points, *index, cfg.k, embedder);
            for (std::size_t i = 0; i < all.size(); ++i) contexts[i] = all[i];
            trace.contexts = std::move(all);
        } catch (const Error& e) {
            trace.failures.push_back(failure(std::nullopt, "retrieve", e));
            throw;
        }
        trace.retrieved = true;
    }

    std::shared_ptr<const planner::PerspectiveScorer> scorer;
    if (uses_planner(cfg.mode)) {
        scorer = options.scorer ? options.scorer : make_scorer(cfg, embedder.dim(), embedder.name());
        trace.planned = true;
    }

    PointRunner runner(paper, cfg, providers, index.get(), scorer.get());
    std::vector<PointOutcome> outcomes(trace.points.size());
    fan_out(trace.points.size(), cfg.jobs, [&](std::size_t i) {
        try {
            runner.run(trace.points[i], contexts[i], outcomes[i]);
        } catch (...) {
            outcomes[i].error = std::current_exception();
        }
    });

    std::exception_ptr first_error;
    for (auto& o : outcomes) {
        if (o.candidates) trace.candidates.push_back(std::move(*o.candidates));
        if (o.scores) trace.scores.push_back(std::move(*o.scores));
        if (o.selection) trace.selections.push_back(std::move(*o.selection));
        if (o.prompt) trace.prompts.push_back(std::move(*o.prompt));
        for (auto& f : o.failures) trace.failures.push_back(std::move(f));
        if (o.unit) trace.units.push_back(std::move(*o.unit));
        if (o.error && !first_error) first_error = o.error;
    }
    if (first_error) std::rethrow_exception(first_error);
    rebuttal = executor::merge(review.id, trace.units);
}

}  // namespace

RunResult run(const Paper& paper, const Review& review, const PipelineConfig& cfg, const Providers& providers,
              const RunOptions& options) {
    validate(cfg);
    validate(paper);
    validate(review);
    if (!providers.chat || !providers.embedder) throw Error(ErrorCode::ConfigError, "providers are not configured");

    RunResult result;
    auto& trace = result.trace;
    trace.mode = cfg.mode;
    trace.paper_id = paper.id;
    trace.review_id = review.id;
    trace.config = cfg;
    const auto embed_calls_before = providers.embedder->embed_calls();
    try {
        run_stages(paper, review, cfg, providers, options, trace, result.rebuttal);
    } catch (...) {
        trace.embed_calls = providers.embedder->embed_calls() - embed_calls_before;
        if (options.trace_dir) write_trace(trace, *options.trace_dir);
        throw;
    }
    trace.embed_calls = providers.embedder->embed_calls() - embed_calls_before;
    trace.complete = true;
    if (options.trace_dir) write_trace(trace, *options.trace_dir);
    return result;
}

SampleBuild build_training_samples(const Paper& paper, const Review& review, std::string_view rebuttal_text,
                                   const PipelineConfig& cfg, const Providers& providers) {
    validate(cfg);
    validate(paper);
    validate(review);
    if (!planner::eligible_for_training(review)) {
        throw Error(ErrorCode::InvalidArgument, "review " + review.id + " has no recorded score increase");
    }
    auto& embedder = *providers.embedder;
    const auto points =
        decomposer::decompose(review, *providers.chat, {cfg.decomposer.model_name, cfg.decomposer.temperature});
    const auto index = make_index(paper, cfg, embedder);
    const auto contexts = retriever::retrieve_all(points, *index, cfg.k, embedder);

    SampleBuild out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& point = points[i];
        try {
            auto proposal = planner::propose_perspectives(
                point, *providers.chat, {cfg.max_candidates, cfg.proposer.model_name, cfg.proposer.temperature});
            auto gt = planner::extract_ground_truth_perspective(point, rebuttal_text, *providers.chat,
                                                                {cfg.extractor.model_name, cfg.extractor.temperature});
            auto sample = planner::make_training_sample(point, std::move(proposal.candidates), std::move(gt),
                                                        contexts[i], paper, embedder, cfg.seed);
            sample.initial_score = review.initial_score;
            sample.final_score = review.final_score;
            out.samples.push_back(std::move(sample));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseFailure) throw;
            out.skipped.push_back("point " + std::to_string(point.index) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace drpg::pipeline
