// Command-line front end. Errors end the process with one line
//   error[<Code>]: <message>
// on stderr and an exit status that depends on the code (see exit_status).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "drpg/corpus.hpp"
#include "drpg/dialogue.hpp"
#include "drpg/evaluation.hpp"
#include "drpg/executor.hpp"
#include "drpg/json_util.hpp"
#include "drpg/mlp.hpp"
#include "drpg/pipeline.hpp"
#include "drpg/planner.hpp"
#include "drpg/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace drpg;

namespace {

int exit_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigError:
        case ErrorCode::InvalidArgument: return 2;
        case ErrorCode::IoFailure: return 3;
        case ErrorCode::SchemaViolation:
        case ErrorCode::EmptyDocument: return 4;
        case ErrorCode::ProviderFailure: return 5;
        case ErrorCode::Timeout: return 6;
        case ErrorCode::ParseFailure:
        case ErrorCode::VerdictParseFailure:
        case ErrorCode::ScoreParseFailure: return 7;
        default: return 1;
    }
}

struct Globals {
    std::string provider = "http";
    std::string config_path;
    std::size_t jobs = 0;
    std::optional<std::uint64_t> seed;
};

pipeline::PipelineConfig load_config(const Globals& g) {
    pipeline::PipelineConfig cfg;
    if (!g.config_path.empty()) cfg = pipeline::load_config(g.config_path);
    if (g.jobs) cfg.jobs = g.jobs;
    if (g.seed) cfg.seed = *g.seed;
    pipeline::validate(cfg);
    return cfg;
}

// A rebuttal argument may be a Rebuttal record or plain text.
std::string load_rebuttal_text(const fs::path& path) {
    auto raw = corpus::read_file(path);
    if (text::trim(raw).starts_with('{')) return corpus::load_artifact<Rebuttal>(path).merged_text;
    if (text::is_blank(raw)) throw Error(ErrorCode::InvalidArgument, path.string() + " is empty");
    return text::trim(raw);
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

// ---------------------------------------------------------------------------

struct RebutArgs {
    std::string paper, review, mode = "drpg", out;
};

void cmd_rebut(const Globals& g, const RebutArgs& a) {
    auto cfg = load_config(g);
    cfg.mode = pipeline::parse_mode(a.mode);
    auto providers = make_providers(g.provider, cfg.provider);
    auto paper = corpus::load_paper_or_text(a.paper, cfg.segmentation);
    auto review = corpus::load_review_or_text(a.review);
    const fs::path out = a.out;
    pipeline::RunOptions opts;
    opts.trace_dir = out / "trace";
    auto result = pipeline::run(paper, review, cfg, providers, opts);
    corpus::persist_artifact(result.rebuttal, out / "rebuttal.json");
    corpus::write_file(out / "rebuttal.md", result.rebuttal.merged_text + "\n");
    std::cout << "mode: " << pipeline::to_string(cfg.mode) << "\n"
              << "points: " << result.trace.points.size() << "\n"
              << "units: " << result.rebuttal.units.size() << "\n";
    if (pipeline::uses_planner(cfg.mode)) {
        std::cout << "perspective usage: " << fixed(pipeline::perspective_usage(result.trace), 3) << "\n";
    }
    std::cout << "wrote " << (out / "rebuttal.json").string() << ", " << (out / "rebuttal.md").string() << ", "
              << (out / "trace").string() << "\n";
}

struct TrainArgs {
    std::string samples, heldout, out, metrics;
};

void cmd_train(const Globals& g, const TrainArgs& a) {
    auto cfg = load_config(g);
    auto samples = corpus::load_records<PlannerTrainingSample>(a.samples);
    if (samples.empty()) throw Error(ErrorCode::InvalidArgument, a.samples + " holds no samples");
    std::vector<PlannerTrainingSample> heldout;
    if (!a.heldout.empty()) heldout = corpus::load_records<PlannerTrainingSample>(a.heldout);

    std::shared_ptr<Embedder> embedder;
    auto ensure = [&](PlannerTrainingSample& s) {
        planner::validate(s);
        if (s.candidate_vectors.empty() || s.paragraph_vectors.empty()) {
            if (!embedder) embedder = make_providers(g.provider, cfg.provider).embedder;
            planner::ensure_embeddings(s, *embedder);
        }
    };
    for (auto& s : samples) ensure(s);
    for (auto& s : heldout) ensure(s);

    const auto dim = samples.front().candidate_vectors.front().dim();
    const std::string encoder = embedder ? embedder->name() : "precomputed";
    auto model = make_model(dim, cfg.planner.hidden, cfg.planner.activation, cfg.seed, encoder);
    auto result = planner::train(std::move(model), samples, cfg.training, heldout);
    planner::save_checkpoint(result.model, a.out);

    const auto& m = result.metrics;
    json metrics{{"epoch_losses", m.epoch_losses},
                 {"baseline_accuracy", m.baseline_accuracy},
                 {"heldout_accuracy", m.heldout_accuracy},
                 {"steps", m.steps},
                 {"train_samples", samples.size()},
                 {"heldout_samples", heldout.size()},
                 {"parameters", result.model.parameter_count()}};
    const auto metrics_path = a.metrics.empty() ? a.out + ".metrics.json" : a.metrics;
    corpus::write_file(metrics_path, metrics.dump(2) + "\n");
    for (std::size_t e = 0; e < m.epoch_losses.size(); ++e) {
        std::cout << "epoch " << e + 1 << " loss " << fixed(m.epoch_losses[e], 6) << "\n";
    }
    std::cout << (heldout.empty() ? "train" : "held-out") << " accuracy " << fixed(m.baseline_accuracy, 4)
              << " -> " << fixed(m.heldout_accuracy, 4) << " after " << m.steps << " steps\n"
              << "wrote " << a.out << ", " << metrics_path << "\n";
}

struct ExplainArgs {
    std::string trace;
    std::size_t point = 0;
};

void cmd_plan_explain(const ExplainArgs& a) {
    auto trace = pipeline::load_trace(a.trace);
    if (!trace.planned) {
        throw Error(ErrorCode::WrongMode, "trace from a " + std::string(pipeline::to_string(trace.mode)) +
                                              " run has no planner scores");
    }
    auto find = [&](const auto& v) {
        return std::find_if(v.begin(), v.end(), [&](const auto& r) { return r.point_index == a.point; });
    };
    auto point = std::find_if(trace.points.begin(), trace.points.end(),
                              [&](const ReviewPoint& p) { return p.index == a.point; });
    if (point == trace.points.end()) {
        throw Error(ErrorCode::IndexOutOfRange, "trace has no point " + std::to_string(a.point));
    }
    std::cout << "Point " << a.point << ": " << point->text << "\n";
    auto scores = find(trace.scores);
    auto cands = find(trace.candidates);
    if (scores == trace.scores.end() || cands == trace.candidates.end()) {
        std::cout << "No scores recorded for this point; it was answered without a perspective.\n";
        return;
    }
    auto ctx = find(trace.contexts);
    const auto rows = static_cast<Eigen::Index>(scores->pairs.size());
    const auto cols = rows ? static_cast<Eigen::Index>(scores->pairs.front().size()) : 0;
    Eigen::MatrixXd raw(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) raw(i, j) = scores->pairs[i][j];
    }
    const auto m = planner::score_matrix(raw);

    std::cout << "Sigmoid-normalized scores; cells below " << fixed(planner::kDisplayCutoff, 1)
              << " are shown as '.'\n      ";
    for (Eigen::Index j = 0; j < cols; ++j) {
        std::string head = ctx != trace.contexts.end() ? "P" + std::to_string(ctx->paragraph_indices[j])
                                                       : "#" + std::to_string(j);
        std::cout << std::string(head.size() < 6 ? 6 - head.size() : 0, ' ') << head;
    }
    std::cout << "\n";
    for (Eigen::Index i = 0; i < rows; ++i) {
        std::string label = "C" + std::to_string(i + 1);
        std::cout << label << std::string(6 - label.size(), ' ');
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::cout << (m.shown(i, j) ? "  " + fixed(m.normalized(i, j), 2) : std::string("     ."));
        }
        std::cout << "\n";
    }
    std::cout << "\nCandidates:\n";
    for (std::size_t i = 0; i < cands->candidates.size(); ++i) {
        std::cout << "C" << i + 1 << "  " << cands->candidates[i].tagged() << "  (supportive "
                  << fixed(scores->supportive[i], 4) << ")\n";
    }
    if (auto sel = find(trace.selections); sel != trace.selections.end()) {
        const auto& o = sel->outcome;
        std::cout << "\n"
                  << (o.fell_back ? "Fallback: best C" + std::to_string(o.best_index + 1) + " had confidence "
                                  : "Selected C" + std::to_string(o.best_index + 1) + " with confidence ")
                  << fixed(o.confidence, 4) << "\n";
    }
}

struct CompareArgs {
    std::string review, a, b, name_a = "A", name_b = "B", out;
};

void cmd_eval_compare(const Globals& g, const CompareArgs& a) {
    auto cfg = load_config(g);
    auto providers = make_providers(g.provider, cfg.provider);
    auto review = corpus::load_review_or_text(a.review);
    std::mt19937_64 rng(cfg.seed);
    auto rec = evaluation::compare(review, a.name_a, load_rebuttal_text(a.a), a.name_b, load_rebuttal_text(a.b),
                                   providers.judge_chat(), rng, {cfg.judge.model_name, cfg.judge.temperature});
    const auto line = json(rec).dump();
    if (!a.out.empty()) {
        std::string prior = fs::exists(a.out) ? corpus::read_file(a.out) : "";
        if (!prior.empty() && prior.back() != '\n') prior += '\n';
        corpus::write_file(a.out, prior + line + "\n");
    }
    std::cout << line << "\n";
}

struct EloArgs {
    std::string records, judge_records, json_out;
};

void cmd_eval_elo(const EloArgs& a) {
    auto records = corpus::load_records<evaluation::ComparisonRecord>(a.records);
    auto elo = evaluation::fit_elo(records);
    auto wins = evaluation::win_rates(records);
    std::map<std::string, double> judge_means;
    if (!a.judge_records.empty()) {
        judge_means = evaluation::mean_judge_scores(corpus::load_records<evaluation::JudgeRecord>(a.judge_records));
    }
    std::cout << evaluation::report_text(wins, elo, judge_means);
    double lo = elo.ratings.begin()->second, hi = lo;
    for (const auto& [_, r] : elo.ratings) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    std::cout << "Elo gap (max - min): " << fixed(hi - lo, 2) << "\n"
              << "Newton iterations: " << elo.iterations << (elo.converged ? "" : " (not converged)") << "\n";
    if (!a.json_out.empty()) {
        corpus::write_file(a.json_out, evaluation::report_json(wins, elo, judge_means).dump(2) + "\n");
    }
}

struct JudgeArgs {
    std::string review, rebuttal, system;
    int score = 0;
};

void cmd_eval_judge(const Globals& g, const JudgeArgs& a) {
    auto cfg = load_config(g);
    auto providers = make_providers(g.provider, cfg.provider);
    auto review = corpus::load_review_or_text(a.review);
    auto rec = evaluation::judge(review, load_rebuttal_text(a.rebuttal), a.score, providers.judge_chat(), a.system,
                                 {cfg.judge.model_name, cfg.judge.temperature});
    std::cout << json(rec).dump() << "\n";
}

struct SimulateArgs {
    std::string paper, review, mode = "drpg", out;
    int rounds = dialogue::kDefaultRounds;
    int score = 0;
};

void cmd_simulate(const Globals& g, const SimulateArgs& a) {
    auto cfg = load_config(g);
    cfg.mode = pipeline::parse_mode(a.mode);
    auto providers = make_providers(g.provider, cfg.provider);
    auto paper = corpus::load_paper_or_text(a.paper, cfg.segmentation);
    auto review = corpus::load_review_or_text(a.review);
    dialogue::SimulateOptions opts;
    if (a.score) opts.initial_score = a.score;
    if (!a.out.empty()) opts.out_dir = a.out;
    auto transcript = dialogue::simulate_rounds(paper, review, cfg, a.rounds, providers, opts);
    const auto scores = dialogue::score_trajectory(transcript);
    std::cout << "round,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i) std::cout << i + 1 << "," << scores[i] << "\n";
    if (!a.out.empty()) {
        std::string csv = "round,score\n";
        for (std::size_t i = 0; i < scores.size(); ++i) csv += std::to_string(i + 1) + "," + std::to_string(scores[i]) + "\n";
        corpus::write_file(fs::path(a.out) / "scores.csv", csv);
    }
}

struct RecoverArgs {
    std::string records, out;
    bool clamp = false;
};

// Each input line is an object with "discussion_text" and "final_score";
// the output repeats it with "initial_score" filled in.
void cmd_recover_scores(const Globals& g, const RecoverArgs& a) {
    auto cfg = load_config(g);
    auto providers = make_providers(g.provider, cfg.provider);
    auto records = corpus::load_records<json>(a.records);
    std::string out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        const auto where = a.records + ": record " + std::to_string(i + 1) + ": ";
        try {
            const auto discussion = json_util::get<std::string>(r, "discussion_text");
            const auto final_score = json_util::get<int>(r, "final_score");
            r["initial_score"] = corpus::recover_initial_score(
                discussion, final_score, *providers.chat, {a.clamp, cfg.decomposer.model_name, 0.0});
        } catch (const Error& e) {
            throw Error(e.code(), where + e.what());
        }
        out += r.dump() + "\n";
    }
    if (a.out.empty()) {
        std::cout << out;
    } else {
        corpus::write_file(a.out, out);
        std::cout << "wrote " << records.size() << " records to " << a.out << "\n";
    }
}

struct SampleArgs {
    std::string paper, review, rebuttal, out;
};

void cmd_planner_samples(const Globals& g, const SampleArgs& a) {
    auto cfg = load_config(g);
    auto providers = make_providers(g.provider, cfg.provider);
    auto paper = corpus::load_paper_or_text(a.paper, cfg.segmentation);
    auto review = corpus::load_review_or_text(a.review);
    auto build = pipeline::build_training_samples(paper, review, load_rebuttal_text(a.rebuttal), cfg, providers);
    corpus::write_jsonl(a.out, build.samples);
    for (const auto& s : build.skipped) std::cerr << "skipped " << s << "\n";
    std::cout << "wrote " << build.samples.size() << " samples to " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-by-point rebuttal generation and evaluation"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--provider", g.provider, "Model backend: http, or mock:SEED for the offline deterministic one")
        ->capture_default_str();
    app.add_option("--config", g.config_path, "JSON pipeline configuration")->check(CLI::ExistingFile);
    app.add_option("--jobs", g.jobs, "Review points processed concurrently (overrides the config)");
    app.add_option("--seed", g.seed, "Run seed (overrides the config)");

    RebutArgs rebut;
    auto* c_rebut = app.add_subcommand("rebut", "Write a rebuttal for a review and record the run trace");
    c_rebut->add_option("--paper", rebut.paper, "Paper record or plain text")->required();
    c_rebut->add_option("--review", rebut.review, "Review record or plain text")->required();
    c_rebut->add_option("--mode", rebut.mode, "direct|decomp|drg|drpg|drpg-c|drpg-j")->capture_default_str();
    c_rebut->add_option("--out", rebut.out, "Output directory")->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train-planner", "Train the perspective scorer");
    c_train->add_option("--samples", train.samples, "Training samples (JSONL)")->required();
    c_train->add_option("--heldout", train.heldout, "Held-out samples (JSONL)");
    c_train->add_option("--out", train.out, "Checkpoint path")->required();
    c_train->add_option("--metrics", train.metrics, "Metrics path (default: <out>.metrics.json)");

    ExplainArgs explain;
    auto* c_explain = app.add_subcommand("plan-explain", "Show the perspective/paragraph score matrix of a point");
    c_explain->add_option("--trace", explain.trace, "Trace directory of a rebut run")->required();
    c_explain->add_option("--point", explain.point, "Point index")->required();

    auto* c_eval = app.add_subcommand("eval", "Evaluation tools");
    c_eval->require_subcommand(1);
    CompareArgs cmp;
    auto* c_cmp = c_eval->add_subcommand("compare", "Pairwise comparison of two rebuttals");
    c_cmp->add_option("--review", cmp.review, "Review record or plain text")->required();
    c_cmp->add_option("--a", cmp.a, "First rebuttal (record or text)")->required();
    c_cmp->add_option("--b", cmp.b, "Second rebuttal (record or text)")->required();
    c_cmp->add_option("--name-a", cmp.name_a, "System name of the first rebuttal")->capture_default_str();
    c_cmp->add_option("--name-b", cmp.name_b, "System name of the second rebuttal")->capture_default_str();
    c_cmp->add_option("--out", cmp.out, "Append the record to this JSONL file");
    EloArgs elo;
    auto* c_elo = c_eval->add_subcommand("elo", "Win rates and Bradley-Terry Elo from comparison records");
    c_elo->add_option("--records", elo.records, "Comparison records (JSONL)")->required();
    c_elo->add_option("--judge-records", elo.judge_records, "Judge records (JSONL) for the mean score column");
    c_elo->add_option("--json", elo.json_out, "Also write the report as JSON here");
    JudgeArgs jdg;
    auto* c_judge = c_eval->add_subcommand("judge", "Score a rebuttal with the reviewer-simulating judge");
    c_judge->add_option("--review", jdg.review, "Review record or plain text")->required();
    c_judge->add_option("--rebuttal", jdg.rebuttal, "Rebuttal record or plain text")->required();
    c_judge->add_option("--score", jdg.score, "Original review score (1-10)")->required()->check(CLI::Range(1, 10));
    c_judge->add_option("--system", jdg.system, "System name stored in the record");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Multi-round reviewer/author simulation");
    c_sim->add_option("--paper", sim.paper, "Paper record or plain text")->required();
    c_sim->add_option("--review", sim.review, "Review record or plain text")->required();
    c_sim->add_option("--rounds", sim.rounds, "Number of rounds")->capture_default_str()->check(CLI::PositiveNumber);
    c_sim->add_option("--mode", sim.mode, "Pipeline mode for every round")->capture_default_str();
    c_sim->add_option("--score", sim.score, "Original review score when the review has none")->check(CLI::Range(1, 10));
    c_sim->add_option("--out", sim.out, "Directory for the transcript, per-round traces and scores.csv");

    auto* c_ingest = app.add_subcommand("ingest", "Dataset preparation");
    c_ingest->require_subcommand(1);
    RecoverArgs rec;
    auto* c_rec = c_ingest->add_subcommand("recover-scores", "Predict missing initial review scores");
    c_rec->add_option("--records", rec.records, "JSONL with discussion_text and final_score")->required();
    c_rec->add_option("--out", rec.out, "Output JSONL (default: stdout)");
    c_rec->add_flag("--clamp", rec.clamp, "Clamp out-of-range predictions instead of failing");
    SampleArgs smp;
    auto* c_smp = c_ingest->add_subcommand("planner-samples", "Build planner training samples from a review thread");
    c_smp->add_option("--paper", smp.paper, "Paper record or plain text")->required();
    c_smp->add_option("--review", smp.review, "Review record with initial and final scores")->required();
    c_smp->add_option("--rebuttal", smp.rebuttal, "The authors' rebuttal (record or text)")->required();
    c_smp->add_option("--out", smp.out, "Output JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[ConfigError]: " << e.what() << "\n";
        std::cerr << app.help();
        return exit_status(ErrorCode::ConfigError);
    }

    CLI::App* active = nullptr;
    try {
        if (c_rebut->parsed()) {
            active = c_rebut;
            cmd_rebut(g, rebut);
        } else if (c_train->parsed()) {
            active = c_train;
            cmd_train(g, train);
        } else if (c_explain->parsed()) {
            active = c_explain;
            cmd_plan_explain(explain);
        } else if (c_cmp->parsed()) {
            active = c_cmp;
            cmd_eval_compare(g, cmp);
        } else if (c_elo->parsed()) {
            active = c_elo;
            cmd_eval_elo(elo);
        } else if (c_judge->parsed()) {
            active = c_judge;
            cmd_eval_judge(g, jdg);
        } else if (c_sim->parsed()) {
            active = c_sim;
            cmd_simulate(g, sim);
        } else if (c_rec->parsed()) {
            active = c_rec;
            cmd_recover_scores(g, rec);
        } else if (c_smp->parsed()) {
            active = c_smp;
            cmd_planner_samples(g, smp);
        }
    } catch (const Error& e) {
        std::cerr << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        if (e.code() == ErrorCode::ConfigError && active) std::cerr << active->help();
        return exit_status(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error[Internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
