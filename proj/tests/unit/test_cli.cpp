#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <regex>

#include "doctest.h"
#include "drpg/corpus.hpp"
#include "drpg/evaluation.hpp"
#include "helpers.hpp"
#include "support/synthetic.hpp"

using namespace drpg;
using drpg::testing::kFixtures;
using drpg::testing::TempDir;

namespace {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

Run cli(const std::string& args, const TempDir& dir) {
    const auto err_path = dir / "stderr.txt";
    const std::string cmd = q(DRPG_CLI_PATH) + " " + args + " 2>" + q(err_path);
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
    const int raw = ::pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = corpus::read_file(err_path);
    return r;
}

const std::string kPaper = q(kFixtures / "paper.txt");
const std::string kReview = q(kFixtures / "review.json");

}  // namespace

TEST_CASE("rebut writes the rebuttal and its trace") {
    TempDir dir("cli");
    const auto r = cli("--provider mock:42 rebut --paper " + kPaper + " --review " + kReview +
                            " --mode drpg --out " + q(dir / "out"),
                        dir);
    CHECK_MESSAGE(r.status == 0, r.err);
    for (const char* f : {"rebuttal.json", "rebuttal.md", "trace/run.json", "trace/points.jsonl",
                          "trace/selections.jsonl", "trace/units.jsonl"})
        CHECK_MESSAGE(std::filesystem::exists(dir / "out" / f), f);
    const auto rebuttal = corpus::load_artifact<Rebuttal>(dir / "out" / "rebuttal.json");
    CHECK(rebuttal.review_id == "review-1");
    CHECK(r.out.find("drpg") != std::string::npos);

    const auto explain = cli("plan-explain --trace " + q(dir / "out" / "trace") + " --point 0", dir);
    CHECK_MESSAGE(explain.status == 0, explain.err);
    CHECK(explain.out.find("Clarification") != std::string::npos);
}

TEST_CASE("bad arguments exit with the configuration code and usage") {
    TempDir dir("cli");
    const auto r = cli("--provider mock:1 rebut --paper " + kPaper + " --review " + kReview + " --mode drpgx --out " +
                            q(dir / "o"),
                        dir);
    CHECK(r.status == 2);
    CHECK(r.err.find("error[ConfigError]") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);

    CHECK(cli("frobnicate", dir).status == 2);
    const auto missing = cli("--provider mock:1 rebut --paper " + q(dir / "nope.txt") + " --review " + kReview +
                                  " --out " + q(dir / "o"),
                              dir);
    CHECK(missing.status == 3);
    CHECK(missing.err.find("error[IoFailure]") != std::string::npos);
}

TEST_CASE("eval elo reports the gap of a 75% record") {
    TempDir dir("cli");
    std::vector<evaluation::ComparisonRecord> recs;
    for (int i = 0; i < 10000; ++i) {
        evaluation::ComparisonRecord r;
        r.review_id = "r" + std::to_string(i);
        r.system_a = "drpg";
        r.system_b = "direct";
        r.verdict = i % 4 ? evaluation::Verdict::AWins : evaluation::Verdict::BWins;
        recs.push_back(r);
    }
    corpus::write_jsonl(dir / "cmp.jsonl", recs);
    const auto r = cli("eval elo --records " + q(dir / "cmp.jsonl") + " --json " + q(dir / "report.json"), dir);
    CHECK_MESSAGE(r.status == 0, r.err);
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex(R"(Elo gap \(max - min\): ([0-9.]+))")));
    CHECK(std::abs(std::stod(m[1]) - 400 * std::log10(3.0)) <= 2.0);
    CHECK(std::filesystem::exists(dir / "report.json"));
}

TEST_CASE("eval compare and judge under the mock provider") {
    TempDir dir("cli");
    corpus::write_file(dir / "a.txt", "We added the missing ablation.");
    corpus::write_file(dir / "b.txt", "Thank you.");
    const auto cmp = cli("--provider mock:2 eval compare --review " + kReview + " --a " + q(dir / "a.txt") + " --b " +
                              q(dir / "b.txt") + " --name-a drpg --name-b direct --out " + q(dir / "c.jsonl"),
                          dir);
    CHECK_MESSAGE(cmp.status == 0, cmp.err);
    CHECK(corpus::load_records<evaluation::ComparisonRecord>(dir / "c.jsonl").size() == 1);

    const auto jdg = cli("--provider mock:2 eval judge --review " + kReview + " --rebuttal " + q(dir / "a.txt") +
                              " --score 4",
                          dir);
    CHECK_MESSAGE(jdg.status == 0, jdg.err);
    CHECK(jdg.out.find("score") != std::string::npos);

    CHECK(cli("--provider mock:2 eval judge --review " + kReview + " --rebuttal " + q(dir / "a.txt") + " --score 11",
               dir)
              .status == 2);
}

TEST_CASE("simulate prints the score trajectory") {
    TempDir dir("cli");
    const auto r = cli("--provider mock:5 simulate --paper " + kPaper + " --review " + kReview +
                            " --rounds 2 --mode drg --out " + q(dir / "sim"),
                        dir);
    CHECK_MESSAGE(r.status == 0, r.err);
    CHECK(r.out.find("round,score") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "sim" / "transcript.json"));
    CHECK(std::filesystem::exists(dir / "sim" / "scores.csv"));
}

TEST_CASE("train-planner writes a checkpoint and metrics") {
    TempDir dir("cli");
    std::mt19937_64 rng(3);
    testing::SyntheticTask task;
    task.dim = 16;
    corpus::write_jsonl(dir / "train.jsonl", task.make_many(40, rng));
    corpus::write_jsonl(dir / "held.jsonl", task.make_many(10, rng));
    corpus::write_file(dir / "cfg.json",
                       R"({"planner": {"hidden": [8, 4]}, "training": {"epochs": 1, "batch_size": 8}})");
    const auto r = cli("--config " + q(dir / "cfg.json") + " train-planner --samples " + q(dir / "train.jsonl") +
                            " --heldout " + q(dir / "held.jsonl") + " --out " + q(dir / "m.bin"),
                        dir);
    CHECK_MESSAGE(r.status == 0, r.err);
    CHECK(std::filesystem::exists(dir / "m.bin"));
    const auto metrics = nlohmann::json::parse(corpus::read_file(dir / "m.bin.metrics.json"));
    CHECK(metrics.contains("heldout_accuracy"));
}

TEST_CASE("ingest recover-scores adds initial scores") {
    TempDir dir("cli");
    corpus::write_file(dir / "in.jsonl", R"({"discussion_text": "The authors addressed my concerns.", "final_score": 6})"
                                         "\n");
    const auto r = cli("--provider mock:1 ingest recover-scores --records " + q(dir / "in.jsonl") + " --out " +
                            q(dir / "out.jsonl"),
                        dir);
    CHECK_MESSAGE(r.status == 0, r.err);
    const auto line = nlohmann::json::parse(corpus::read_file(dir / "out.jsonl"));
    CHECK(line.at("initial_score").is_number_integer());
    CHECK(line.at("final_score") == 6);
}
