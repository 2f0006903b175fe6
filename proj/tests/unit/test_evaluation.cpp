#include <cmath>
#include <random>

#include "doctest.h"
#include "drpg/evaluation.hpp"
#include "drpg/prompts.hpp"
#include "helpers.hpp"

using namespace drpg;
using namespace drpg::evaluation;

namespace {

ComparisonRecord game(std::string a, std::string b, Verdict v) {
    ComparisonRecord r;
    r.review_id = "r";
    r.system_a = std::move(a);
    r.system_b = std::move(b);
    r.verdict = v;
    return r;
}

const Review kReview{"r", "p", "The paper lacks ablations.", 4, std::nullopt};

}  // namespace

TEST_CASE("verdict parsing uses the last verdict sentence") {
    CHECK(parse_verdict("Both are fine. I think response 1 is better.") == Verdict::AWins);
    CHECK(parse_verdict("I THINK RESPONSE 2 IS BETTER") == Verdict::BWins);
    CHECK(parse_verdict("I think two responses are similar in quality.") == Verdict::Tie);
    CHECK(parse_verdict("I think response 1 is better... on reflection I think response 2 is better") == Verdict::BWins);
    CHECK_FALSE(parse_verdict("Hard to say."));
    for (auto v : {Verdict::AWins, Verdict::BWins, Verdict::Tie}) {
        CHECK(unswap(unswap(v, true), true) == v);
        CHECK(unswap(v, false) == v);
    }
    CHECK(unswap(Verdict::AWins, true) == Verdict::BWins);
}

TEST_CASE("compare maps the verdict back to the caller's frame") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        std::mt19937_64 rng(seed);
        std::string user;
        FunctionChat chat([&](const GenerationRequest& req) {
            user = req.user_prompt;
            return std::string("I think response 1 is better");
        });
        const auto rec = compare(kReview, "drpg", "text A", "direct", "text B", chat, rng);
        const bool a_first = user.find("Response 1:\ntext A") != std::string::npos;
        CHECK(rec.order_swapped == !a_first);
        CHECK(rec.verdict == (rec.order_swapped ? Verdict::BWins : Verdict::AWins));
    }
}

TEST_CASE("an unparseable verdict is asked for once more, then defaults to a tie") {
    std::mt19937_64 rng(1);
    int calls = 0;
    std::string second;
    FunctionChat chat([&](const GenerationRequest& req) {
        if (++calls == 2) second = req.user_prompt;
        return std::string("Both have merits.");
    });
    const auto rec = compare(kReview, "a", "x", "b", "y", chat, rng);
    CHECK(calls == 2);
    CHECK(second.find(prompts::kVerdictReminder) != std::string::npos);
    CHECK(rec.verdict == Verdict::Tie);
    CHECK(rec.verdict_defaulted);

    nlohmann::json j = rec;
    CHECK(j.get<ComparisonRecord>() == rec);
}

TEST_CASE("win rates") {
    std::vector<ComparisonRecord> recs = {game("a", "b", Verdict::AWins), game("a", "b", Verdict::AWins),
                                          game("b", "a", Verdict::BWins), game("b", "a", Verdict::AWins)};
    auto t = win_rates(recs);
    CHECK(t.systems == std::vector<std::string>{"a", "b"});
    CHECK(*t.rate[0][1] == 75.0);
    CHECK(*t.rate[1][0] == 25.0);
    CHECK_FALSE(t.rate[0][0]);
    CHECK(t.games[0][1] == 4);

    std::vector<ComparisonRecord> ties(3, game("a", "b", Verdict::Tie));
    CHECK(*win_rates(ties).rate[0][1] == 50.0);

    std::mt19937_64 rng(3);
    std::vector<ComparisonRecord> mixed;
    const std::vector<std::string> names = {"x", "y", "z"};
    for (int i = 0; i < 200; ++i) {
        const auto a = names[rng() % 3];
        auto b = names[rng() % 3];
        if (a == b) continue;
        mixed.push_back(game(a, b, static_cast<Verdict>(rng() % 3)));
    }
    const auto m = win_rates(mixed);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j && m.rate[i][j]) CHECK(*m.rate[i][j] + *m.rate[j][i] == doctest::Approx(100.0));
}

TEST_CASE("Elo from Bradley-Terry") {
    std::vector<ComparisonRecord> even;
    for (int i = 0; i < 50; ++i) even.push_back(game("a", "b", i % 2 ? Verdict::AWins : Verdict::BWins));
    const auto e = fit_elo(even);
    CHECK(std::abs(e.ratings.at("a") - 1000.0) < 0.1);
    CHECK(std::abs(e.ratings.at("b") - 1000.0) < 0.1);

    // Three systems: ratings must reproduce each observed pairwise score
    // exactly when the data are consistent with the model.
    std::vector<ComparisonRecord> three;
    auto add = [&](const char* a, const char* b, int wins, int total) {
        for (int i = 0; i < total; ++i) three.push_back(game(a, b, i < wins ? Verdict::AWins : Verdict::BWins));
    };
    add("p", "q", 2, 3);  // strength ratio 2:1
    add("q", "r", 2, 3);  // 2:1
    add("p", "r", 4, 5);  // 4:1
    const auto t = fit_elo(three, 1500.0);
    CHECK(t.converged);
    CHECK(t.ratings.at("p") - t.ratings.at("q") == doctest::Approx(400 * std::log10(2.0)).epsilon(1e-9));
    CHECK(t.ratings.at("q") - t.ratings.at("r") == doctest::Approx(400 * std::log10(2.0)).epsilon(1e-9));
    CHECK((t.ratings.at("p") + t.ratings.at("q") + t.ratings.at("r")) / 3 == doctest::Approx(1500.0).epsilon(1e-12));
    CHECK(elo_expected(t.ratings.at("p"), t.ratings.at("r")) == doctest::Approx(0.8).epsilon(1e-9));

    auto shuffled = three;
    std::mt19937_64 rng(5);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto t2 = fit_elo(shuffled, 1500.0);
    for (const auto& [k, r] : t.ratings) CHECK(std::abs(t2.ratings.at(k) - r) < 1e-6);
}

TEST_CASE("Elo rejects data without a finite maximum") {
    std::vector<ComparisonRecord> sweep(5, game("a", "b", Verdict::AWins));
    CHECK_THROWS_CODE(fit_elo(sweep), ErrorCode::DegenerateData);
    std::vector<ComparisonRecord> split = {game("a", "b", Verdict::AWins), game("b", "a", Verdict::AWins),
                                           game("c", "d", Verdict::Tie)};
    CHECK_THROWS_CODE(fit_elo(split), ErrorCode::DisconnectedGraph);
    CHECK_THROWS_CODE(fit_elo(std::vector<ComparisonRecord>{}), ErrorCode::EmptySet);
}

TEST_CASE("judge output parsing") {
    auto out = parse_judge_output("The response addresses ablations.\nMy final score is 7");
    CHECK(out.score == 7);
    CHECK(out.rationale_cot == "The response addresses ablations.");
    CHECK(parse_judge_output("My final score is 3. Wait. My final score is 6.").score == 6);
    CHECK_THROWS_CODE(parse_judge_output("My final score is 11"), ErrorCode::ScoreParseFailure);
    CHECK_THROWS_CODE(parse_judge_output("no score"), ErrorCode::ScoreParseFailure);

    std::string user;
    FunctionChat chat([&](const GenerationRequest& req) {
        user = req.user_prompt;
        CHECK(req.system_prompt == prompts::kJudge);
        return std::string("Reasonable.\nMy final score is 5");
    });
    const auto rec = judge(kReview, "our reply", 4, chat, "drpg");
    CHECK(rec.score == 5);
    CHECK(rec.system == "drpg");
    CHECK(user == prompts::judge_user(kReview.text, "our reply", 4));
}

TEST_CASE("judge reward and agreement") {
    CHECK(judge_reward(7, 7) == 1.0);
    CHECK(judge_reward(6, 7) == 0.25);
    CHECK(judge_reward(5, 7) == 0.0625);
    CHECK(judge_reward(1, 10) == std::pow(0.25, 9));
    CHECK_THROWS_CODE(judge_reward(0, 5), ErrorCode::InvalidArgument);

    std::vector<int> a(100, 5), b(100, 5);
    CHECK(exact_match_rate(a, b) == 1.0);
    for (int i = 0; i < 29; ++i) b[i] = 6;
    CHECK(exact_match_rate(a, b) == 0.71);
    CHECK(exact_match_rate(std::vector<int>{1, 2}, std::vector<int>{3, 4}) == 0.0);
    CHECK_THROWS_CODE(exact_match_rate(std::vector<int>{1}, std::vector<int>{}), ErrorCode::DimensionMismatch);
}

TEST_CASE("reports list every system") {
    std::vector<ComparisonRecord> recs = {game("a", "b", Verdict::AWins), game("a", "b", Verdict::BWins),
                                          game("a", "b", Verdict::AWins)};
    std::vector<JudgeRecord> judged = {{"r", "a", 6, ""}, {"r", "a", 8, ""}, {"r", "b", 5, ""}};
    const auto means = mean_judge_scores(judged);
    CHECK(means.at("a") == 7.0);
    const auto text = report_text(win_rates(recs), fit_elo(recs), means);
    CHECK(text.find("a") != std::string::npos);
    const auto j = report_json(win_rates(recs), fit_elo(recs), means);
    CHECK(j.dump().find("\"b\"") != std::string::npos);
}
