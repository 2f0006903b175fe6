#include "doctest.h"
#include "drpg/executor.hpp"
#include "drpg/prompts.hpp"
#include "helpers.hpp"

using namespace drpg;

namespace {

RebuttalUnit unit(std::size_t i, std::string point, std::string response) {
    RebuttalUnit u;
    u.point_index = i;
    u.point_text = std::move(point);
    u.response_text = std::move(response);
    return u;
}

}  // namespace

TEST_CASE("point prompts carry a perspective section only when planned") {
    const ReviewPoint point{"r", 0, "Latency is not reported."};
    const std::vector<prompts::ContextParagraph> ctx = {{4, "We measure latency in the efficiency study."}};
    const auto plain = executor::point_request(point, ctx, std::nullopt);
    CHECK(plain.system_prompt == prompts::kExecutorPoint);
    CHECK(plain.user_prompt.find(prompts::kPerspectiveHeader) == std::string::npos);
    CHECK(plain.user_prompt.find("We measure latency in the efficiency study.") != std::string::npos);

    const PerspectiveCandidate p{"latency is reported in the appendix", PerspectiveKind::Clarification};
    const auto planned = executor::point_request(point, ctx, p);
    CHECK(planned.user_prompt.find(prompts::kPerspectiveHeader) != std::string::npos);
    CHECK(planned.user_prompt.find(p.text) != std::string::npos);

    CHECK_THROWS_CODE(executor::point_request(point, {}, std::nullopt), ErrorCode::EmptyContext);
}

TEST_CASE("respond_point records what it used") {
    FunctionChat chat([](const GenerationRequest&) { return std::string("canned reply"); });
    const PerspectiveCandidate p{"x"};
    const auto u = executor::respond_point({"r", 2, "Point."}, {{1, "a"}, {5, "b"}}, p, chat);
    CHECK(u.response_text == "canned reply");
    CHECK(u.point_index == 2);
    CHECK(u.context_indices == std::vector<std::size_t>{1, 5});
    CHECK(u.perspective_used == p);
}

TEST_CASE("respond_whole answers the review in one piece") {
    Paper paper;
    paper.id = "p";
    paper.paragraphs = {make_paragraph(0, "Body.")};
    Review review{"r", "p", "Whole review.", std::nullopt, std::nullopt};
    std::string user;
    FunctionChat chat([&](const GenerationRequest& req) {
        user = req.user_prompt;
        return std::string("whole reply");
    });
    const auto r = executor::respond_whole(review, paper, chat);
    CHECK(r.merged_text == "whole reply");
    REQUIRE(r.units.size() == 1);
    CHECK(user == prompts::executor_whole_user("Body.", "Whole review."));
}

TEST_CASE("merge numbers blocks and round-trips") {
    const auto one = executor::merge("r", {unit(0, "P", "R")});
    CHECK(one.merged_text == "**Q1:** P\n**R1:** R");

    const auto three = executor::merge("r", {unit(0, "first", "a\nmulti-line\n\nanswer"), unit(1, "second", "b"),
                                             unit(4, "third", "c")});
    CHECK(three.merged_text.find("**Q3:** third") != std::string::npos);
    const auto pairs = executor::split_merged(three.merged_text);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0] == std::pair<std::string, std::string>{"first", "a\nmulti-line\n\nanswer"});
    CHECK(pairs[2].second == "c");

    CHECK_THROWS_CODE(executor::merge("r", {}), ErrorCode::EmptySet);
    CHECK_THROWS_CODE(executor::merge("r", {unit(1, "a", "b"), unit(0, "c", "d")}), ErrorCode::InvalidArgument);
    CHECK_THROWS_CODE(executor::split_merged("free text"), ErrorCode::ParseFailure);
}
