#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Domain values shared across the pipeline. All of them are plain immutable
// data once built; validation lives in the constructing operations and in
// from_json, which rejects anything that breaks an invariant.
namespace drpg {

struct Paragraph {
    std::size_t index = 0;
    std::string text;
    std::size_t char_len = 0;  // code points of text

    friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

struct Paper {
    std::string id;
    std::string title;
    std::vector<Paragraph> paragraphs;

    std::size_t total_chars() const;
    // Paragraph texts joined by blank lines.
    std::string full_text() const;

    friend bool operator==(const Paper&, const Paper&) = default;
};

Paragraph make_paragraph(std::size_t index, std::string text);

// Throws SchemaViolation when an invariant of Paper does not hold.
void validate(const Paper& paper);

struct Review {
    std::string id;
    std::string paper_id;
    std::string text;
    std::optional<int> initial_score;
    std::optional<int> final_score;

    friend bool operator==(const Review&, const Review&) = default;
};

void validate(const Review& review);

struct ReviewPoint {
    std::string review_id;
    std::size_t index = 0;
    std::string text;

    friend bool operator==(const ReviewPoint&, const ReviewPoint&) = default;
};

enum class PerspectiveKind { Clarification, Justification };
enum class PerspectiveSource { Proposed, GroundTruth };

std::string_view to_string(PerspectiveKind kind);
std::string_view to_string(PerspectiveSource source);
std::optional<PerspectiveKind> parse_perspective_kind(std::string_view s);

struct PerspectiveCandidate {
    std::string text;  // without the leading kind tag
    PerspectiveKind kind = PerspectiveKind::Clarification;
    PerspectiveSource source = PerspectiveSource::Proposed;

    // "Clarification: <text>", the form the proposer emits.
    std::string tagged() const;

    friend bool operator==(const PerspectiveCandidate&, const PerspectiveCandidate&) = default;
};

struct RebuttalUnit {
    std::size_t point_index = 0;
    std::string response_text;
    std::optional<PerspectiveCandidate> perspective_used;
    std::vector<std::size_t> context_indices;
    // Text of the point being answered; used for the Q/R layout of merged text.
    std::string point_text;

    friend bool operator==(const RebuttalUnit&, const RebuttalUnit&) = default;
};

struct Rebuttal {
    std::string review_id;
    std::vector<RebuttalUnit> units;
    std::string merged_text;

    friend bool operator==(const Rebuttal&, const Rebuttal&) = default;
};

struct DiscussionRound {
    std::string review_text;
    Rebuttal rebuttal;
    int judge_score = 0;

    friend bool operator==(const DiscussionRound&, const DiscussionRound&) = default;
};

struct DiscussionTranscript {
    std::string paper_id;
    std::vector<DiscussionRound> rounds;

    friend bool operator==(const DiscussionTranscript&, const DiscussionTranscript&) = default;
};

void validate(const DiscussionTranscript& transcript);

inline bool valid_score(int s) { return s >= 1 && s <= 10; }

void to_json(nlohmann::json& j, const Paragraph& p);
void from_json(const nlohmann::json& j, Paragraph& p);
void to_json(nlohmann::json& j, const Paper& p);
void from_json(const nlohmann::json& j, Paper& p);
void to_json(nlohmann::json& j, const Review& r);
void from_json(const nlohmann::json& j, Review& r);
void to_json(nlohmann::json& j, const ReviewPoint& p);
void from_json(const nlohmann::json& j, ReviewPoint& p);
void to_json(nlohmann::json& j, const PerspectiveCandidate& c);
void from_json(const nlohmann::json& j, PerspectiveCandidate& c);
void to_json(nlohmann::json& j, const RebuttalUnit& u);
void from_json(const nlohmann::json& j, RebuttalUnit& u);
void to_json(nlohmann::json& j, const Rebuttal& r);
void from_json(const nlohmann::json& j, Rebuttal& r);
void to_json(nlohmann::json& j, const DiscussionRound& r);
void from_json(const nlohmann::json& j, DiscussionRound& r);
void to_json(nlohmann::json& j, const DiscussionTranscript& t);
void from_json(const nlohmann::json& j, DiscussionTranscript& t);

}  // namespace drpg
