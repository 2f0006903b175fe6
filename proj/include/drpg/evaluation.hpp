#pragma once

#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drpg/providers.hpp"
#include "drpg/types.hpp"

namespace drpg::evaluation {

// ---------------------------------------------------------------------------
// Pairwise comparison

enum class Verdict { AWins, BWins, Tie };

std::string_view to_string(Verdict v);
Verdict parse_verdict_name(std::string_view s);

struct ComparisonRecord {
    std::string review_id;
    std::string system_a;
    std::string system_b;
    bool order_swapped = false;  // b was shown as response 1
    Verdict verdict = Verdict::Tie;  // in the (a, b) frame
    std::string rationale;
    bool verdict_defaulted = false;  // no parseable verdict after the retry

    friend bool operator==(const ComparisonRecord&, const ComparisonRecord&) = default;
};

void to_json(nlohmann::json& j, const ComparisonRecord& r);
void from_json(const nlohmann::json& j, ComparisonRecord& r);

// Verdict in the presented frame (AWins = response 1) from the last verdict
// sentence in raw, or nullopt.
std::optional<Verdict> parse_verdict(std::string_view raw);

// Maps a presented-frame verdict back to the (a, b) frame. An involution.
Verdict unswap(Verdict v, bool swapped);

struct CompareOptions {
    std::string model_name;
    double temperature = 0.0;
};

// Shows the pair in an rng-chosen order. An unparseable verdict is asked for
// once more; a second failure records a defaulted Tie.
ComparisonRecord compare(const Review& review, const std::string& system_a, std::string_view rebuttal_a,
                         const std::string& system_b, std::string_view rebuttal_b, ChatProvider& chat,
                         std::mt19937_64& rng, const CompareOptions& options = {});

// ---------------------------------------------------------------------------
// Win rates and ratings

struct WinRateTable {
    std::vector<std::string> systems;  // sorted
    // rate[i][j]: percentage of i's games against j that i won, ties as half.
    // Unset on the diagonal and for pairs that never met.
    std::vector<std::vector<std::optional<double>>> rate;
    std::vector<std::vector<std::size_t>> games;
};

WinRateTable win_rates(std::span<const ComparisonRecord> records);

struct EloTable {
    std::map<std::string, double> ratings;
    double base = 1000.0;
    std::size_t iterations = 0;
    bool converged = false;
};

void to_json(nlohmann::json& j, const EloTable& t);

// Bradley-Terry maximum likelihood with ties counted as half a win for each
// side, solved by Newton's method, reported on the 400-point base-10 scale
// with the mean rating equal to base.
// Throws DisconnectedGraph when some systems never meet directly or
// indirectly, DegenerateData when the maximum does not exist (for instance a
// system that won or lost every game), EmptySet without games.
EloTable fit_elo(std::span<const ComparisonRecord> records, double base = 1000.0);

// Expected score of a against b under the Elo scale.
double elo_expected(double rating_a, double rating_b);

// ---------------------------------------------------------------------------
// Judge

struct JudgeRecord {
    std::string review_id;
    std::string system;
    int score = 0;
    std::string rationale_cot;

    friend bool operator==(const JudgeRecord&, const JudgeRecord&) = default;
};

void to_json(nlohmann::json& j, const JudgeRecord& r);
void from_json(const nlohmann::json& j, JudgeRecord& r);

struct JudgeOutput {
    int score = 0;
    std::string rationale_cot;  // trimmed text before the final-score sentence
};

// Uses the last "My final score is X". Throws ScoreParseFailure when absent
// or outside [1, 10].
JudgeOutput parse_judge_output(std::string_view raw);

struct JudgeOptions {
    std::string model_name;
    double temperature = 0.0;
};

JudgeRecord judge(const Review& review, std::string_view rebuttal_text, int initial_score, ChatProvider& chat,
                  const std::string& system = "", const JudgeOptions& options = {});

// 0.25 ^ |predicted - actual|; both scores must be in [1, 10].
double judge_reward(int predicted, int actual);

// Fraction of equal pairs; 0 for empty input. Throws DimensionMismatch when
// the lengths differ.
double exact_match_rate(std::span<const int> predicted, std::span<const int> actual);

std::map<std::string, double> mean_judge_scores(std::span<const JudgeRecord> records);

// ---------------------------------------------------------------------------
// Reports: win-rate matrix, Elo column and mean judge score per system.

std::string report_text(const WinRateTable& wins, const EloTable& elo,
                        const std::map<std::string, double>& judge_means = {});
nlohmann::json report_json(const WinRateTable& wins, const EloTable& elo,
                           const std::map<std::string, double>& judge_means = {});

}  // namespace drpg::evaluation
