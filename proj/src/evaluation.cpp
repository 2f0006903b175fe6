#include "drpg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>
#include <set>

#include <Eigen/Dense>

#include "drpg/json_util.hpp"
#include "drpg/prompts.hpp"
#include "drpg/text.hpp"

namespace drpg::evaluation {

using nlohmann::json;

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::AWins: return "a_wins";
        case Verdict::BWins: return "b_wins";
        case Verdict::Tie: return "tie";
    }
    return "tie";
}

Verdict parse_verdict_name(std::string_view s) {
    for (auto v : {Verdict::AWins, Verdict::BWins, Verdict::Tie}) {
        if (s == to_string(v)) return v;
    }
    throw Error(ErrorCode::SchemaViolation, "unknown verdict \"" + std::string(s) + "\"");
}

void to_json(json& j, const ComparisonRecord& r) {
    j = json{{"review_id", r.review_id},         {"system_a", r.system_a},
             {"system_b", r.system_b},           {"order_swapped", r.order_swapped},
             {"verdict", to_string(r.verdict)},  {"rationale", r.rationale},
             {"verdict_defaulted", r.verdict_defaulted}};
}

void from_json(const json& j, ComparisonRecord& r) {
    r.review_id = json_util::get<std::string>(j, "review_id");
    r.system_a = json_util::get<std::string>(j, "system_a");
    r.system_b = json_util::get<std::string>(j, "system_b");
    r.order_swapped = json_util::get_optional<bool>(j, "order_swapped").value_or(false);
    r.verdict = parse_verdict_name(json_util::get<std::string>(j, "verdict"));
    r.rationale = json_util::get_optional<std::string>(j, "rationale").value_or("");
    r.verdict_defaulted = json_util::get_optional<bool>(j, "verdict_defaulted").value_or(false);
    if (r.system_a == r.system_b) throw Error(ErrorCode::SchemaViolation, "system_a equals system_b");
}

std::optional<Verdict> parse_verdict(std::string_view raw) {
    static const std::regex pattern(
        R"(i\s+think\s+(?:(?:response\s*)?(1|2|one|two)\s+is\s+(?:the\s+)?better|(?:the\s+)?two\s+responses\s+are\s+similar\s+in\s+quality))",
        std::regex::icase);
    const std::string s(raw);
    std::optional<Verdict> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        if (!m[1].matched) {
            last = Verdict::Tie;
        } else {
            const auto which = text::to_lower(m[1].str());
            last = which == "1" || which == "one" ? Verdict::AWins : Verdict::BWins;
        }
    }
    return last;
}

Verdict unswap(Verdict v, bool swapped) {
    if (!swapped || v == Verdict::Tie) return v;
    return v == Verdict::AWins ? Verdict::BWins : Verdict::AWins;
}

ComparisonRecord compare(const Review& review, const std::string& system_a, std::string_view rebuttal_a,
                         const std::string& system_b, std::string_view rebuttal_b, ChatProvider& chat,
                         std::mt19937_64& rng, const CompareOptions& options) {
    if (system_a == system_b) throw Error(ErrorCode::InvalidArgument, "cannot compare a system with itself");
    if (text::is_blank(rebuttal_a) || text::is_blank(rebuttal_b)) {
        throw Error(ErrorCode::InvalidArgument, "both rebuttals must be non-empty");
    }
    ComparisonRecord rec;
    rec.review_id = review.id;
    rec.system_a = system_a;
    rec.system_b = system_b;
    rec.order_swapped = (rng() & 1u) != 0;

    GenerationRequest req;
    req.system_prompt = std::string(prompts::kCompare);
    req.user_prompt = rec.order_swapped ? prompts::compare_user(review.text, rebuttal_b, rebuttal_a)
                                        : prompts::compare_user(review.text, rebuttal_a, rebuttal_b);
    req.temperature = options.temperature;
    req.model_name = options.model_name;
    rec.rationale = chat.generate(req);
    auto verdict = parse_verdict(rec.rationale);
    if (!verdict) {
        req.user_prompt += "\n\n";
        req.user_prompt += prompts::kVerdictReminder;
        rec.rationale = chat.generate(req);
        verdict = parse_verdict(rec.rationale);
    }
    if (verdict) {
        rec.verdict = unswap(*verdict, rec.order_swapped);
    } else {
        rec.verdict = Verdict::Tie;
        rec.verdict_defaulted = true;
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Win rates and ratings

namespace {

struct Tally {
    std::vector<std::string> systems;
    Eigen::MatrixXd games;   // symmetric
    Eigen::MatrixXd points;  // points[i][j]: i's wins against j plus half the ties
};

Tally tally(std::span<const ComparisonRecord> records) {
    std::set<std::string> names;
    for (const auto& r : records) {
        if (r.system_a == r.system_b) throw Error(ErrorCode::InvalidArgument, "record compares a system with itself");
        names.insert(r.system_a);
        names.insert(r.system_b);
    }
    Tally t;
    t.systems.assign(names.begin(), names.end());
    const auto n = static_cast<Eigen::Index>(t.systems.size());
    t.games = Eigen::MatrixXd::Zero(n, n);
    t.points = Eigen::MatrixXd::Zero(n, n);
    auto idx = [&](const std::string& s) {
        return static_cast<Eigen::Index>(std::lower_bound(t.systems.begin(), t.systems.end(), s) - t.systems.begin());
    };
    for (const auto& r : records) {
        const auto a = idx(r.system_a), b = idx(r.system_b);
        t.games(a, b) += 1;
        t.games(b, a) += 1;
        switch (r.verdict) {
            case Verdict::AWins: t.points(a, b) += 1; break;
            case Verdict::BWins: t.points(b, a) += 1; break;
            case Verdict::Tie:
                t.points(a, b) += 0.5;
                t.points(b, a) += 0.5;
                break;
        }
    }
    return t;
}

// Nodes reachable from start along edges where edge(i, j) holds.
template <class Edge>
std::vector<bool> reachable(Eigen::Index n, Eigen::Index start, Edge edge) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!seen[static_cast<std::size_t>(j)] && edge(i, j)) {
                seen[static_cast<std::size_t>(j)] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double log_likelihood(const Tally& t, const Eigen::VectorXd& theta) {
    double ll = 0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
            if (t.points(i, j) > 0) ll += t.points(i, j) * std::log(sigmoid(theta(i) - theta(j)));
        }
    }
    return ll;
}

}  // namespace

WinRateTable win_rates(std::span<const ComparisonRecord> records) {
    const auto t = tally(records);
    WinRateTable w;
    w.systems = t.systems;
    const auto n = t.systems.size();
    w.rate.assign(n, std::vector<std::optional<double>>(n));
    w.games.assign(n, std::vector<std::size_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto g = t.games(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            w.games[i][j] = static_cast<std::size_t>(g);
            if (i != j && g > 0) {
                w.rate[i][j] = 100.0 * t.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / g;
            }
        }
    }
    return w;
}

void to_json(json& j, const EloTable& t) {
    j = json{{"ratings", t.ratings}, {"base", t.base}, {"iterations", t.iterations}, {"converged", t.converged}};
}

EloTable fit_elo(std::span<const ComparisonRecord> records, double base) {
    if (records.empty()) throw Error(ErrorCode::EmptySet, "no comparison records");
    const auto t = tally(records);
    const auto n = static_cast<Eigen::Index>(t.systems.size());

    const auto met = reachable(n, 0, [&](auto i, auto j) { return t.games(i, j) > 0; });
    if (std::find(met.begin(), met.end(), false) != met.end()) {
        std::string missing;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!met[static_cast<std::size_t>(i)]) missing += (missing.empty() ? "" : ", ") + t.systems[i];
        }
        throw Error(ErrorCode::DisconnectedGraph, "no chain of games links " + t.systems[0] + " to " + missing);
    }
    // A finite maximum exists iff every system can be reached along
    // "scored against" edges in both directions.
    const auto fwd = reachable(n, 0, [&](auto i, auto j) { return t.points(i, j) > 0; });
    const auto bwd = reachable(n, 0, [&](auto i, auto j) { return t.points(j, i) > 0; });
    if (std::find(fwd.begin(), fwd.end(), false) != fwd.end() || std::find(bwd.begin(), bwd.end(), false) != bwd.end()) {
        std::string extreme;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pts = t.points.row(i).sum(), games = t.games.row(i).sum();
            if (pts == 0 || pts == games) {
                extreme += (extreme.empty() ? "" : ", ") + t.systems[i] + (pts == 0 ? " (lost all)" : " (won all)");
            }
        }
        throw Error(ErrorCode::DegenerateData,
                    "ratings diverge to infinity: " +
                        (extreme.empty() ? std::string("a group of systems never scored against the rest") : extreme));
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    EloTable table;
    table.base = base;
    constexpr std::size_t kMaxIterations = 200;
    constexpr double kTolerance = 1e-8;
    for (; table.iterations < kMaxIterations; ++table.iterations) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j || t.games(i, j) == 0) continue;
                const double p = sigmoid(theta(i) - theta(j));
                grad(i) += t.points(i, j) - t.games(i, j) * p;
                const double w = t.games(i, j) * p * (1 - p);
                hess(i, i) -= w;
                hess(i, j) += w;
            }
        }
        if (grad.norm() < kTolerance) {
            table.converged = true;
            break;
        }
        // The likelihood only sees differences; pin the last strength.
        const auto m = n - 1;
        Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
        step.head(m) = hess.topLeftCorner(m, m).ldlt().solve(-grad.head(m));
        const double ll = log_likelihood(t, theta);
        double scale = 1.0;
        while (scale > 1e-12 && log_likelihood(t, theta + scale * step) < ll - 1e-12 * std::abs(ll)) scale /= 2;
        theta += scale * step;
    }
    const double mean = theta.mean();
    const double to_elo = 400.0 / std::log(10.0);
    for (Eigen::Index i = 0; i < n; ++i) table.ratings[t.systems[i]] = base + to_elo * (theta(i) - mean);
    return table;
}

double elo_expected(double rating_a, double rating_b) {
    return 1.0 / (1.0 + std::pow(10.0, (rating_b - rating_a) / 400.0));
}

// ---------------------------------------------------------------------------
// Judge

void to_json(json& j, const JudgeRecord& r) {
    j = json{{"review_id", r.review_id}, {"system", r.system}, {"score", r.score}, {"rationale_cot", r.rationale_cot}};
}

void from_json(const json& j, JudgeRecord& r) {
    r.review_id = json_util::get<std::string>(j, "review_id");
    r.system = json_util::get_optional<std::string>(j, "system").value_or("");
    r.score = json_util::get<int>(j, "score");
    r.rationale_cot = json_util::get_optional<std::string>(j, "rationale_cot").value_or("");
    if (!valid_score(r.score)) throw Error(ErrorCode::SchemaViolation, "judge score outside [1, 10]");
}

JudgeOutput parse_judge_output(std::string_view raw) {
    static const std::regex pattern(R"(my\s+final\s+score\s+is[\s:*]*(-?\d+))", std::regex::icase);
    const std::string s(raw);
    std::smatch last;
    bool found = false;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern); it != std::sregex_iterator(); ++it) {
        last = *it;
        found = true;
    }
    if (!found) throw Error(ErrorCode::ScoreParseFailure, "no \"My final score is X\" sentence in judge output");
    int score = 0;
    try {
        score = std::stoi(last[1].str());
    } catch (const std::exception&) {
        throw Error(ErrorCode::ScoreParseFailure, "judge score \"" + last[1].str() + "\" is not an integer");
    }
    if (!valid_score(score)) {
        throw Error(ErrorCode::ScoreParseFailure, "judge score " + std::to_string(score) + " outside [1, 10]");
    }
    return {score, text::trim(std::string_view(s).substr(0, static_cast<std::size_t>(last.position(0))))};
}

JudgeRecord judge(const Review& review, std::string_view rebuttal_text, int initial_score, ChatProvider& chat,
                  const std::string& system, const JudgeOptions& options) {
    if (!valid_score(initial_score)) throw Error(ErrorCode::InvalidArgument, "initial score outside [1, 10]");
    GenerationRequest req;
    req.system_prompt = std::string(prompts::kJudge);
    req.user_prompt = prompts::judge_user(review.text, rebuttal_text, initial_score);
    req.temperature = options.temperature;
    req.model_name = options.model_name;
    auto out = parse_judge_output(chat.generate(req));
    return {review.id, system, out.score, std::move(out.rationale_cot)};
}

double judge_reward(int predicted, int actual) {
    if (!valid_score(predicted) || !valid_score(actual)) {
        throw Error(ErrorCode::InvalidArgument, "judge reward needs scores in [1, 10]");
    }
    double r = 1.0;
    for (int d = std::abs(predicted - actual); d > 0; --d) r *= 0.25;
    return r;
}

double exact_match_rate(std::span<const int> predicted, std::span<const int> actual) {
    if (predicted.size() != actual.size()) throw Error(ErrorCode::DimensionMismatch, "score lists differ in length");
    if (predicted.empty()) return 0.0;
    std::size_t equal = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) equal += predicted[i] == actual[i];
    return static_cast<double>(equal) / static_cast<double>(predicted.size());
}

std::map<std::string, double> mean_judge_scores(std::span<const JudgeRecord> records) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& r : records) {
        auto& [sum, count] = acc[r.system];
        sum += r.score;
        ++count;
    }
    std::map<std::string, double> out;
    for (const auto& [s, v] : acc) out[s] = v.first / static_cast<double>(v.second);
    return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

}  // namespace

std::string report_text(const WinRateTable& wins, const EloTable& elo,
                        const std::map<std::string, double>& judge_means) {
    std::size_t name_w = 6;
    for (const auto& s : wins.systems) name_w = std::max(name_w, s.size());
    const std::size_t col_w = std::max<std::size_t>(8, name_w);
    std::string out = "Win rate against (%)\n" + std::string(name_w, ' ');
    for (const auto& s : wins.systems) out += " " + pad(s, col_w);
    out += " " + pad("Elo", 9);
    if (!judge_means.empty()) out += " " + pad("Judge", 7);
    out += "\n";
    for (std::size_t i = 0; i < wins.systems.size(); ++i) {
        std::string name = wins.systems[i];
        name.resize(name_w, ' ');
        out += name;
        for (std::size_t j = 0; j < wins.systems.size(); ++j) {
            out += " " + pad(wins.rate[i][j] ? fixed(*wins.rate[i][j], 1) : "-", col_w);
        }
        auto r = elo.ratings.find(wins.systems[i]);
        out += " " + pad(r == elo.ratings.end() ? "-" : fixed(r->second, 1), 9);
        if (!judge_means.empty()) {
            auto jm = judge_means.find(wins.systems[i]);
            out += " " + pad(jm == judge_means.end() ? "-" : fixed(jm->second, 2), 7);
        }
        out += "\n";
    }
    return out;
}

json report_json(const WinRateTable& wins, const EloTable& elo, const std::map<std::string, double>& judge_means) {
    json rows = json::array();
    for (std::size_t i = 0; i < wins.systems.size(); ++i) {
        json against = json::object();
        for (std::size_t j = 0; j < wins.systems.size(); ++j) {
            if (wins.rate[i][j]) against[wins.systems[j]] = *wins.rate[i][j];
        }
        json row{{"system", wins.systems[i]}, {"win_rate_against", against}};
        if (auto r = elo.ratings.find(wins.systems[i]); r != elo.ratings.end()) row["elo"] = r->second;
        if (auto jm = judge_means.find(wins.systems[i]); jm != judge_means.end()) row["judge_mean"] = jm->second;
        rows.push_back(std::move(row));
    }
    return json{{"systems", rows}, {"elo", elo}};
}

}  // namespace drpg::evaluation
