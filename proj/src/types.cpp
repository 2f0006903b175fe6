#include "drpg/types.hpp"

#include "drpg/error.hpp"
#include "drpg/json_util.hpp"
#include "drpg/text.hpp"

namespace drpg {

using json_util::get;
using json_util::get_optional;
using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::SchemaViolation, msg); }

std::size_t get_index(const json& j, const char* name) {
    const auto& v = json_util::field(j, name);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        schema(std::string("field \"") + name + "\" must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::optional<int> get_score(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) schema(std::string("field \"") + name + "\" must be an integer");
    int s = it->get<int>();
    if (!valid_score(s)) schema(std::string("field \"") + name + "\" outside [1,10]");
    return s;
}

std::string get_text(const json& j, const char* name) {
    auto s = get<std::string>(j, name);
    if (text::is_blank(s)) schema(std::string("field \"") + name + "\" is blank");
    return s;
}

}  // namespace

std::size_t Paper::total_chars() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs) n += p.char_len;
    return n;
}

std::string Paper::full_text() const {
    std::string out;
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        if (i) out += "\n\n";
        out += paragraphs[i].text;
    }
    return out;
}

Paragraph make_paragraph(std::size_t index, std::string text) {
    Paragraph p;
    p.index = index;
    p.char_len = text::utf8_length(text);
    p.text = std::move(text);
    return p;
}

void validate(const Paper& paper) {
    if (paper.paragraphs.empty()) schema("paper \"" + paper.id + "\" has no paragraphs");
    for (std::size_t i = 0; i < paper.paragraphs.size(); ++i) {
        const auto& p = paper.paragraphs[i];
        if (p.index != i) schema("paragraph indices are not contiguous from 0");
        if (text::is_blank(p.text)) schema("paragraph " + std::to_string(i) + " is blank");
        if (p.char_len != text::utf8_length(p.text)) schema("paragraph char_len mismatch");
    }
}

void validate(const Review& review) {
    if (text::is_blank(review.text)) schema("review \"" + review.id + "\" has blank text");
    if (review.initial_score && !valid_score(*review.initial_score)) schema("initial_score outside [1,10]");
    if (review.final_score && !valid_score(*review.final_score)) schema("final_score outside [1,10]");
}

void validate(const DiscussionTranscript& transcript) {
    if (transcript.rounds.empty()) schema("transcript has no rounds");
    for (const auto& r : transcript.rounds) {
        if (!valid_score(r.judge_score)) schema("judge_score outside [1,10]");
    }
}

std::string_view to_string(PerspectiveKind kind) {
    return kind == PerspectiveKind::Clarification ? "Clarification" : "Justification";
}

std::string_view to_string(PerspectiveSource source) {
    return source == PerspectiveSource::Proposed ? "Proposed" : "GroundTruth";
}

std::optional<PerspectiveKind> parse_perspective_kind(std::string_view s) {
    auto lower = text::to_lower(text::trim(s));
    if (lower == "clarification") return PerspectiveKind::Clarification;
    if (lower == "justification") return PerspectiveKind::Justification;
    return std::nullopt;
}

std::string PerspectiveCandidate::tagged() const {
    return std::string(to_string(kind)) + ": " + text;
}

void to_json(json& j, const Paragraph& p) { j = json{{"index", p.index}, {"text", p.text}}; }

void from_json(const json& j, Paragraph& p) {
    p = make_paragraph(get_index(j, "index"), get_text(j, "text"));
}

void to_json(json& j, const Paper& p) {
    j = json{{"id", p.id}, {"title", p.title}, {"paragraphs", p.paragraphs}};
}

void from_json(const json& j, Paper& p) {
    p.id = get<std::string>(j, "id");
    p.title = get<std::string>(j, "title");
    const auto& paras = json_util::field(j, "paragraphs");
    if (!paras.is_array()) schema("field \"paragraphs\" is ill-typed");
    p.paragraphs.clear();
    for (const auto& e : paras) p.paragraphs.push_back(e.get<Paragraph>());
    validate(p);
}

void to_json(json& j, const Review& r) {
    j = json{{"id", r.id}, {"paper_id", r.paper_id}, {"text", r.text}};
    if (r.initial_score) j["initial_score"] = *r.initial_score;
    if (r.final_score) j["final_score"] = *r.final_score;
}

void from_json(const json& j, Review& r) {
    r.id = get<std::string>(j, "id");
    r.paper_id = get<std::string>(j, "paper_id");
    r.text = get_text(j, "text");
    r.initial_score = get_score(j, "initial_score");
    r.final_score = get_score(j, "final_score");
}

void to_json(json& j, const ReviewPoint& p) {
    j = json{{"review_id", p.review_id}, {"index", p.index}, {"text", p.text}};
}

void from_json(const json& j, ReviewPoint& p) {
    p.review_id = get<std::string>(j, "review_id");
    p.index = get_index(j, "index");
    p.text = get_text(j, "text");
}

void to_json(json& j, const PerspectiveCandidate& c) {
    j = json{{"text", c.text}, {"kind", to_string(c.kind)}, {"source", to_string(c.source)}};
}

void from_json(const json& j, PerspectiveCandidate& c) {
    c.text = get_text(j, "text");
    auto kind = parse_perspective_kind(get<std::string>(j, "kind"));
    if (!kind) schema("field \"kind\" must be Clarification or Justification");
    c.kind = *kind;
    auto source = get_optional<std::string>(j, "source").value_or("Proposed");
    if (source == "Proposed") {
        c.source = PerspectiveSource::Proposed;
    } else if (source == "GroundTruth") {
        c.source = PerspectiveSource::GroundTruth;
    } else {
        schema("field \"source\" must be Proposed or GroundTruth");
    }
}

void to_json(json& j, const RebuttalUnit& u) {
    j = json{{"point_index", u.point_index},
             {"response_text", u.response_text},
             {"context_indices", u.context_indices}};
    if (u.perspective_used) j["perspective_used"] = *u.perspective_used;
    if (!u.point_text.empty()) j["point_text"] = u.point_text;
}

void from_json(const json& j, RebuttalUnit& u) {
    u.point_index = get_index(j, "point_index");
    u.response_text = get_text(j, "response_text");
    u.context_indices = get<std::vector<std::size_t>>(j, "context_indices");
    u.perspective_used = get_optional<PerspectiveCandidate>(j, "perspective_used");
    u.point_text = get_optional<std::string>(j, "point_text").value_or("");
}

void to_json(json& j, const Rebuttal& r) {
    j = json{{"review_id", r.review_id}, {"units", r.units}, {"merged_text", r.merged_text}};
}

void from_json(const json& j, Rebuttal& r) {
    r.review_id = get<std::string>(j, "review_id");
    const auto& units = json_util::field(j, "units");
    if (!units.is_array()) schema("field \"units\" is ill-typed");
    r.units.clear();
    for (const auto& u : units) r.units.push_back(u.get<RebuttalUnit>());
    r.merged_text = get<std::string>(j, "merged_text");
}

void to_json(json& j, const DiscussionRound& r) {
    j = json{{"review_text", r.review_text}, {"rebuttal", r.rebuttal}, {"judge_score", r.judge_score}};
}

void from_json(const json& j, DiscussionRound& r) {
    r.review_text = get<std::string>(j, "review_text");
    r.rebuttal = json_util::field(j, "rebuttal").get<Rebuttal>();
    r.judge_score = get<int>(j, "judge_score");
}

void to_json(json& j, const DiscussionTranscript& t) {
    j = json{{"paper_id", t.paper_id}, {"rounds", t.rounds}};
}

void from_json(const json& j, DiscussionTranscript& t) {
    t.paper_id = get<std::string>(j, "paper_id");
    const auto& rounds = json_util::field(j, "rounds");
    if (!rounds.is_array()) schema("field \"rounds\" is ill-typed");
    t.rounds.clear();
    for (const auto& r : rounds) t.rounds.push_back(r.get<DiscussionRound>());
    validate(t);
}

}  // namespace drpg
