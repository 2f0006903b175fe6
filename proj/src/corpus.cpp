#include "drpg/corpus.hpp"

#include <sstream>

#include "drpg/llm_output.hpp"
#include "drpg/prompts.hpp"
#include "drpg/text.hpp"

namespace drpg::corpus {

namespace {

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> blank_line_blocks(std::string_view raw) {
    std::vector<std::string> blocks;
    std::string current;
    std::istringstream in{std::string(raw)};
    std::string line;
    auto flush = [&] {
        auto block = collapse_whitespace(current);
        if (!block.empty()) blocks.push_back(std::move(block));
        current.clear();
    };
    while (std::getline(in, line)) {
        if (text::is_blank(line)) {
            flush();
        } else {
            current += line;
            current += '\n';
        }
    }
    flush();
    return blocks;
}

std::vector<std::string> merge_short(std::vector<std::string> blocks, std::size_t min_chars) {
    std::vector<std::string> out;
    std::string pending;
    for (auto& b : blocks) {
        std::string merged = pending.empty() ? std::move(b) : pending + "\n" + b;
        if (text::utf8_length(merged) < min_chars) {
            pending = std::move(merged);
        } else {
            out.push_back(std::move(merged));
            pending.clear();
        }
    }
    if (!pending.empty()) {
        if (out.empty()) {
            out.push_back(std::move(pending));
        } else {
            out.back() += "\n" + pending;
        }
    }
    return out;
}

std::vector<std::string> split_long(const std::string& para, std::size_t max_chars) {
    if (text::utf8_length(para) <= max_chars) return {para};
    std::vector<std::string> out;
    std::string cur;
    for (auto& sentence : text::split_sentences(para)) {
        if (cur.empty()) {
            cur = std::move(sentence);
        } else if (text::utf8_length(cur) + 1 + text::utf8_length(sentence) <= max_chars) {
            cur += " " + sentence;
        } else {
            out.push_back(std::move(cur));
            cur = std::move(sentence);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

int parse_score_value(const nlohmann::json& v) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        auto s = text::trim(v.get<std::string>());
        if (s.empty() || s.size() > 4) throw Error(ErrorCode::ParseFailure, "initial_score is not an integer");
        std::size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(s, &used);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseFailure, "initial_score is not an integer: \"" + s + "\"");
        }
        if (used != s.size()) throw Error(ErrorCode::ParseFailure, "initial_score is not an integer: \"" + s + "\"");
        return value;
    }
    throw Error(ErrorCode::ParseFailure, "initial_score has unexpected type");
}

}  // namespace

Paper segment_paper(std::string_view raw_text, const SegmentationPolicy& policy, std::string id, std::string title) {
    if (policy.max_chars == 0) throw Error(ErrorCode::InvalidArgument, "max_chars must be positive");
    auto blocks = blank_line_blocks(raw_text);
    if (blocks.empty()) throw Error(ErrorCode::EmptyDocument, "document has no non-blank content");
    Paper paper;
    paper.id = std::move(id);
    paper.title = std::move(title);
    for (auto& block : merge_short(std::move(blocks), policy.min_chars)) {
        for (auto& piece : split_long(block, policy.max_chars)) {
            paper.paragraphs.push_back(make_paragraph(paper.paragraphs.size(), std::move(piece)));
        }
    }
    return paper;
}

int parse_initial_score(std::string_view raw, bool clamp) {
    auto obj = llm_output::first_object(raw, [](const nlohmann::json& j) {
        return j.is_object() && j.contains("initial_score");
    });
    if (!obj) throw Error(ErrorCode::ParseFailure, "no object with an initial_score field in model output");
    int score = parse_score_value((*obj)["initial_score"]);
    if (!valid_score(score)) {
        if (!clamp) throw Error(ErrorCode::ParseFailure, "initial_score " + std::to_string(score) + " outside [1,10]");
        score = std::clamp(score, 1, 10);
    }
    return score;
}

int recover_initial_score(std::string_view discussion_text, int final_score, ChatProvider& chat,
                          const ScoreRecoveryOptions& options) {
    if (!valid_score(final_score)) throw Error(ErrorCode::InvalidArgument, "final_score outside [1,10]");
    GenerationRequest req;
    req.system_prompt = std::string(prompts::kScoreRecovery);
    req.user_prompt = prompts::score_recovery_user(discussion_text, final_score);
    req.temperature = options.temperature;
    req.model_name = options.model_name;
    return parse_initial_score(chat.generate(req), options.clamp);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoFailure, "read error on " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write error on " + path.string());
}

namespace {
bool looks_like_record(const std::string& content) {
    auto pos = content.find_first_not_of(" \t\r\n");
    return pos != std::string::npos && content[pos] == '{';
}
}  // namespace

Paper load_paper_or_text(const std::filesystem::path& path, const SegmentationPolicy& policy) {
    auto content = read_file(path);
    if (looks_like_record(content)) {
        auto papers = load_records<Paper>(path);
        if (papers.empty()) throw Error(ErrorCode::SchemaViolation, path.string() + ": no paper record");
        return std::move(papers.front());
    }
    return segment_paper(content, policy, path.stem().string(), "");
}

Review load_review_or_text(const std::filesystem::path& path) {
    auto content = read_file(path);
    if (looks_like_record(content)) {
        auto reviews = load_records<Review>(path);
        if (reviews.empty()) throw Error(ErrorCode::SchemaViolation, path.string() + ": no review record");
        return std::move(reviews.front());
    }
    Review r;
    r.id = path.stem().string();
    r.text = text::trim(content);
    validate(r);
    return r;
}

}  // namespace drpg::corpus
