#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "drpg/error.hpp"
#include "drpg/providers.hpp"
#include "drpg/types.hpp"

namespace drpg::corpus {

struct SegmentationPolicy {
    std::size_t min_chars = 200;
    std::size_t max_chars = 2000;
};

// Splits on blank lines, collapses whitespace runs inside a block, merges
// blocks shorter than min_chars into the following block (the last short
// block merges backward), then splits blocks longer than max_chars at
// sentence boundaries. A single sentence longer than max_chars is kept whole.
Paper segment_paper(std::string_view raw_text, const SegmentationPolicy& policy = {},
                    std::string id = "paper", std::string title = "");

// Line-delimited JSON; blank lines are skipped. Errors name the 1-based line.
template <class T>
std::vector<T> load_records(const std::filesystem::path& path);

struct ScoreRecoveryOptions {
    // Out-of-range predictions are ParseFailure unless clamping is enabled.
    bool clamp = false;
    std::string model_name;
    double temperature = 0.0;
};

int recover_initial_score(std::string_view discussion_text, int final_score, ChatProvider& chat,
                          const ScoreRecoveryOptions& options = {});

// Parses {"initial_score": ...} from raw model output; the value may be an
// integer or a string holding one.
int parse_initial_score(std::string_view raw, bool clamp);

// ---------------------------------------------------------------------------
// Persistence: one JSON document per line.

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

template <class T>
void persist_artifact(const T& artifact, const std::filesystem::path& path) {
    write_file(path, nlohmann::json(artifact).dump() + "\n");
}

template <class T>
T load_artifact(const std::filesystem::path& path) {
    auto recs = load_records<T>(path);
    if (recs.size() != 1) {
        throw Error(ErrorCode::SchemaViolation,
                    path.string() + ": expected one record, found " + std::to_string(recs.size()));
    }
    return std::move(recs.front());
}

template <class T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
    std::string out;
    for (const auto& r : records) out += nlohmann::json(r).dump() + "\n";
    write_file(path, out);
}

template <class T>
std::vector<T> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<T> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto where = path.string() + ":" + std::to_string(lineno) + ": ";
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::SchemaViolation, where + "line is not valid JSON");
        try {
            out.push_back(j.get<T>());
        } catch (const Error& e) {
            throw Error(e.code(), where + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::SchemaViolation, where + e.what());
        }
    }
    if (in.bad()) throw Error(ErrorCode::IoFailure, "read error on " + path.string());
    return out;
}

// A paper argument may be a Paper record file or plain extracted text.
Paper load_paper_or_text(const std::filesystem::path& path, const SegmentationPolicy& policy);
// A review argument may be a Review record file or plain text.
Review load_review_or_text(const std::filesystem::path& path);

}  // namespace drpg::corpus
