#include "drpg/text.hpp"

#include <cctype>

#include "drpg/error.hpp"

namespace drpg {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::EmptyDocument: return "EmptyDocument";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::ProviderFailure: return "ProviderFailure";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::ParseFailure: return "ParseFailure";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::EmptyContext: return "EmptyContext";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::WrongMode: return "WrongMode";
        case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::VerdictParseFailure: return "VerdictParseFailure";
        case ErrorCode::ScoreParseFailure: return "ScoreParseFailure";
    }
    return "Unknown";
}

}  // namespace drpg

namespace drpg::text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool is_blank(std::string_view s) {
    for (char c : s) {
        if (!is_space(c)) return false;
    }
    return true;
}

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        auto uc = static_cast<unsigned char>(c);
        // Bytes >= 0x80 belong to multi-byte code points; keep them in tokens.
        if (std::isalnum(uc) || uc >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if ((c == '.' || c == '!' || c == '?') && i + 1 < s.size() && is_space(s[i + 1])) {
            auto piece = trim(s.substr(start, i + 1 - start));
            if (!piece.empty()) out.push_back(std::move(piece));
            start = i + 1;
        }
    }
    auto tail = trim(s.substr(start));
    if (!tail.empty()) out.push_back(std::move(tail));
    return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

}  // namespace drpg::text
