#include "drpg/llm_output.hpp"

namespace drpg::llm_output {

std::vector<std::string_view> balanced_spans(std::string_view raw, char open, char close) {
    std::vector<std::string_view> spans;
    for (std::size_t start = raw.find(open); start != std::string_view::npos; start = raw.find(open, start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == open) {
                ++depth;
            } else if (c == close && --depth == 0) {
                spans.push_back(raw.substr(start, i - start + 1));
                break;
            }
        }
    }
    return spans;
}

namespace {

std::optional<nlohmann::json> first_of(std::string_view raw, char open, char close, const Accept& accept) {
    for (auto span : balanced_spans(raw, open, close)) {
        auto parsed = nlohmann::json::parse(span, nullptr, /*allow_exceptions=*/false);
        if (!parsed.is_discarded() && (!accept || accept(parsed))) return parsed;
    }
    return std::nullopt;
}

}  // namespace

std::optional<nlohmann::json> first_array(std::string_view raw, const Accept& accept) {
    return first_of(raw, '[', ']', accept);
}

std::optional<nlohmann::json> first_object(std::string_view raw, const Accept& accept) {
    return first_of(raw, '{', '}', accept);
}

}  // namespace drpg::llm_output
