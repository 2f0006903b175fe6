#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Locating structured values inside free-form model output.
namespace drpg::llm_output {

// Every balanced open...close span in raw, in order of appearance. Brackets
// inside double-quoted strings are ignored. Spans may nest; an inner span is
// reported after the span that contains it.
std::vector<std::string_view> balanced_spans(std::string_view raw, char open, char close);

using Accept = std::function<bool(const nlohmann::json&)>;

// First span that parses as JSON of the requested shape and is accepted.
std::optional<nlohmann::json> first_array(std::string_view raw, const Accept& accept = {});
std::optional<nlohmann::json> first_object(std::string_view raw, const Accept& accept = {});

}  // namespace drpg::llm_output
