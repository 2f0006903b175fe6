#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "drpg/providers.hpp"
#include "drpg/types.hpp"

namespace drpg::decomposer {

// First well-formed array of strings in raw, tolerating prose and code
// fences around it. Entries are trimmed; blank entries are dropped.
// Throws ParseFailure when no such array exists.
std::vector<std::string> extract_array(std::string_view raw);

struct DecomposeOptions {
    std::string model_name;
    double temperature = 0.0;
};

// Splits a review into atomic points. On a parse failure (including an empty
// array) the request is repeated once with a stricter output reminder.
std::vector<ReviewPoint> decompose(const Review& review, ChatProvider& chat, const DecomposeOptions& options = {});

}  // namespace drpg::decomposer
