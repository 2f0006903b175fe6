#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the modules.
namespace drpg::text {

std::string trim(std::string_view s);
bool is_blank(std::string_view s);

// Number of UTF-8 code points; invalid continuation bytes count as one each.
std::size_t utf8_length(std::string_view s);

std::string to_lower(std::string_view s);

// Lowercased alphanumeric runs.
std::vector<std::string> tokenize(std::string_view s);

// Splits after '.', '!' or '?' when followed by whitespace. Pieces keep their
// terminal punctuation and are trimmed; blank pieces are dropped.
std::vector<std::string> split_sentences(std::string_view s);

// Stable 64-bit FNV-1a, independent of the standard library's std::hash.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0);

// SplitMix64 finalizer; used to derive independent streams from a hash.
std::uint64_t mix64(std::uint64_t x);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace drpg::text
