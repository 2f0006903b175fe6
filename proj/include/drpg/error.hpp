#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drpg {

enum class ErrorCode {
    InvalidArgument,
    ConfigError,
    EmptyDocument,
    SchemaViolation,
    IoFailure,
    ProviderFailure,
    Timeout,
    ParseFailure,
    DimensionMismatch,
    ZeroVector,
    EmptyContext,
    IndexOutOfRange,
    EmptySet,
    WrongMode,
    DisconnectedGraph,
    DegenerateData,
    VerdictParseFailure,
    ScoreParseFailure,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so the
// CLI can print a stable, machine-parsable tag.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace drpg
