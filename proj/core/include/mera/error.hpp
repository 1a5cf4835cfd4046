#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mera {

enum class ErrorCode {
    DisallowedCommand,
    Timeout,
    SpawnFailure,
    WorkspaceEscape,
    AnalyzerUnavailable,
    ParseFailure,
    ModeError,
    OutOfRange,
    EmptyStore,
    StorageFailure,
    NumericalFailure,
    NegativeWeight,
    EmptyLibrary,
    InvalidCounts,
    InvalidConfig,
    GeneratorUnreachable,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure the controller reports. The code lets
/// callers branch without string matching.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string const& message)
        : std::runtime_error(std::string{to_string(code)} + ": " + message),
          code_{code} {}

    [[nodiscard]] auto code() const noexcept -> ErrorCode { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace mera
