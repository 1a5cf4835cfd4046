#include "mera/types.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "mera/error.hpp"

namespace mera {

namespace {

template <typename Enum, std::size_t N>
auto parse_enum(std::string_view text, std::array<Enum, N> const& all)
    -> std::optional<Enum> {
    std::string upper{text};
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (auto value : all) {
        if (to_string(value) == upper) {
            return value;
        }
    }
    return std::nullopt;
}

}  // namespace

auto to_string(ErrorCode code) noexcept -> std::string_view {
    switch (code) {
        case ErrorCode::DisallowedCommand: return "DisallowedCommand";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::SpawnFailure: return "SpawnFailure";
        case ErrorCode::WorkspaceEscape: return "WorkspaceEscape";
        case ErrorCode::AnalyzerUnavailable: return "AnalyzerUnavailable";
        case ErrorCode::ParseFailure: return "ParseFailure";
        case ErrorCode::ModeError: return "ModeError";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::EmptyStore: return "EmptyStore";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::NumericalFailure: return "NumericalFailure";
        case ErrorCode::NegativeWeight: return "NegativeWeight";
        case ErrorCode::EmptyLibrary: return "EmptyLibrary";
        case ErrorCode::InvalidCounts: return "InvalidCounts";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::GeneratorUnreachable: return "GeneratorUnreachable";
    }
    return "Error";
}

auto to_string(Stage s) -> std::string_view {
    switch (s) {
        case Stage::Syntax: return "SYNTAX";
        case Stage::UndefinedName: return "UNDEFINED_NAME";
        case Stage::SpecContract: return "SPEC_CONTRACT";
        case Stage::Import: return "IMPORT";
        case Stage::Runtime: return "RUNTIME";
        case Stage::Behavior: return "BEHAVIOR";
    }
    return "?";
}

auto to_string(Outcome o) -> std::string_view {
    switch (o) {
        case Outcome::Passed: return "PASSED";
        case Outcome::Failed: return "FAILED";
        case Outcome::Skipped: return "SKIPPED";
    }
    return "?";
}

auto to_string(FailureClass f) -> std::string_view {
    switch (f) {
        case FailureClass::Unknown: return "UNKNOWN";
        case FailureClass::Extraction: return "EXTRACTION";
        case FailureClass::Syntax: return "SYNTAX";
        case FailureClass::UndefinedName: return "UNDEFINED_NAME";
        case FailureClass::SpecContract: return "SPEC_CONTRACT";
        case FailureClass::Import: return "IMPORT";
        case FailureClass::Runtime: return "RUNTIME";
        case FailureClass::Type: return "TYPE";
        case FailureClass::Semantic: return "SEMANTIC";
        case FailureClass::Behavior: return "BEHAVIOR";
    }
    return "?";
}

auto to_string(JudgeVerdict v) -> std::string_view {
    switch (v) {
        case JudgeVerdict::Disabled: return "DISABLED";
        case JudgeVerdict::Skipped: return "SKIPPED";
        case JudgeVerdict::Pass: return "PASS";
        case JudgeVerdict::Uncertain: return "UNCERTAIN";
        case JudgeVerdict::LowConfidenceFail: return "LOW_CONFIDENCE_FAIL";
        case JudgeVerdict::HighConfidenceFail: return "HIGH_CONFIDENCE_FAIL";
    }
    return "?";
}

auto to_string(Condition c) -> std::string_view {
    switch (c) {
        case Condition::RefineB1: return "REFINE_B1";
        case Condition::Mera: return "MERA";
        case Condition::Grace: return "GRACE";
    }
    return "?";
}

auto failure_code(FailureClass f) -> std::string_view {
    switch (f) {
        case FailureClass::Unknown: return "UNK";
        case FailureClass::Extraction: return "EXT";
        case FailureClass::Syntax: return "SYN";
        case FailureClass::UndefinedName: return "UND";
        case FailureClass::SpecContract: return "SPEC";
        case FailureClass::Import: return "IMP";
        case FailureClass::Runtime: return "RUN";
        case FailureClass::Type: return "TYPE";
        case FailureClass::Semantic: return "SEM";
        case FailureClass::Behavior: return "BEH";
    }
    return "?";
}

auto stage_from_string(std::string_view text) -> std::optional<Stage> {
    return parse_enum(text, kStageOrder);
}

auto outcome_from_string(std::string_view text) -> std::optional<Outcome> {
    return parse_enum(text, std::array{Outcome::Passed, Outcome::Failed, Outcome::Skipped});
}

auto failure_class_from_string(std::string_view text) -> std::optional<FailureClass> {
    return parse_enum(text, kAllFailureClasses);
}

auto judge_verdict_from_string(std::string_view text) -> std::optional<JudgeVerdict> {
    return parse_enum(text, kAllJudgeVerdicts);
}

auto condition_from_string(std::string_view text) -> std::optional<Condition> {
    std::string lower{text};
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "refine" || lower == "refine_b1" || lower == "refine-b1") {
        return Condition::RefineB1;
    }
    if (lower == "mera") {
        return Condition::Mera;
    }
    if (lower == "grace") {
        return Condition::Grace;
    }
    return std::nullopt;
}

}  // namespace mera
