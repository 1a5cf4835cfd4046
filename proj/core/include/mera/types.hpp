#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace mera {

/// Validation stages in fail-fast order.
enum class Stage { Syntax, UndefinedName, SpecContract, Import, Runtime, Behavior };

inline constexpr std::array<Stage, 6> kStageOrder = {
    Stage::Syntax, Stage::UndefinedName, Stage::SpecContract,
    Stage::Import, Stage::Runtime,       Stage::Behavior};

enum class Outcome { Passed, Failed, Skipped };

/// UNKNOWN means "no failure".
enum class FailureClass {
    Unknown,
    Extraction,
    Syntax,
    UndefinedName,
    SpecContract,
    Import,
    Runtime,
    Type,
    Semantic,
    Behavior,
};

inline constexpr std::array<FailureClass, 10> kAllFailureClasses = {
    FailureClass::Unknown,      FailureClass::Extraction, FailureClass::Syntax,
    FailureClass::UndefinedName, FailureClass::SpecContract, FailureClass::Import,
    FailureClass::Runtime,      FailureClass::Type,       FailureClass::Semantic,
    FailureClass::Behavior};

enum class JudgeVerdict {
    Disabled,
    Skipped,
    Pass,
    Uncertain,
    LowConfidenceFail,
    HighConfidenceFail,
};

inline constexpr std::array<JudgeVerdict, 6> kAllJudgeVerdicts = {
    JudgeVerdict::Disabled,  JudgeVerdict::Skipped,           JudgeVerdict::Pass,
    JudgeVerdict::Uncertain, JudgeVerdict::LowConfidenceFail, JudgeVerdict::HighConfidenceFail};

enum class Condition { RefineB1, Mera, Grace };

[[nodiscard]] auto to_string(Stage s) -> std::string_view;
[[nodiscard]] auto to_string(Outcome o) -> std::string_view;
[[nodiscard]] auto to_string(FailureClass f) -> std::string_view;
[[nodiscard]] auto to_string(JudgeVerdict v) -> std::string_view;
[[nodiscard]] auto to_string(Condition c) -> std::string_view;

/// Short residual-failure code (RUN, SEM, TYPE, IMP, UNK, ...).
[[nodiscard]] auto failure_code(FailureClass f) -> std::string_view;

[[nodiscard]] auto stage_from_string(std::string_view text) -> std::optional<Stage>;
[[nodiscard]] auto outcome_from_string(std::string_view text) -> std::optional<Outcome>;
[[nodiscard]] auto failure_class_from_string(std::string_view text)
    -> std::optional<FailureClass>;
[[nodiscard]] auto judge_verdict_from_string(std::string_view text)
    -> std::optional<JudgeVerdict>;
/// Accepts "refine", "refine_b1", "mera", "grace" (case-insensitive).
[[nodiscard]] auto condition_from_string(std::string_view text) -> std::optional<Condition>;

}  // namespace mera
