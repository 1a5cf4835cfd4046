#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/analyzer.hpp"
#include "mera/clock.hpp"
#include "mera/command.hpp"
#include "mera/task.hpp"
#include "mera/types.hpp"

namespace mera {

struct CheckResult {
    Stage stage{Stage::Syntax};
    Outcome outcome{Outcome::Skipped};
    std::string detail;
    double duration{0.0};

    auto operator==(CheckResult const&) const -> bool = default;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    FailureClass primary_failure{FailureClass::Unknown};
    std::string diagnostic_key;  // normalized first error token of the failing stage
    int passed_count{0};         // PASSED, non-skipped checks
    int executed_count{0};       // executed or explicitly skipped checks
    double duration{0.0};
    bool behavior_failed{false};
    bool extraction_failed{false};
    int total_score{0};
    int max_score{0};  // attainable points given skipped stages

    auto operator==(ValidationReport const&) const -> bool = default;

    /// Report for a response with no extractable candidate: zero checks.
    [[nodiscard]] static auto extraction_failure() -> ValidationReport;
};

void to_json(nlohmann::json& j, CheckResult const& c);
void from_json(nlohmann::json const& j, CheckResult& c);
void to_json(nlohmann::json& j, ValidationReport const& r);
void from_json(nlohmann::json const& j, ValidationReport& r);

/// Points awarded for a PASSED stage; sums to 100 over all stages.
[[nodiscard]] auto stage_points(Stage stage) -> int;

/// Recomputes passed_count, executed_count, scores and behavior flag from
/// `checks`; primary_failure is left as set by the caller.
void refresh_counters(ValidationReport& report);

/// Checks the structural invariants (fail-fast prefix, single trailing
/// failure, failure/UNKNOWN agreement, counter consistency).
[[nodiscard]] auto is_well_formed(ValidationReport const& report) -> bool;

/// V_t: every recorded check passed or was skipped and no failure class.
[[nodiscard]] auto validator_pass(ValidationReport const& report) -> int;

/// A_t = V_t * J_t where J_t = 0 only for a high-confidence judge failure.
[[nodiscard]] auto acceptance(ValidationReport const& report, JudgeVerdict verdict) -> int;

/// 1 - A_t.
[[nodiscard]] inline auto acceptance_cost(ValidationReport const& report,
                                          JudgeVerdict verdict) -> int {
    return 1 - acceptance(report, verdict);
}

/// Diagnostic progress cost 1 - (sum u_k)/m_t with skipped counted as
/// passed; 1.0 when no checks were recorded.
[[nodiscard]] auto stage_cost(ValidationReport const& report) -> double;

/// Maps a failed stage and its diagnostics to a residual failure class.
[[nodiscard]] auto classify_failure(Stage stage, std::string const& detail) -> FailureClass;

/// First error token of a diagnostic, e.g. "ModuleNotFoundError".
[[nodiscard]] auto diagnostic_key(std::string const& detail) -> std::string;

struct ValidatorConfig {
    std::string python{"python3"};
    double command_timeout{kDefaultCommandTimeout};
    std::size_t output_cap{kDefaultOutputCap};
};

/// Fail-fast validation pipeline over a materialized candidate file.
///
/// Not safe for concurrent pipelines in the same workspace.
class Validator {
  public:
    Validator(ValidatorConfig config, Allowlist allowlist,
              std::shared_ptr<Analyzer> analyzer, std::shared_ptr<Clock> clock);

    /// Throws Error{WorkspaceEscape} when the candidate lies outside the
    /// task workspace and Error{AnalyzerUnavailable} when the analyzer
    /// cannot be reached.
    [[nodiscard]] auto run_pipeline(TaskSpec const& task,
                                    std::filesystem::path const& candidate_path,
                                    bool extraction_failed) -> ValidationReport;

    [[nodiscard]] auto config() const -> ValidatorConfig const& { return config_; }
    [[nodiscard]] auto allowlist() const -> Allowlist const& { return allowlist_; }

  private:
    struct StageRun {
        Outcome outcome;
        std::string detail;
    };

    auto run_command_stage(TaskSpec const& task, Stage stage,
                           std::filesystem::path const& candidate) -> StageRun;
    auto run_undefined_name(std::string const& source) -> StageRun;
    auto run_spec_contract(TaskSpec const& task, std::string const& source) -> StageRun;
    auto bound(std::string text) const -> std::string;

    ValidatorConfig config_;
    Allowlist allowlist_;
    std::shared_ptr<Analyzer> analyzer_;
    std::shared_ptr<Clock> clock_;
};

}  // namespace mera
