#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/analyzer.hpp"
#include "mera/clock.hpp"
#include "mera/config.hpp"
#include "mera/controller.hpp"
#include "mera/generator.hpp"
#include "mera/types.hpp"

namespace mera {

struct WilsonInterval {
    double lo{0.0};
    double hi{1.0};
};

/// Two-sided normal quantile for the supported confidence levels
/// (0.80, 0.90, 0.95, 0.98, 0.99). Throws Error{InvalidConfig} otherwise.
[[nodiscard]] auto normal_quantile(double confidence) -> double;

/// Wilson score interval. Throws Error{InvalidCounts} unless 0 <= s <= n, n >= 1.
[[nodiscard]] auto wilson_interval(long successes, long trials, double confidence = 0.95)
    -> WilsonInterval;

/// Half-away-from-zero rounding to three decimals, as reported in tables.
[[nodiscard]] auto round3(double value) -> double;

struct SuiteSpec {
    std::string name{"phase"};
    std::vector<std::filesystem::path> tasks;
    int repeats{1};
    std::vector<Condition> conditions;
    int attempts{3};
    /// Generator spec template; "{condition}", "{task}" and "{repeat}" are
    /// substituted per run (e.g. "scripted:scripts/{condition}/{task}/r{repeat}").
    std::string generator{"http"};
    std::filesystem::path config_file;          // optional controller config
    std::filesystem::path analyzer_fixtures;    // recorded analyzer responses
    std::vector<std::string> analyzer_command;  // or a live analyzer
    std::filesystem::path allowlist_file;       // optional
    bool deterministic_clock{false};            // logical clock for replay

    [[nodiscard]] static auto load(std::filesystem::path const& file) -> SuiteSpec;
};

struct RunResult {
    Condition condition{Condition::Mera};
    std::string task_id;
    int repeat{0};
    bool accepted{false};
    int attempts{0};
    double duration{0.0};
    int total_score{0};
    FailureClass final_failure{FailureClass::Unknown};
    bool client_error{false};
    bool harness_error{false};
    std::string error_message;
};

struct TaskBreakdown {
    std::string task_id;
    int runs{0};
    int successes{0};
    double mean_attempts{0.0};
    double mean_duration{0.0};
    std::map<FailureClass, int> failures;
};

struct ConditionSummary {
    Condition condition{Condition::Mera};
    int runs{0};
    int successes{0};
    double success_rate{0.0};
    WilsonInterval ci;
    double mean_attempts{0.0};
    double mean_duration{0.0};
    double mean_total_score{0.0};
    std::vector<TaskBreakdown> tasks;
};

struct PhaseSummary {
    std::string name;
    std::vector<ConditionSummary> conditions;
    std::vector<RunResult> runs;
    bool harness_errors{false};

    [[nodiscard]] auto find(Condition c) const -> ConditionSummary const*;
};

void to_json(nlohmann::json& j, RunResult const& r);
void to_json(nlohmann::json& j, PhaseSummary const& s);

/// Failure-class multiset over the non-accepted runs of the given results.
[[nodiscard]] auto summarize_failures(std::vector<RunResult> const& runs)
    -> std::map<FailureClass, int>;

/// Aggregates run results into per-condition and per-task statistics.
[[nodiscard]] auto summarize_phase(std::string const& name,
                                   std::vector<Condition> const& conditions,
                                   std::vector<RunResult> const& runs) -> PhaseSummary;

/// Aligned text table with condition rows and per-task rows.
[[nodiscard]] auto render_table(PhaseSummary const& summary) -> std::string;

struct PhaseEnvironment {
    ControllerConfig config;
    std::shared_ptr<Analyzer> analyzer;
    Allowlist allowlist;
    std::function<std::shared_ptr<Clock>()> clock_factory;
    /// Builds the generator for one run from the expanded spec string.
    std::function<std::shared_ptr<Generator>(std::string const& spec)> generator_factory;
};

/// Expands the "{condition}/{task}/{repeat}" placeholders of a template.
[[nodiscard]] auto expand_generator_spec(std::string const& pattern, Condition condition,
                                         std::string const& task_id, int repeat) -> std::string;

/// Runs every (condition, repeat, task) combination. Each condition gets
/// its own store root so learning carries over between its runs; every run
/// gets a fresh workspace. Failed and errored runs are counted, never
/// dropped. Writes summary.json and summary.txt into `out_dir`.
[[nodiscard]] auto run_phase(SuiteSpec const& suite, PhaseEnvironment const& env,
                             std::filesystem::path const& out_dir) -> PhaseSummary;

/// Builds the environment a suite file describes (config, analyzer,
/// allowlist, generator factory, clock).
[[nodiscard]] auto make_environment(SuiteSpec const& suite) -> PhaseEnvironment;

}  // namespace mera
