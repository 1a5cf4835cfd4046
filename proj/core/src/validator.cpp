#include "mera/validator.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "mera/error.hpp"

namespace mera {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

auto read_source(fs::path const& path) -> std::optional<std::string> {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void replace_all(std::string& text, std::string const& from, std::string const& to) {
    if (from.empty()) {
        return;
    }
    for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
}

auto contains(std::string const& text, std::string_view needle) -> bool {
    return text.find(needle) != std::string::npos;
}

}  // namespace

void to_json(json& j, CheckResult const& c) {
    j = json{{"stage", to_string(c.stage)},
             {"outcome", to_string(c.outcome)},
             {"detail", c.detail},
             {"duration", c.duration}};
}

void from_json(json const& j, CheckResult& c) {
    auto stage = stage_from_string(j.at("stage").get<std::string>());
    auto outcome = outcome_from_string(j.at("outcome").get<std::string>());
    if (!stage || !outcome) {
        throw Error{ErrorCode::ParseFailure, "bad check result"};
    }
    c.stage = *stage;
    c.outcome = *outcome;
    c.detail = j.value("detail", std::string{});
    c.duration = j.value("duration", 0.0);
}

void to_json(json& j, ValidationReport const& r) {
    j = json{{"checks", r.checks},
             {"primary_failure", to_string(r.primary_failure)},
             {"diagnostic_key", r.diagnostic_key},
             {"passed_count", r.passed_count},
             {"executed_count", r.executed_count},
             {"duration", r.duration},
             {"behavior_failed", r.behavior_failed},
             {"extraction_failed", r.extraction_failed},
             {"total_score", r.total_score},
             {"max_score", r.max_score}};
}

void from_json(json const& j, ValidationReport& r) {
    r = ValidationReport{};
    r.checks = j.value("checks", std::vector<CheckResult>{});
    auto failure = failure_class_from_string(j.value("primary_failure", std::string{"UNKNOWN"}));
    if (!failure) {
        throw Error{ErrorCode::ParseFailure, "bad primary failure"};
    }
    r.primary_failure = *failure;
    r.diagnostic_key = j.value("diagnostic_key", std::string{});
    r.passed_count = j.value("passed_count", 0);
    r.executed_count = j.value("executed_count", 0);
    r.duration = j.value("duration", 0.0);
    r.behavior_failed = j.value("behavior_failed", false);
    r.extraction_failed = j.value("extraction_failed", false);
    r.total_score = j.value("total_score", 0);
    r.max_score = j.value("max_score", 0);
}

auto ValidationReport::extraction_failure() -> ValidationReport {
    ValidationReport r;
    r.primary_failure = FailureClass::Extraction;
    r.extraction_failed = true;
    r.diagnostic_key = "extraction";
    return r;
}

auto stage_points(Stage stage) -> int {
    switch (stage) {
        case Stage::Syntax: return 10;
        case Stage::UndefinedName: return 10;
        case Stage::SpecContract: return 20;
        case Stage::Import: return 10;
        case Stage::Runtime: return 25;
        case Stage::Behavior: return 25;
    }
    return 0;
}

void refresh_counters(ValidationReport& report) {
    report.passed_count = 0;
    report.total_score = 0;
    report.behavior_failed = false;
    report.executed_count = static_cast<int>(report.checks.size());
    for (auto const& c : report.checks) {
        if (c.outcome == Outcome::Passed) {
            ++report.passed_count;
            report.total_score += stage_points(c.stage);
        }
        if (c.stage == Stage::Behavior && c.outcome == Outcome::Failed) {
            report.behavior_failed = true;
        }
    }
}

auto is_well_formed(ValidationReport const& report) -> bool {
    if (report.checks.size() > kStageOrder.size()) {
        return false;
    }
    if (report.extraction_failed &&
        (!report.checks.empty() || report.primary_failure != FailureClass::Extraction)) {
        return false;
    }
    bool any_failed = false;
    int passed = 0;
    for (std::size_t i = 0; i < report.checks.size(); ++i) {
        auto const& c = report.checks[i];
        if (c.stage != kStageOrder[i] || c.duration < 0.0) {
            return false;
        }
        if (c.outcome == Outcome::Failed) {
            if (i + 1 != report.checks.size()) {
                return false;
            }
            any_failed = true;
        }
        if (c.outcome == Outcome::Passed) {
            ++passed;
        }
    }
    bool const expect_unknown = !any_failed && !report.extraction_failed;
    if ((report.primary_failure == FailureClass::Unknown) != expect_unknown) {
        return false;
    }
    return report.passed_count == passed &&
           report.executed_count == static_cast<int>(report.checks.size()) &&
           report.passed_count <= report.executed_count;
}

auto validator_pass(ValidationReport const& report) -> int {
    if (report.extraction_failed || report.primary_failure != FailureClass::Unknown) {
        return 0;
    }
    bool const all_ok = std::all_of(report.checks.begin(), report.checks.end(), [](auto const& c) {
        return c.outcome != Outcome::Failed;
    });
    return all_ok ? 1 : 0;
}

auto acceptance(ValidationReport const& report, JudgeVerdict verdict) -> int {
    int const judge_ok = verdict == JudgeVerdict::HighConfidenceFail ? 0 : 1;
    return validator_pass(report) * judge_ok;
}

auto stage_cost(ValidationReport const& report) -> double {
    if (report.checks.empty()) {
        return 1.0;
    }
    auto const ok = std::count_if(report.checks.begin(), report.checks.end(),
                                  [](auto const& c) { return c.outcome != Outcome::Failed; });
    return 1.0 - static_cast<double>(ok) / static_cast<double>(report.checks.size());
}

auto classify_failure(Stage stage, std::string const& detail) -> FailureClass {
    bool const timed_out = detail.starts_with("Timeout");
    switch (stage) {
        case Stage::Syntax: return FailureClass::Syntax;
        case Stage::UndefinedName: return FailureClass::UndefinedName;
        case Stage::SpecContract: return FailureClass::SpecContract;
        case Stage::Import: return FailureClass::Import;
        case Stage::Runtime:
            if (!timed_out && contains(detail, "TypeError")) {
                return FailureClass::Type;
            }
            return FailureClass::Runtime;
        case Stage::Behavior:
            if (timed_out) {
                return FailureClass::Runtime;
            }
            if (contains(detail, "AssertionError")) {
                return FailureClass::Semantic;
            }
            if (contains(detail, "TypeError")) {
                return FailureClass::Type;
            }
            if (contains(detail, "Traceback")) {
                return FailureClass::Runtime;
            }
            return FailureClass::Behavior;
    }
    return FailureClass::Unknown;
}

auto diagnostic_key(std::string const& detail) -> std::string {
    if (detail.starts_with("Timeout")) {
        return "Timeout";
    }
    static std::regex const error_token{
        R"(\b([A-Z][A-Za-z0-9_]*(Error|Exception|Exit|Interrupt)))"};
    std::smatch m;
    if (std::regex_search(detail, m, error_token)) {
        return m[1].str();
    }
    static std::regex const word{R"([A-Za-z_][A-Za-z0-9_]*)"};
    if (std::regex_search(detail, m, word)) {
        auto key = m[0].str();
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return key;
    }
    return {};
}

Validator::Validator(ValidatorConfig config, Allowlist allowlist,
                     std::shared_ptr<Analyzer> analyzer, std::shared_ptr<Clock> clock)
    : config_{std::move(config)},
      allowlist_{std::move(allowlist)},
      analyzer_{std::move(analyzer)},
      clock_{clock ? std::move(clock) : std::make_shared<SystemClock>()} {
    if (!analyzer_) {
        throw Error{ErrorCode::InvalidConfig, "validator needs an analyzer"};
    }
}

auto Validator::bound(std::string text) const -> std::string {
    if (text.size() <= config_.output_cap) {
        return text;
    }
    auto const keep = config_.output_cap > kTruncationMarker.size()
                          ? config_.output_cap - kTruncationMarker.size()
                          : 0;
    text.resize(keep);
    text.append(kTruncationMarker.substr(0, config_.output_cap - keep));
    return text;
}

auto Validator::run_command_stage(TaskSpec const& task, Stage stage, fs::path const& candidate)
    -> StageRun {
    auto argv = task.stage_commands.contains(stage) ? task.stage_commands.at(stage)
                                                    : default_stage_command(stage);
    if (argv.empty()) {
        throw Error{ErrorCode::InvalidConfig,
                    "no command for stage " + std::string{to_string(stage)}};
    }
    for (auto& arg : argv) {
        replace_all(arg, "{python}", config_.python);
        replace_all(arg, "{target}", candidate.string());
        replace_all(arg, "{workspace}", task.workspace.string());
        replace_all(arg, "{task_dir}", task.task_dir.string());
    }
    CommandSpec spec;
    spec.program = argv.front();
    spec.args.assign(argv.begin() + 1, argv.end());
    spec.timeout = config_.command_timeout;
    spec.output_cap = config_.output_cap;
    spec.workspace = task.workspace;
    spec.workdir = task.workspace;

    auto normalize = [&](std::string text) {
        // Absolute paths differ per run; keep diagnostics comparable.
        auto const ws = fs::weakly_canonical(fs::absolute(task.workspace)).string();
        auto const td = fs::weakly_canonical(fs::absolute(task.task_dir)).string();
        replace_all(text, ws, "<workspace>");
        replace_all(text, task.workspace.string(), "<workspace>");
        replace_all(text, td, "<task>");
        replace_all(text, task.task_dir.string(), "<task>");
        return text;
    };

    try {
        auto const result = run_bounded_command(spec, allowlist_);
        std::string detail = result.stderr_text;
        if (!result.stdout_text.empty()) {
            if (!detail.empty() && detail.back() != '\n') {
                detail.push_back('\n');
            }
            detail += result.stdout_text;
        }
        detail = bound(normalize(std::move(detail)));
        if (result.exit_status == 0) {
            return {Outcome::Passed, std::move(detail)};
        }
        if (detail.empty()) {
            detail = "exit status " + std::to_string(result.exit_status);
        }
        return {Outcome::Failed, std::move(detail)};
    } catch (Error const& e) {
        if (e.code() == ErrorCode::Timeout) {
            return {Outcome::Failed, bound(normalize(e.what()))};
        }
        throw;
    }
}

auto Validator::run_undefined_name(std::string const& source) -> StageRun {
    try {
        auto const names = analyzer_->undefined_names(source);
        if (names.empty()) {
            return {Outcome::Passed, {}};
        }
        std::string detail;
        for (auto const& n : names) {
            detail += "NameError: undefined name '" + n.name + "' at line " +
                      std::to_string(n.line) + "\n";
        }
        return {Outcome::Failed, bound(std::move(detail))};
    } catch (Error const& e) {
        if (e.code() == ErrorCode::ParseFailure) {
            return {Outcome::Failed, bound(e.what())};
        }
        throw;
    }
}

auto Validator::run_spec_contract(TaskSpec const& task, std::string const& source) -> StageRun {
    std::vector<CodeUnit> units;
    try {
        units = analyzer_->units(source);
    } catch (Error const& e) {
        if (e.code() == ErrorCode::ParseFailure) {
            return {Outcome::Failed, bound(e.what())};
        }
        throw;
    }
    auto effective_arity = [](CodeUnit const& u) {
        auto n = static_cast<int>(u.params.size());
        bool const method = u.qualified_name.find('.') != std::string::npos;
        if (method && !u.params.empty() && (u.params.front() == "self" || u.params.front() == "cls")) {
            --n;
        }
        return n;
    };
    std::string violations;
    for (auto const& req : task.interface) {
        if (req.kind == InterfaceRequirement::Kind::Class) {
            auto const prefix = req.name + ".";
            bool const found = std::any_of(units.begin(), units.end(), [&](auto const& u) {
                return u.qualified_name.starts_with(prefix);
            });
            if (!found) {
                violations += "ContractError: missing class '" + req.name + "'\n";
            }
            continue;
        }
        auto it = std::find_if(units.begin(), units.end(),
                               [&](auto const& u) { return u.qualified_name == req.name; });
        if (it == units.end()) {
            violations += "ContractError: missing function '" + req.name + "'";
            if (req.arity >= 0) {
                violations += " with " + std::to_string(req.arity) + " parameters";
            }
            violations += "\n";
        } else if (req.arity >= 0 && effective_arity(*it) != req.arity) {
            violations += "ContractError: '" + req.name + "' takes " +
                          std::to_string(effective_arity(*it)) + " parameters, expected " +
                          std::to_string(req.arity) + "\n";
        }
    }
    if (violations.empty()) {
        return {Outcome::Passed, {}};
    }
    return {Outcome::Failed, bound(std::move(violations))};
}

auto Validator::run_pipeline(TaskSpec const& task, fs::path const& candidate_path,
                             bool extraction_failed) -> ValidationReport {
    if (extraction_failed) {
        return ValidationReport::extraction_failure();
    }
    if (!is_within(task.workspace, candidate_path)) {
        throw Error{ErrorCode::WorkspaceEscape,
                    candidate_path.string() + " is outside " + task.workspace.string()};
    }
    auto const source = read_source(candidate_path);

    ValidationReport report;
    report.max_score = 100;
    double const started = clock_->monotonic();
    for (auto const stage : kStageOrder) {
        if (!task.stage_applies(stage)) {
            report.checks.push_back({stage, Outcome::Skipped, "not applicable", 0.0});
            report.max_score -= stage_points(stage);
            continue;
        }
        double const stage_start = clock_->monotonic();
        StageRun run{Outcome::Failed, "candidate file is missing"};
        if (source) {
            switch (stage) {
                case Stage::UndefinedName: run = run_undefined_name(*source); break;
                case Stage::SpecContract: run = run_spec_contract(task, *source); break;
                default: run = run_command_stage(task, stage, candidate_path); break;
            }
        }
        double const elapsed = std::max(0.0, clock_->monotonic() - stage_start);
        report.checks.push_back({stage, run.outcome, std::move(run.detail), elapsed});
        if (run.outcome == Outcome::Failed) {
            auto const& detail = report.checks.back().detail;
            report.primary_failure = classify_failure(stage, detail);
            report.diagnostic_key = diagnostic_key(detail);
            // Stages after the failure are never attempted, but inapplicable
            // ones still lower the attainable maximum.
            for (auto const later : kStageOrder) {
                if (later > stage && !task.stage_applies(later)) {
                    report.max_score -= stage_points(later);
                }
            }
            break;
        }
    }
    report.duration = std::max(0.0, clock_->monotonic() - started);
    refresh_counters(report);
    return report;
}

}  // namespace mera
