#include "mera/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mera/error.hpp"

namespace mera {

namespace fs = std::filesystem;
using nlohmann::json;

auto normal_quantile(double confidence) -> double {
    struct Entry {
        double confidence;
        double z;
    };
    static constexpr Entry kTable[] = {
        {0.80, 1.281552}, {0.90, 1.644854}, {0.95, 1.959964}, {0.98, 2.326348}, {0.99, 2.575829}};
    for (auto const& e : kTable) {
        if (std::abs(e.confidence - confidence) < 1e-12) {
            return e.z;
        }
    }
    throw Error{ErrorCode::InvalidConfig, "unsupported confidence level " + std::to_string(confidence)};
}

auto wilson_interval(long successes, long trials, double confidence) -> WilsonInterval {
    if (trials < 1 || successes < 0 || successes > trials) {
        throw Error{ErrorCode::InvalidCounts, "need 0 <= s <= n and n >= 1, got s=" +
                                                  std::to_string(successes) +
                                                  " n=" + std::to_string(trials)};
    }
    double const z = normal_quantile(confidence);
    double const n = static_cast<double>(trials);
    double const p = static_cast<double>(successes) / n;
    double const z2 = z * z;
    double const denom = 1.0 + z2 / n;
    double const center = (p + z2 / (2.0 * n)) / denom;
    double const half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    WilsonInterval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (successes == 0) {
        ci.lo = 0.0;
    }
    if (successes == trials) {
        ci.hi = 1.0;
    }
    return ci;
}

auto round3(double value) -> double {
    return std::round(value * 1000.0) / 1000.0;
}

namespace {

auto resolve(fs::path const& base, fs::path const& p) -> fs::path {
    if (p.empty() || p.is_absolute()) {
        return p;
    }
    return (base / p).lexically_normal();
}

void replace_all(std::string& text, std::string const& from, std::string const& to) {
    for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
}

auto condition_dir(Condition c) -> std::string {
    std::string s{to_string(c)};
    for (auto& ch : s) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return s;
}

void write_text(fs::path const& path, std::string const& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    out << text;
    if (!out.flush()) {
        throw Error{ErrorCode::StorageFailure, "cannot write " + path.string()};
    }
}

auto format_failures(std::map<FailureClass, int> const& failures) -> std::string {
    std::string out;
    for (auto const& [f, n] : failures) {
        if (!out.empty()) {
            out += " ";
        }
        out += std::string{failure_code(f)} + ":" + std::to_string(n);
    }
    return out.empty() ? "-" : out;
}

}  // namespace

auto SuiteSpec::load(fs::path const& file) -> SuiteSpec {
    std::ifstream in{file};
    if (!in) {
        throw Error{ErrorCode::InvalidConfig, "cannot read suite " + file.string()};
    }
    json j;
    try {
        in >> j;
    } catch (json::exception const& e) {
        throw Error{ErrorCode::InvalidConfig, file.string() + ": " + e.what()};
    }
    auto const base = fs::absolute(file).parent_path();
    SuiteSpec s;
    try {
        s.name = j.value("name", s.name);
        for (auto const& t : j.at("tasks")) {
            s.tasks.push_back(resolve(base, t.get<std::string>()));
        }
        s.repeats = j.value("repeats", 1);
        for (auto const& c : j.value("conditions", std::vector<std::string>{"mera"})) {
            auto cond = condition_from_string(c);
            if (!cond) {
                throw Error{ErrorCode::InvalidConfig, "unknown condition " + c};
            }
            s.conditions.push_back(*cond);
        }
        s.attempts = j.value("attempts", 3);
        s.generator = j.value("generator", s.generator);
        if (s.generator.starts_with("scripted:")) {
            s.generator = "scripted:" + resolve(base, s.generator.substr(9)).string();
        }
        s.config_file = resolve(base, j.value("config", std::string{}));
        s.analyzer_fixtures = resolve(base, j.value("analyzer_fixtures", std::string{}));
        s.analyzer_command = j.value("analyzer_command", std::vector<std::string>{});
        s.allowlist_file = resolve(base, j.value("allowlist", std::string{}));
        s.deterministic_clock = j.value("deterministic_clock", false);
    } catch (json::exception const& e) {
        throw Error{ErrorCode::InvalidConfig, file.string() + ": " + e.what()};
    }
    if (s.tasks.empty() || s.repeats < 1 || s.attempts < 1 || s.conditions.empty()) {
        throw Error{ErrorCode::InvalidConfig, "suite needs tasks, conditions, repeats >= 1, attempts >= 1"};
    }
    return s;
}

auto PhaseSummary::find(Condition c) const -> ConditionSummary const* {
    for (auto const& s : conditions) {
        if (s.condition == c) {
            return &s;
        }
    }
    return nullptr;
}

void to_json(json& j, RunResult const& r) {
    j = json{{"condition", to_string(r.condition)},
             {"task_id", r.task_id},
             {"repeat", r.repeat},
             {"accepted", r.accepted},
             {"attempts", r.attempts},
             {"duration", r.duration},
             {"total_score", r.total_score},
             {"final_failure", to_string(r.final_failure)},
             {"client_error", r.client_error},
             {"harness_error", r.harness_error},
             {"error_message", r.error_message}};
}

void to_json(json& j, PhaseSummary const& s) {
    json conditions = json::array();
    for (auto const& c : s.conditions) {
        json tasks = json::array();
        for (auto const& t : c.tasks) {
            json failures = json::object();
            for (auto const& [f, n] : t.failures) {
                failures[std::string{to_string(f)}] = n;
            }
            tasks.push_back({{"task_id", t.task_id},
                             {"runs", t.runs},
                             {"successes", t.successes},
                             {"mean_attempts", t.mean_attempts},
                             {"mean_duration", t.mean_duration},
                             {"failures", failures}});
        }
        conditions.push_back({{"condition", to_string(c.condition)},
                              {"runs", c.runs},
                              {"successes", c.successes},
                              {"success_rate", c.success_rate},
                              {"wilson_95", {round3(c.ci.lo), round3(c.ci.hi)}},
                              {"mean_attempts", c.mean_attempts},
                              {"mean_duration", c.mean_duration},
                              {"mean_total_score", c.mean_total_score},
                              {"tasks", tasks}});
    }
    j = json{{"schema", "mera.phase_summary/1"},
             {"name", s.name},
             {"harness_errors", s.harness_errors},
             {"conditions", conditions},
             {"runs", s.runs}};
}

auto summarize_failures(std::vector<RunResult> const& runs) -> std::map<FailureClass, int> {
    std::map<FailureClass, int> out;
    for (auto const& r : runs) {
        if (!r.accepted) {
            ++out[r.final_failure];
        }
    }
    return out;
}

auto summarize_phase(std::string const& name, std::vector<Condition> const& conditions,
                     std::vector<RunResult> const& runs) -> PhaseSummary {
    PhaseSummary summary;
    summary.name = name;
    summary.runs = runs;
    for (auto const& r : runs) {
        summary.harness_errors = summary.harness_errors || r.harness_error;
    }
    for (auto const c : conditions) {
        ConditionSummary cs;
        cs.condition = c;
        std::vector<std::string> order;
        std::map<std::string, std::vector<RunResult>> by_task;
        for (auto const& r : runs) {
            if (r.condition != c) {
                continue;
            }
            ++cs.runs;
            cs.successes += r.accepted ? 1 : 0;
            cs.mean_attempts += r.attempts;
            cs.mean_duration += r.duration;
            cs.mean_total_score += r.total_score;
            if (!by_task.contains(r.task_id)) {
                order.push_back(r.task_id);
            }
            by_task[r.task_id].push_back(r);
        }
        if (cs.runs > 0) {
            cs.success_rate = static_cast<double>(cs.successes) / cs.runs;
            cs.ci = wilson_interval(cs.successes, cs.runs);
            cs.mean_attempts /= cs.runs;
            cs.mean_duration /= cs.runs;
            cs.mean_total_score /= cs.runs;
        }
        for (auto const& id : order) {
            auto const& rs = by_task[id];
            TaskBreakdown tb;
            tb.task_id = id;
            tb.runs = static_cast<int>(rs.size());
            for (auto const& r : rs) {
                tb.successes += r.accepted ? 1 : 0;
                tb.mean_attempts += r.attempts;
                tb.mean_duration += r.duration;
            }
            tb.mean_attempts /= tb.runs;
            tb.mean_duration /= tb.runs;
            tb.failures = summarize_failures(rs);
            cs.tasks.push_back(std::move(tb));
        }
        summary.conditions.push_back(std::move(cs));
    }
    return summary;
}

auto render_table(PhaseSummary const& s) -> std::string {
    std::string out = "Phase " + s.name + "\n\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %4s %4s %7s  %-16s %9s %10s %7s\n", "Condition", "n",
                  "s", "rate", "95% Wilson CI", "attempts", "duration_s", "score");
    out += line;
    for (auto const& c : s.conditions) {
        char ci[64];
        std::snprintf(ci, sizeof ci, "[%.3f, %.3f]", round3(c.ci.lo), round3(c.ci.hi));
        std::snprintf(line, sizeof line, "%-10s %4d %4d %7.3f  %-16s %9.3f %10.2f %7.1f\n",
                      std::string{to_string(c.condition)}.c_str(), c.runs, c.successes,
                      round3(c.success_rate), ci, round3(c.mean_attempts), c.mean_duration,
                      c.mean_total_score);
        out += line;
    }
    out += "\n";
    std::snprintf(line, sizeof line, "%-10s %-24s %9s %9s  %s\n", "Condition", "Task", "success",
                  "attempts", "failures");
    out += line;
    for (auto const& c : s.conditions) {
        for (auto const& t : c.tasks) {
            auto const frac = std::to_string(t.successes) + "/" + std::to_string(t.runs);
            std::snprintf(line, sizeof line, "%-10s %-24s %9s %9.3f  %s\n",
                          std::string{to_string(c.condition)}.c_str(), t.task_id.c_str(),
                          frac.c_str(), round3(t.mean_attempts), format_failures(t.failures).c_str());
            out += line;
        }
    }
    return out;
}

auto expand_generator_spec(std::string const& pattern, Condition condition,
                           std::string const& task_id, int repeat) -> std::string {
    auto out = pattern;
    replace_all(out, "{condition}", condition_dir(condition));
    replace_all(out, "{task}", task_id);
    replace_all(out, "{repeat}", std::to_string(repeat));
    return out;
}

auto run_phase(SuiteSpec const& suite, PhaseEnvironment const& env, fs::path const& out_dir)
    -> PhaseSummary {
    std::vector<TaskSpec> tasks;
    for (auto const& file : suite.tasks) {
        tasks.push_back(load_task(file));
    }
    std::vector<RunResult> runs;
    for (auto const condition : suite.conditions) {
        auto const cdir = out_dir / "runs" / condition_dir(condition);
        auto const store_root = out_dir / "stores" / condition_dir(condition);
        fs::remove_all(cdir);
        fs::remove_all(store_root);
        auto clock = env.clock_factory ? env.clock_factory() : std::make_shared<SystemClock>();
        for (int repeat = 1; repeat <= suite.repeats; ++repeat) {
            for (auto const& base_task : tasks) {
                RunResult rr;
                rr.condition = condition;
                rr.task_id = base_task.id;
                rr.repeat = repeat;
                auto const run_dir = cdir / base_task.id / ("r" + std::to_string(repeat));
                try {
                    auto task = base_task;
                    task.attempt_budget = suite.attempts;
                    task.workspace = run_dir / "workspace";
                    fs::remove_all(task.workspace);
                    fs::create_directories(task.workspace);
                    if (fs::is_directory(base_task.workspace)) {
                        fs::copy(base_task.workspace, task.workspace, fs::copy_options::recursive);
                    }
                    auto const spec = expand_generator_spec(suite.generator, condition, task.id, repeat);
                    auto generator = env.generator_factory(spec);
                    // Learner state lives in files under the store root and
                    // is saved after each run, so a fresh controller per run
                    // carries learning forward.
                    Controller controller{env.config, store_root, generator,
                                          env.analyzer, env.allowlist, clock};
                    auto const result = controller.run_task(task, condition, run_dir);
                    rr.accepted = result.accepted;
                    rr.attempts = result.attempts;
                    rr.duration = result.duration;
                    rr.total_score = result.final_report.total_score;
                    rr.final_failure = result.final_report.primary_failure;
                    rr.client_error = result.client_error;
                    rr.error_message = result.error_message;
                } catch (std::exception const& e) {
                    rr.harness_error = true;
                    rr.error_message = e.what();
                }
                runs.push_back(std::move(rr));
            }
        }
    }
    auto summary = summarize_phase(suite.name, suite.conditions, runs);
    write_text(out_dir / "summary.json", json(summary).dump(2) + "\n");
    write_text(out_dir / "summary.txt", render_table(summary));
    return summary;
}

auto make_environment(SuiteSpec const& suite) -> PhaseEnvironment {
    PhaseEnvironment env;
    env.config = suite.config_file.empty() ? ControllerConfig{} : ControllerConfig::load(suite.config_file);
    env.allowlist = suite.allowlist_file.empty() ? Allowlist::from_environment(Allowlist::defaults())
                                                 : Allowlist::load(suite.allowlist_file);
    if (!suite.analyzer_fixtures.empty()) {
        env.analyzer = std::make_shared<RecordedAnalyzer>(suite.analyzer_fixtures);
    } else if (!suite.analyzer_command.empty()) {
        env.analyzer = std::make_shared<SubprocessAnalyzer>(suite.analyzer_command, env.allowlist,
                                                            fs::current_path());
    } else {
        throw Error{ErrorCode::InvalidConfig, "suite names neither analyzer fixtures nor a command"};
    }
    if (suite.deterministic_clock) {
        env.clock_factory = [] { return std::make_shared<ManualClock>(0.25); };
    } else {
        env.clock_factory = [] { return std::make_shared<SystemClock>(); };
    }
    env.generator_factory = [](std::string const& spec) -> std::shared_ptr<Generator> {
        return make_generator(spec);
    };
    return env;
}

}  // namespace mera
