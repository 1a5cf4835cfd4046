#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mera/controller.hpp"
#include "mera/error.hpp"
#include "mera/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string config_file;
    std::string analyzer_fixtures;
    std::string analyzer_command{"python3 -m mera_analyzer"};
    std::string allowlist_file;
};

auto split_words(std::string const& text) -> std::vector<std::string> {
    std::istringstream in{text};
    std::vector<std::string> out;
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

auto make_analyzer(Common const& c, mera::Allowlist const& allowlist)
    -> std::shared_ptr<mera::Analyzer> {
    if (!c.analyzer_fixtures.empty()) {
        return std::make_shared<mera::RecordedAnalyzer>(c.analyzer_fixtures);
    }
    return std::make_shared<mera::SubprocessAnalyzer>(split_words(c.analyzer_command), allowlist,
                                                      fs::current_path());
}

auto make_allowlist(Common const& c) -> mera::Allowlist {
    return c.allowlist_file.empty() ? mera::Allowlist::from_environment(mera::Allowlist::defaults())
                                    : mera::Allowlist::load(c.allowlist_file);
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_file, "Controller configuration (JSON)");
    cmd->add_option("--analyzer-fixtures", c.analyzer_fixtures, "Replay recorded analyzer responses");
    cmd->add_option("--analyzer-command", c.analyzer_command, "Structural analyzer command line")
        ->capture_default_str();
    cmd->add_option("--allowlist", c.allowlist_file, "Allowed validator programs, one per line");
}

auto run_command(std::string const& task_file, std::string const& condition_text, int attempts,
                 std::string const& generator, std::string const& store, std::string out,
                 Common const& common) -> int {
    auto const condition = mera::condition_from_string(condition_text);
    if (!condition) {
        std::cerr << "unknown condition: " << condition_text << "\n";
        return 2;
    }
    auto task = mera::load_task(task_file);
    if (attempts > 0) {
        task.attempt_budget = attempts;
    }
    auto const config = common.config_file.empty() ? mera::ControllerConfig{}
                                                   : mera::ControllerConfig::load(common.config_file);
    auto const allowlist = make_allowlist(common);
    if (out.empty()) {
        out = (fs::path{store} / "runs" / task.id).string();
    }
    mera::Controller controller{config,
                                store,
                                std::shared_ptr<mera::Generator>(mera::make_generator(generator)),
                                make_analyzer(common, allowlist),
                                allowlist,
                                std::make_shared<mera::SystemClock>()};
    auto const result = controller.run_task(task, *condition, out);
    std::cout << "task " << result.task_id << " " << mera::to_string(result.condition) << ": "
              << (result.accepted ? "ACCEPTED" : "NOT ACCEPTED") << " after " << result.attempts
              << " attempt(s)";
    if (!result.accepted) {
        std::cout << ", final failure " << mera::to_string(result.final_report.primary_failure);
    }
    if (result.client_error) {
        std::cout << ", generator error: " << result.error_message;
    }
    std::cout << "\nrun directory: " << out << "\n";
    return result.accepted ? 0 : 1;
}

auto bench_command(std::string const& suite_file, std::string const& out) -> int {
    auto const suite = mera::SuiteSpec::load(suite_file);
    auto const env = mera::make_environment(suite);
    auto const summary = mera::run_phase(suite, env, out);
    std::cout << mera::render_table(summary);
    for (auto const& r : summary.runs) {
        if (r.harness_error) {
            std::cerr << "harness error in " << mera::to_string(r.condition) << "/" << r.task_id
                      << "/r" << r.repeat << ": " << r.error_message << "\n";
        }
    }
    return summary.harness_errors ? 1 : 0;
}

auto inspect_memory(std::string const& store, std::string const& task_file, std::size_t k,
                    std::string const& mode, Common const& common) -> int {
    auto const paths = mera::StorePaths::under(store);
    auto const records = mera::EpisodeStore::load_records(paths.episodes);
    if (task_file.empty()) {
        for (auto const& r : records) {
            std::cout << r.record_id << "\t" << r.task_id << "\t"
                      << (r.accepted ? "ACCEPTED" : std::string{mera::to_string(r.report.primary_failure)})
                      << "\treward=" << r.reward << "\taction=" << r.retrieval_action << "\n";
        }
        return 0;
    }
    auto const task = mera::load_task(task_file);
    auto const allowlist = make_allowlist(common);
    auto analyzer = make_analyzer(common, allowlist);
    auto const source = [&]() -> std::optional<std::string> {
        std::ifstream in{task.target_path()};
        if (!in) {
            return std::nullopt;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }();
    auto const query =
        mera::compute_fingerprint(task, source ? &*source : nullptr, nullptr, *analyzer);
    auto const m = mode == "ast" ? mera::RetrievalMode::AstMatch : mera::RetrievalMode::FailureMatch;
    for (auto const& ranked : mera::rank_episodes(records, query, m, k, {})) {
        std::cout << ranked.record->record_id << "\t" << ranked.score << "\t"
                  << ranked.record->task_id << "\t"
                  << mera::to_string(ranked.record->report.primary_failure) << "\n";
    }
    return 0;
}

auto inspect_skills(std::string const& store) -> int {
    mera::SkillLibrary lib;
    lib.load(mera::StorePaths::under(store).skills);
    for (auto const& s : lib.skills()) {
        std::string families;
        for (auto const& f : s.families) {
            families += (families.empty() ? "" : ",") + f;
        }
        std::cout << s.hash.substr(0, 16) << "\t" << s.qualified_name << "/" << s.arity()
                  << "\toffered=" << s.n_offered << "\tsucc=" << s.n_succ << "\t"
                  << (s.quarantined ? "quarantined" : "trusted") << "\t" << families << "\n";
    }
    return 0;
}

auto inspect_arms(std::string const& store) -> int {
    mera::LinUcbBandit bandit;
    bandit.load(mera::StorePaths::under(store).arms);
    for (auto const a : mera::kAllRetrievalActions) {
        auto const& arm = bandit.arm(a);
        std::cout << mera::to_string(a) << "\tpulls=" << arm.pulls() << "\ttheta=[";
        auto const theta = arm.theta();
        for (int i = 0; i < mera::kFeatureDim; ++i) {
            std::cout << (i ? " " : "") << theta[i];
        }
        std::cout << "]\n";
    }
    return 0;
}

auto inspect_traces(std::string const& run_dir) -> int {
    std::ifstream in{fs::path{run_dir} / "trace.jsonl"};
    if (!in) {
        std::cerr << "no trace.jsonl in " << run_dir << "\n";
        return 2;
    }
    std::cout << "source\ttarget\tdelta\teligibility\tweight\tsignal\n";
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) {
            continue;
        }
        auto const d = json::parse(line).get<mera::DispatchRecord>();
        std::cout << d.source << "\t" << d.target << "\t" << d.delta << "\t" << d.eligibility
                  << "\t" << d.weight << "\t" << d.signal << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Validation-grounded refinement controller around a frozen code generator"};
    app.require_subcommand(1);
    Common common;

    std::string task_file;
    std::string condition{"mera"};
    int attempts = 0;
    std::string generator{"http"};
    std::string store{"mera_store"};
    std::string out;
    auto* run = app.add_subcommand("run", "Run the refinement loop on one task");
    run->add_option("--task", task_file, "Task file (JSON)")->required();
    run->add_option("--condition", condition, "refine | mera | grace")->capture_default_str();
    run->add_option("--attempts", attempts, "Attempt budget (default: from the task)");
    run->add_option("--generator", generator, "scripted:<dir> | http | http:<url>")
        ->capture_default_str();
    run->add_option("--store", store, "Learner state directory")->capture_default_str();
    run->add_option("--out", out, "Run directory (default: <store>/runs/<task id>)");
    add_common(run, common);

    std::string suite_file;
    std::string bench_out{"bench_out"};
    auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
    bench->add_option("--suite", suite_file, "Suite file (JSON)")->required();
    bench->add_option("--out", bench_out, "Output directory")->capture_default_str();

    auto* inspect = app.add_subcommand("inspect", "Inspect persisted learner state");
    inspect->require_subcommand(1);
    std::size_t k = 5;
    std::string mode{"failure"};
    std::string query_task;
    auto* memory = inspect->add_subcommand("memory", "List episodes or rank them for a task");
    memory->add_option("--store", store)->capture_default_str();
    memory->add_option("--task", query_task, "Rank matches for this task file");
    memory->add_option("--k", k)->capture_default_str();
    memory->add_option("--mode", mode, "failure | ast")->capture_default_str();
    add_common(memory, common);
    auto* skills = inspect->add_subcommand("skills", "List skills with counters");
    skills->add_option("--store", store)->capture_default_str();
    auto* arms = inspect->add_subcommand("arms", "Print per-arm theta and pull counts");
    arms->add_option("--store", store)->capture_default_str();
    std::string trace_run;
    auto* traces = inspect->add_subcommand("traces", "Print delayed-credit dispatch records");
    traces->add_option("--run", trace_run, "Run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_command(task_file, condition, attempts, generator, store, out, common);
        }
        if (bench->parsed()) {
            return bench_command(suite_file, bench_out);
        }
        if (memory->parsed()) {
            return inspect_memory(store, query_task, k, mode, common);
        }
        if (skills->parsed()) {
            return inspect_skills(store);
        }
        if (arms->parsed()) {
            return inspect_arms(store);
        }
        if (traces->parsed()) {
            return inspect_traces(trace_run);
        }
    } catch (mera::Error const& e) {
        std::cerr << "mera: " << mera::to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (std::exception const& e) {
        std::cerr << "mera: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
