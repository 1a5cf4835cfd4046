#include "mera/controller.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "mera/error.hpp"
#include "mera/prompt.hpp"
#include "mera/reward.hpp"

namespace mera {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(fs::path const& path, std::string const& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    out << text;
    if (!out.flush()) {
        throw Error{ErrorCode::StorageFailure, "cannot write " + path.string()};
    }
}

auto read_text(fs::path const& path) -> std::optional<std::string> {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

auto attempt_dir(fs::path const& run_dir, int t) -> fs::path {
    char name[32];
    std::snprintf(name, sizeof name, "attempt_%02d", t + 1);
    return run_dir / name;
}

/// Feedback text shown to the generator for one validation report.
auto render_report(ValidationReport const& r) -> std::string {
    if (r.extraction_failed) {
        return "No fenced code block could be extracted from the response.\n";
    }
    std::string out;
    for (auto const& c : r.checks) {
        out += std::string{to_string(c.stage)} + ": " + std::string{to_string(c.outcome)} + "\n";
    }
    if (r.primary_failure != FailureClass::Unknown) {
        out += "primary failure: " + std::string{to_string(r.primary_failure)} + "\n";
        if (!r.checks.empty() && !r.checks.back().detail.empty()) {
            out += r.checks.back().detail;
            if (out.back() != '\n') {
                out += '\n';
            }
        }
    }
    return out;
}

}  // namespace

auto StorePaths::under(fs::path const& root) -> StorePaths {
    StorePaths p{root / "episodes.jsonl", root / "skills.jsonl", root / "operators.jsonl",
                 root / "arms.json", root / "decoding.json"};
    if (auto const* env = std::getenv(kMemoryPathEnv); env != nullptr && *env != '\0') {
        p.episodes = env;
    }
    return p;
}

void to_json(json& j, TaskResult const& r) {
    j = json{{"task_id", r.task_id},
             {"condition", to_string(r.condition)},
             {"accepted", r.accepted},
             {"attempts", r.attempts},
             {"duration", r.duration},
             {"client_error", r.client_error},
             {"error_message", r.error_message},
             {"final_report", r.final_report},
             {"dispatch", r.dispatch}};
    if (r.accepted_source) {
        j["accepted_source"] = *r.accepted_source;
    }
}

Controller::Controller(ControllerConfig config, fs::path store_root,
                       std::shared_ptr<Generator> generator, std::shared_ptr<Analyzer> analyzer,
                       Allowlist allowlist, std::shared_ptr<Clock> clock,
                       std::shared_ptr<Judge> judge)
    : config_{std::move(config)},
      paths_{StorePaths::under(store_root)},
      generator_{std::move(generator)},
      analyzer_{std::move(analyzer)},
      clock_{clock ? std::move(clock) : std::make_shared<SystemClock>()},
      judge_{std::move(judge)},
      validator_{config_.validator, std::move(allowlist), analyzer_, clock_},
      skills_{config_.skill_cap},
      bandit_{config_.linucb},
      decoding_{config_.decoding_seed} {
    config_.validate();
    if (!generator_) {
        throw Error{ErrorCode::InvalidConfig, "controller needs a generator"};
    }
    fs::create_directories(store_root);
    episodes_ = std::make_unique<EpisodeStore>(paths_.episodes, config_.retention_cap);
    skills_.load(paths_.skills);
    operators_.load(paths_.operators);
    bandit_.load(paths_.arms);
    if (auto text = read_text(paths_.decoding)) {
        try {
            decoding_.load_json(json::parse(*text));
        } catch (json::exception const& e) {
            throw Error{ErrorCode::ParseFailure, paths_.decoding.string() + ": " + e.what()};
        }
    }
}

void Controller::save_state() const {
    bandit_.save(paths_.arms);
    skills_.save(paths_.skills);
    operators_.save(paths_.operators);
    write_text(paths_.decoding, decoding_.to_json().dump(2) + "\n");
}

/// Per-run working state of the refinement loop.
struct Controller::Impl {
    Controller& self;
    TaskSpec const& task;
    Condition condition;
    fs::path run_dir;
    bool learners_on;
    bool grace_on;

    History history;
    std::optional<std::string> current_file;
    std::optional<std::string> previous_candidate;
    std::optional<ValidationReport> previous_report;
    double previous_duration{0.0};
    std::vector<TraceStep> trajectory;
    std::vector<GapHint> hints;

    struct Retrieval {
        std::vector<PromptEvidence> episodes;
        std::vector<PromptEvidence> skills;
        std::optional<std::string> diff;
        std::vector<std::int64_t> episode_ids;
        std::vector<std::string> skill_hashes;
        bool attributable{false};
    };

    auto family() const -> std::string {
        return task.family.empty() ? task_family_label(task.request) : task.family;
    }

    void add_episodes(Retrieval& out, Fingerprint const& query, RetrievalMode mode,
                      std::size_t k) {
        std::vector<EpisodeRecord> found;
        try {
            // Ask for extra so duplicates of already chosen records can be skipped.
            found = self.episodes_->retrieve(query, mode, k + out.episode_ids.size(),
                                             self.config_.similarity);
        } catch (Error const& e) {
            if (e.code() != ErrorCode::EmptyStore) {
                throw;
            }
            return;
        }
        std::size_t added = 0;
        for (auto const& r : found) {
            if (added == k) {
                break;
            }
            if (std::find(out.episode_ids.begin(), out.episode_ids.end(), r.record_id) !=
                out.episode_ids.end()) {
                continue;
            }
            out.episode_ids.push_back(r.record_id);
            auto title = "record " + std::to_string(r.record_id) + " (" +
                         (r.accepted ? std::string{"ACCEPTED"}
                                     : std::string{to_string(r.report.primary_failure)}) +
                         ")";
            out.episodes.push_back({std::move(title), r.candidate_source});
            ++added;
        }
    }

    void add_skill(Retrieval& out) {
        try {
            for (auto const& s : self.skills_.select(family(), 1, self.clock_->timestamp_ms())) {
                out.skill_hashes.push_back(s.hash);
                out.skills.push_back({s.qualified_name + " (" + s.hash.substr(0, 12) + ", " +
                                          (s.quarantined ? "quarantined" : "trusted") + ")",
                                      s.source.empty() ? s.canonical_body : s.source});
            }
        } catch (Error const& e) {
            if (e.code() != ErrorCode::EmptyLibrary) {
                throw;
            }
        }
    }

    auto retrieve(RetrievalAction action, Fingerprint const& query, std::string const* before)
        -> Retrieval {
        Retrieval out;
        switch (action) {
            case RetrievalAction::None: break;
            case RetrievalAction::OneFailureMatch:
                add_episodes(out, query, RetrievalMode::FailureMatch, 1);
                break;
            case RetrievalAction::OneAstMatch:
                add_episodes(out, query, RetrievalMode::AstMatch, 1);
                break;
            case RetrievalAction::OneFailureOneAst:
                add_episodes(out, query, RetrievalMode::FailureMatch, 1);
                add_episodes(out, query, RetrievalMode::AstMatch, 1);
                break;
            case RetrievalAction::TwoAstMatch:
                add_episodes(out, query, RetrievalMode::AstMatch, 2);
                break;
            case RetrievalAction::OneSkillOnly: add_skill(out); break;
            case RetrievalAction::OneFailureOneSkill:
                add_episodes(out, query, RetrievalMode::FailureMatch, 1);
                add_skill(out);
                break;
            case RetrievalAction::DiffOnly:
                if (before != nullptr && previous_candidate) {
                    auto d = unified_diff(*before, *previous_candidate);
                    if (!d.empty()) {
                        out.diff = std::move(d);
                    }
                }
                break;
        }
        // A degraded (empty) retrieval did not shape the prompt, so it is not
        // credited to the action; NONE always is.
        out.attributable = action == RetrievalAction::None || !out.episodes.empty() ||
                           !out.skills.empty() || out.diff.has_value();
        return out;
    }
};

auto Controller::run_task(TaskSpec const& task, Condition condition, fs::path const& run_dir)
    -> TaskResult {
    if (task.attempt_budget < 1) {
        throw Error{ErrorCode::InvalidConfig, "attempt budget must be >= 1"};
    }
    Impl run{*this,
             task,
             condition,
             run_dir,
             condition != Condition::RefineB1,
             condition == Condition::Grace,
             History{config_.history_blocks, config_.history_block_chars},
             {},
             {},
             {},
             0.0,
             {},
             {}};
    fs::create_directories(run_dir);
    fs::create_directories(task.workspace);
    auto const target = task.target_path();
    if (!task.initial_source.empty()) {
        write_text(target, task.initial_source);
    }
    run.current_file = read_text(target);

    TaskResult result;
    result.task_id = task.id;
    result.condition = condition;
    std::string attempt_log_text;
    std::optional<std::string> before_previous;  // candidate preceding previous_candidate
    double const started = clock_->monotonic();

    for (int t = 0; t < task.attempt_budget; ++t) {
        double const attempt_started = clock_->monotonic();
        auto const dir = attempt_dir(run_dir, t);

        AttemptContext ctx;
        ctx.attempt_index = t;
        ctx.attempt_budget = task.attempt_budget;
        ctx.has_previous_report = run.previous_report.has_value();
        if (run.previous_report) {
            ctx.previous_passed = run.previous_report->passed_count;
            ctx.previous_failure = run.previous_report->primary_failure;
            ctx.previous_duration = run.previous_duration;
        }
        ctx.edit_mode = fs::exists(target);
        FeatureVector const phi = build_features(ctx);

        std::optional<DecodingProfile> profile;
        if (run.learners_on && config_.decoding_bandit) {
            profile = decoding_.select();
        }
        RetrievalAction const action = run.learners_on ? bandit_.select(phi) : RetrievalAction::None;
        auto const query = compute_fingerprint(
            task, run.current_file ? &*run.current_file : nullptr,
            run.previous_report ? &*run.previous_report : nullptr, *analyzer_, config_.trigram_cap);
        auto retrieval = run.learners_on
                             ? run.retrieve(action, query, before_previous ? &*before_previous : nullptr)
                             : Impl::Retrieval{};
        if (!run.learners_on) {
            retrieval.attributable = false;
        }

        std::vector<GuidanceBlock> guidance;
        if (run.grace_on) {
            auto const prev_failure =
                run.previous_report ? run.previous_report->primary_failure : FailureClass::Unknown;
            guidance = operators_.compose_guidance(config_.grace, prev_failure, run.hints);
        }
        std::vector<std::string> offered_ops;
        PromptInputs inputs;
        inputs.request = task.request;
        inputs.target_file = task.target_file;
        inputs.current_file = run.current_file;
        if (run.previous_report) {
            inputs.previous_report = render_report(*run.previous_report);
        }
        inputs.episodes = retrieval.episodes;
        inputs.skills = retrieval.skills;
        for (auto const& g : guidance) {
            if (!g.operator_id.empty()) {
                offered_ops.push_back(g.operator_id);
            }
            inputs.guidance.push_back(
                {g.operator_id.empty() ? std::string{"gap hint"} : "operator " + g.operator_id, g.text});
        }
        inputs.diff = retrieval.diff;
        inputs.history.assign(run.history.blocks().begin(), run.history.blocks().end());
        auto const prompt = compose_prompt(inputs);
        write_text(dir / "prompt.txt", prompt);

        std::string response;
        try {
            response = generator_->generate({prompt, profile});
        } catch (Error const& e) {
            if (e.code() != ErrorCode::GeneratorUnreachable) {
                throw;
            }
            // The errored attempt counts toward the attempts used.
            result.client_error = true;
            result.error_message = e.what();
            result.attempts = t + 1;
            json entry{{"attempt", t + 1}, {"client_error", true}, {"error", e.what()}};
            attempt_log_text += entry.dump() + "\n";
            result.attempt_log.push_back(std::move(entry));
            break;
        }
        write_text(dir / "response.txt", response);

        auto const code = extract_code(response);
        ValidationReport report;
        if (!code) {
            report = ValidationReport::extraction_failure();
        } else {
            write_text(target, *code);
            write_text(dir / "candidate.py", *code);
            report = validator_.run_pipeline(task, target, false);
        }
        JudgeVerdict verdict = JudgeVerdict::Disabled;
        if (judge_) {
            verdict = validator_pass(report) ? judge_->judge(task, *code, report) : JudgeVerdict::Skipped;
        }
        bool const accepted = acceptance(report, verdict) == 1;
        double const duration = std::max(0.0, clock_->monotonic() - attempt_started);
        double const reward =
            shaped_reward(config_.reward, {accepted, report.passed_count, t, report.extraction_failed,
                                           report.behavior_failed, duration});
        write_text(dir / "report.json", json(report).dump(2) + "\n");

        if (run.learners_on) {
            if (retrieval.attributable) {
                bandit_.update(action, phi, reward, 1.0);
            }
            if (profile) {
                decoding_.update(profile->name, pseudo_success(reward), 1.0);
            }
            skills_.record_outcome(retrieval.skill_hashes, accepted);
            operators_.record_outcome(offered_ops, accepted);

            EpisodeRecord record;
            record.timestamp_ms = clock_->timestamp_ms();
            record.fingerprint = compute_fingerprint(task, code ? &*code : nullptr, &report,
                                                     *analyzer_, config_.trigram_cap);
            record.task_id = task.id;
            record.task_text = task.request;
            record.candidate_source = code.value_or(std::string{});
            record.report = report;
            record.reward = reward;
            record.accepted = accepted;
            record.duration = duration;
            record.decoding_action = profile ? profile->name : std::string{};
            record.retrieval_action = std::string{to_string(action)};
            record.model_id = generator_->model_id();
            episodes_->persist(std::move(record));
        }

        TraceStep step;
        step.step_index = t;
        step.features = phi;
        step.retrieval_action = action;
        if (profile) {
            step.decoding_action = profile->name;
        }
        step.reward = reward;
        step.attributable_retrieval = retrieval.attributable;
        run.trajectory.push_back(step);

        std::size_t derived_ops = 0;
        if (run.grace_on) {
            age_hints(run.hints);
            int const p_prev = run.previous_report ? run.previous_report->passed_count : 0;
            int const v_prev = run.previous_report ? run.previous_report->total_score : 0;
            auto const* before = run.previous_candidate ? &*run.previous_candidate
                                                        : (run.current_file ? &*run.current_file : nullptr);
            if (code && before != nullptr &&
                consolidation_gate(config_.grace, accepted, report.passed_count, p_prev,
                                   report.total_score, v_prev)) {
                auto const from = run.previous_report ? run.previous_report->primary_failure
                                                      : FailureClass::Unknown;
                try {
                    derived_ops += operators_.add(derive_operator(
                        *before, *code, from, report.primary_failure,
                        report.passed_count - p_prev, *analyzer_, clock_->timestamp_ms()));
                } catch (Error const& e) {
                    if (e.code() != ErrorCode::ParseFailure) {
                        throw;
                    }
                }
            }
            if (code && !accepted) {
                for (auto& h : derive_gap_hints(response, *code, t, config_.grace.hint_ttl)) {
                    run.hints.push_back(std::move(h));
                }
            }
        }

        json entry{{"attempt", t + 1},
                   {"retrieval_action", to_string(action)},
                   {"attributable", retrieval.attributable},
                   {"decoding_profile", profile ? json(profile->name) : json(nullptr)},
                   {"episodes", retrieval.episode_ids},
                   {"skills", retrieval.skill_hashes},
                   {"operators", offered_ops},
                   {"new_operators", derived_ops},
                   {"extraction_failed", report.extraction_failed},
                   {"primary_failure", to_string(report.primary_failure)},
                   {"passed_count", report.passed_count},
                   {"total_score", report.total_score},
                   {"judge", to_string(verdict)},
                   {"accepted", accepted},
                   {"reward", reward},
                   {"duration", duration}};
        attempt_log_text += entry.dump() + "\n";
        result.attempt_log.push_back(std::move(entry));

        if (run.previous_report) {
            run.history.append("attempt " + std::to_string(t) + ":\n" +
                               render_report(*run.previous_report));
        }
        run.previous_report = report;
        run.previous_duration = duration;
        if (code) {
            before_previous = run.previous_candidate ? run.previous_candidate : run.current_file;
            run.previous_candidate = *code;
            run.current_file = *code;
        }
        result.final_report = report;
        result.attempts = t + 1;

        if (accepted) {
            result.accepted = true;
            result.accepted_source = *code;
            if (run.learners_on) {
                try {
                    skills_.harvest(*code, run.family(), *analyzer_, clock_->timestamp_ms());
                } catch (Error const& e) {
                    if (e.code() != ErrorCode::ParseFailure) {
                        throw;
                    }
                }
            }
            break;
        }
    }

    // Credit is dispatched at terminal events only: acceptance or an
    // exhausted budget. A client error is neither.
    if (run.learners_on && !result.client_error && !run.trajectory.empty()) {
        CreditSinks sinks;
        sinks.retrieval = [this](TraceStep const& s, double delta, double w) {
            bandit_.update(s.retrieval_action, s.features, delta, w);
        };
        if (config_.decoding_bandit) {
            sinks.decoding = [this](TraceStep const& s, double delta, double w) {
                decoding_.update(*s.decoding_action, pseudo_success(std::clamp(delta, -1.0, 1.0)), w);
            };
        }
        result.dispatch = dispatch_delayed_credit(config_.credit, run.trajectory, sinks);
    }
    std::string trace_text;
    for (auto const& d : result.dispatch) {
        trace_text += json(d).dump() + "\n";
    }
    write_text(run_dir / "trace.jsonl", trace_text);
    write_text(run_dir / "attempts.jsonl", attempt_log_text);
    result.duration = std::max(0.0, clock_->monotonic() - started);
    write_text(run_dir / "result.json", json(result).dump(2) + "\n");
    if (run.learners_on) {
        save_state();
    }
    return result;
}

}  // namespace mera
