#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/analyzer.hpp"
#include "mera/clock.hpp"
#include "mera/config.hpp"
#include "mera/credit.hpp"
#include "mera/decoding.hpp"
#include "mera/episode_store.hpp"
#include "mera/generator.hpp"
#include "mera/grace.hpp"
#include "mera/linucb.hpp"
#include "mera/skills.hpp"
#include "mera/task.hpp"
#include "mera/types.hpp"
#include "mera/validator.hpp"

namespace mera {

/// Optional post-validation veto. Only consulted for validator-passing
/// candidates; it can reject but never accept.
class Judge {
  public:
    virtual ~Judge() = default;
    [[nodiscard]] virtual auto judge(TaskSpec const& task, std::string const& source,
                                     ValidationReport const& report) -> JudgeVerdict = 0;
};

/// File names of the persistent learner state under a store root.
struct StorePaths {
    std::filesystem::path episodes;
    std::filesystem::path skills;
    std::filesystem::path operators;
    std::filesystem::path arms;
    std::filesystem::path decoding;

    [[nodiscard]] static auto under(std::filesystem::path const& root) -> StorePaths;
};

struct TaskResult {
    std::string task_id;
    Condition condition{Condition::Mera};
    bool accepted{false};
    std::optional<std::string> accepted_source;
    ValidationReport final_report;
    int attempts{0};
    double duration{0.0};
    bool client_error{false};
    std::string error_message;
    std::vector<nlohmann::json> attempt_log;
    std::vector<DispatchRecord> dispatch;
};

void to_json(nlohmann::json& j, TaskResult const& r);

/// External controller around a frozen generator: one instance owns the
/// learner state of a store root and runs tasks sequentially.
class Controller {
  public:
    Controller(ControllerConfig config, std::filesystem::path store_root,
               std::shared_ptr<Generator> generator, std::shared_ptr<Analyzer> analyzer,
               Allowlist allowlist, std::shared_ptr<Clock> clock,
               std::shared_ptr<Judge> judge = nullptr);

    /// Runs the refinement loop for one task. Run artifacts (prompts,
    /// responses, candidates, reports, attempt and trace logs) go under
    /// `run_dir`. Generator failures end the run as a failed result with
    /// client_error set; they are not rethrown.
    auto run_task(TaskSpec const& task, Condition condition,
                  std::filesystem::path const& run_dir) -> TaskResult;

    [[nodiscard]] auto bandit() const -> LinUcbBandit const& { return bandit_; }
    [[nodiscard]] auto episodes() const -> EpisodeStore const& { return *episodes_; }
    [[nodiscard]] auto skills() const -> SkillLibrary const& { return skills_; }
    [[nodiscard]] auto operators() const -> OperatorStore const& { return operators_; }
    [[nodiscard]] auto decoding() const -> DecodingProfileBandit const& { return decoding_; }
    [[nodiscard]] auto config() const -> ControllerConfig const& { return config_; }

    /// Writes arms, skills, operators and decoding posteriors.
    void save_state() const;

  private:
    struct Impl;

    ControllerConfig config_;
    StorePaths paths_;
    std::shared_ptr<Generator> generator_;
    std::shared_ptr<Analyzer> analyzer_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<Judge> judge_;
    Validator validator_;
    std::unique_ptr<EpisodeStore> episodes_;
    SkillLibrary skills_;
    LinUcbBandit bandit_;
    OperatorStore operators_;
    DecodingProfileBandit decoding_;
};

}  // namespace mera
