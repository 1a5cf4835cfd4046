#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "mera/analyzer.hpp"
#include "mera/clock.hpp"
#include "mera/command.hpp"
#include "mera/task.hpp"
#include "mera/validator.hpp"

namespace mera::testing {

[[nodiscard]] auto fixture(std::string const& relative) -> std::filesystem::path;
[[nodiscard]] auto read_file(std::filesystem::path const& path) -> std::string;
void write_file(std::filesystem::path const& path, std::string const& text);

/// Fresh directory under the build tree, removed on destruction.
class TempDir {
  public:
    explicit TempDir(std::string const& tag = "t");
    ~TempDir();
    TempDir(TempDir const&) = delete;
    auto operator=(TempDir const&) -> TempDir& = delete;

    [[nodiscard]] auto path() const -> std::filesystem::path const& { return path_; }
    [[nodiscard]] auto operator/(std::string const& child) const -> std::filesystem::path {
        return path_ / child;
    }

  private:
    std::filesystem::path path_;
};

[[nodiscard]] auto recorded_analyzer() -> std::shared_ptr<RecordedAnalyzer>;
[[nodiscard]] auto python_allowlist() -> Allowlist;

/// Loads a fixture task with its workspace redirected into `workspace`.
[[nodiscard]] auto load_fixture_task(std::string const& relative,
                                     std::filesystem::path const& workspace) -> TaskSpec;

/// Copies a fixture candidate over the task's target file and returns its path.
auto materialize(TaskSpec const& task, std::string const& candidate_fixture)
    -> std::filesystem::path;

[[nodiscard]] auto make_validator(std::shared_ptr<Analyzer> analyzer = nullptr) -> Validator;

}  // namespace mera::testing
