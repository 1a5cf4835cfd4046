#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mera {

inline constexpr double kDefaultCommandTimeout = 120.0;
inline constexpr std::size_t kDefaultOutputCap = 16384;
inline constexpr std::string_view kTruncationMarker = "\n[... output truncated]";
inline constexpr char const* kAllowlistEnv = "MERA_ALLOWLIST";

/// Set of program names that may be spawned by the validator.
class Allowlist {
  public:
    Allowlist() = default;
    explicit Allowlist(std::set<std::string> programs)
        : programs_{std::move(programs)} {}

    /// Newline-separated names; blank lines and '#' comments are ignored.
    [[nodiscard]] static auto load(std::filesystem::path const& file)
        -> Allowlist;
    /// Loads from $MERA_ALLOWLIST when set, otherwise returns the fallback.
    [[nodiscard]] static auto from_environment(Allowlist fallback) -> Allowlist;
    [[nodiscard]] static auto defaults() -> Allowlist;

    [[nodiscard]] auto contains(std::string const& program) const -> bool {
        return programs_.contains(program);
    }
    [[nodiscard]] auto programs() const -> std::set<std::string> const& {
        return programs_;
    }

  private:
    std::set<std::string> programs_;
};

struct CommandSpec {
    std::string program;
    std::vector<std::string> args;
    double timeout{kDefaultCommandTimeout};
    std::size_t output_cap{kDefaultOutputCap};
    std::filesystem::path workspace;  // root the workdir must stay inside
    std::filesystem::path workdir;    // empty means the workspace root
    std::optional<std::string> stdin_data;
};

struct CommandResult {
    int exit_status{0};       // exit code, or 128 + signal
    std::string stdout_text;  // includes kTruncationMarker when truncated
    std::string stderr_text;
    std::size_t captured_bytes{0};  // payload bytes kept, excluding markers
    bool truncated{false};
    double duration{0.0};
};

/// True when `path` resolves to `root` or somewhere below it.
[[nodiscard]] auto is_within(std::filesystem::path const& root,
                             std::filesystem::path const& path) -> bool;

/// Spawns `spec.program` directly (no shell) with an explicit argument list.
/// Combined stdout+stderr payload is capped at `spec.output_cap` bytes in
/// arrival order; the process group is killed when `spec.timeout` elapses.
///
/// Throws Error{DisallowedCommand} when the program is not allowlisted,
/// Error{Timeout} when the deadline passes, Error{SpawnFailure} when the
/// program cannot be started, Error{WorkspaceEscape} for a bad workdir.
[[nodiscard]] auto run_bounded_command(CommandSpec const& spec,
                                       Allowlist const& allowlist)
    -> CommandResult;

}  // namespace mera
