#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mera/types.hpp"

namespace mera {

/// One declared interface obligation checked by the SPEC_CONTRACT stage.
/// Functions match a unit by qualified name and arity; for methods
/// ("Class.method") a leading self/cls parameter is not counted. A class
/// requirement is met when at least one method of that class exists.
struct InterfaceRequirement {
    enum class Kind { Function, Class };
    Kind kind{Kind::Function};
    std::string name;
    int arity{-1};  // -1: any arity
};

/// Declarative task document. Paths inside are resolved relative to the
/// task file's directory.
struct TaskSpec {
    std::string id;
    std::string family;  // empty: derived from the request text
    std::string request;
    std::string target_file{"algorithm.py"};
    std::filesystem::path workspace;
    std::filesystem::path task_dir;
    std::set<Stage> applicable_stages{kStageOrder.begin(), kStageOrder.end()};
    std::vector<InterfaceRequirement> interface;
    /// argv templates; placeholders {python} {target} {workspace} {task_dir}.
    std::map<Stage, std::vector<std::string>> stage_commands;
    int attempt_budget{3};
    std::string initial_source;  // optional starting content of the target

    [[nodiscard]] auto target_path() const -> std::filesystem::path {
        return workspace / target_file;
    }
    /// True when the stage is declared applicable and has a command (or needs none).
    [[nodiscard]] auto stage_applies(Stage stage) const -> bool;
};

/// Loads a task document. `workspace_override`, when non-empty, replaces
/// the workspace named in the file.
[[nodiscard]] auto load_task(std::filesystem::path const& file,
                             std::filesystem::path const& workspace_override = {})
    -> TaskSpec;

[[nodiscard]] auto default_stage_command(Stage stage) -> std::vector<std::string>;

}  // namespace mera
