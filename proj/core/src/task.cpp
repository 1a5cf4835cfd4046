#include "mera/task.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mera/error.hpp"

namespace mera {

namespace fs = std::filesystem;
using nlohmann::json;

auto default_stage_command(Stage stage) -> std::vector<std::string> {
    switch (stage) {
        case Stage::Syntax:
            return {"{python}", "-c",
                    "import sys\n"
                    "path = sys.argv[1]\n"
                    "with open(path, encoding='utf-8') as f:\n"
                    "    compile(f.read(), path, 'exec')\n",
                    "{target}"};
        case Stage::Import:
            return {"{python}", "-c",
                    "import importlib.util, sys\n"
                    "spec = importlib.util.spec_from_file_location('candidate', sys.argv[1])\n"
                    "module = importlib.util.module_from_spec(spec)\n"
                    "spec.loader.exec_module(module)\n",
                    "{target}"};
        case Stage::Runtime:
            return {"{python}", "{target}"};
        case Stage::UndefinedName:
        case Stage::SpecContract:
        case Stage::Behavior:
            return {};
    }
    return {};
}

auto TaskSpec::stage_applies(Stage stage) const -> bool {
    if (!applicable_stages.contains(stage)) {
        return false;
    }
    switch (stage) {
        case Stage::SpecContract:
            return !interface.empty();
        case Stage::Behavior:
            return stage_commands.contains(Stage::Behavior);
        default:
            return true;
    }
}

auto load_task(fs::path const& file, fs::path const& workspace_override) -> TaskSpec {
    std::ifstream in{file};
    if (!in) {
        throw Error{ErrorCode::InvalidConfig, "cannot read task file " + file.string()};
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (json::parse_error const& e) {
        throw Error{ErrorCode::InvalidConfig, file.string() + ": " + e.what()};
    }

    TaskSpec task;
    task.task_dir = fs::absolute(file).parent_path();
    task.id = doc.value("id", file.parent_path().filename().string());
    task.family = doc.value("family", std::string{});
    task.request = doc.at("request").get<std::string>();
    task.target_file = doc.value("target_file", std::string{"algorithm.py"});
    task.attempt_budget = doc.value("attempt_budget", 3);
    if (task.attempt_budget < 1) {
        throw Error{ErrorCode::InvalidConfig, "attempt_budget must be >= 1"};
    }
    if (!workspace_override.empty()) {
        task.workspace = workspace_override;
    } else if (doc.contains("workspace")) {
        fs::path ws = doc.at("workspace").get<std::string>();
        task.workspace = ws.is_absolute() ? ws : task.task_dir / ws;
    } else {
        task.workspace = task.task_dir / "workspace";
    }
    if (doc.contains("initial_file")) {
        std::ifstream init{task.task_dir / doc.at("initial_file").get<std::string>()};
        std::ostringstream ss;
        ss << init.rdbuf();
        task.initial_source = ss.str();
    }
    if (doc.contains("stages")) {
        task.applicable_stages.clear();
        for (auto const& s : doc.at("stages")) {
            auto stage = stage_from_string(s.get<std::string>());
            if (!stage) {
                throw Error{ErrorCode::InvalidConfig, "unknown stage " + s.get<std::string>()};
            }
            task.applicable_stages.insert(*stage);
        }
    }
    for (auto const& req : doc.value("interface", json::array())) {
        InterfaceRequirement r;
        auto const kind = req.value("kind", std::string{"function"});
        r.kind = kind == "class" ? InterfaceRequirement::Kind::Class
                                 : InterfaceRequirement::Kind::Function;
        r.name = req.at("name").get<std::string>();
        r.arity = req.value("arity", -1);
        task.interface.push_back(std::move(r));
    }
    auto const commands = doc.value("commands", json::object());
    for (auto const& [name, argv] : commands.items()) {
        auto stage = stage_from_string(name);
        if (!stage) {
            throw Error{ErrorCode::InvalidConfig, "unknown stage " + name};
        }
        task.stage_commands[*stage] = argv.get<std::vector<std::string>>();
    }
    return task;
}

}  // namespace mera
