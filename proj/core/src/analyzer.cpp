#include "mera/analyzer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mera/error.hpp"

namespace mera {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

auto read_file(fs::path const& path) -> std::string {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw Error{ErrorCode::InvalidConfig, "cannot read " + path.string()};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

auto payload_or_throw(json const& response, AnalyzerMode mode) -> json {
    if (!response.is_object() || !response.contains("ok")) {
        throw Error{ErrorCode::AnalyzerUnavailable, "malformed analyzer response"};
    }
    if (!response.at("ok").get<bool>()) {
        throw Error{ErrorCode::ParseFailure,
                    response.value("error", std::string{"analyzer reported failure"})};
    }
    if (response.contains("mode") && response.at("mode").get<std::string>() != to_string(mode)) {
        throw Error{ErrorCode::ModeError, "analyzer answered for mode " +
                                              response.at("mode").get<std::string>()};
    }
    return response.value("payload", json::object());
}

}  // namespace

auto to_string(AnalyzerMode mode) -> std::string {
    switch (mode) {
        case AnalyzerMode::Features: return "FEATURES";
        case AnalyzerMode::UndefinedNames: return "UNDEFINED_NAMES";
        case AnalyzerMode::Units: return "UNITS";
        case AnalyzerMode::CanonicalDump: return "CANONICAL_DUMP";
        case AnalyzerMode::AstDiff: return "AST_DIFF";
    }
    return "?";
}

auto analyzer_mode_from_string(std::string const& text) -> AnalyzerMode {
    for (auto m : {AnalyzerMode::Features, AnalyzerMode::UndefinedNames, AnalyzerMode::Units,
                   AnalyzerMode::CanonicalDump, AnalyzerMode::AstDiff}) {
        if (to_string(m) == text) {
            return m;
        }
    }
    throw Error{ErrorCode::ModeError, "unknown analyzer mode " + text};
}

void to_json(json& j, AstFeatures const& f) {
    json libs = json::array();
    for (std::size_t i = 0; i < kCommonLibraries.size(); ++i) {
        if (f.common_libraries[i]) {
            libs.push_back(std::string{kCommonLibraries[i]});
        }
    }
    j = json{{"function_count", f.function_count},
             {"class_count", f.class_count},
             {"max_loop_depth", f.max_loop_depth},
             {"recursion", f.recursion},
             {"class_usage", f.class_usage},
             {"common_libraries", libs},
             {"state_machine", f.state_machine},
             {"approx_cyclomatic", f.approx_cyclomatic},
             {"import_names", f.import_names},
             {"return_arities", f.return_arities}};
}

void from_json(json const& j, AstFeatures& f) {
    f = AstFeatures{};
    f.function_count = j.value("function_count", 0);
    f.class_count = j.value("class_count", 0);
    f.max_loop_depth = j.value("max_loop_depth", 0);
    f.recursion = j.value("recursion", false);
    f.class_usage = j.value("class_usage", false);
    f.state_machine = j.value("state_machine", false);
    f.approx_cyclomatic = j.value("approx_cyclomatic", 0);
    if (f.function_count < 0 || f.class_count < 0 || f.max_loop_depth < 0 ||
        f.approx_cyclomatic < 0) {
        throw Error{ErrorCode::ParseFailure, "negative AST feature count"};
    }
    for (auto const& lib : j.value("common_libraries", json::array())) {
        auto const name = lib.get<std::string>();
        for (std::size_t i = 0; i < kCommonLibraries.size(); ++i) {
            if (kCommonLibraries[i] == name) {
                f.common_libraries[i] = true;
            }
        }
    }
    for (auto const& name : j.value("import_names", json::array())) {
        f.import_names.insert(name.get<std::string>());
    }
    for (auto const& arity : j.value("return_arities", json::array())) {
        f.return_arities.push_back(arity.get<int>());
    }
    std::sort(f.return_arities.begin(), f.return_arities.end());
}

auto Analyzer::features(std::string const& source) -> AstFeatures {
    return analyze(AnalyzerMode::Features, source, nullptr).get<AstFeatures>();
}

auto Analyzer::undefined_names(std::string const& source) -> std::vector<UndefinedName> {
    auto const payload = analyze(AnalyzerMode::UndefinedNames, source, nullptr);
    std::vector<UndefinedName> names;
    for (auto const& n : payload.value("names", json::array())) {
        names.push_back({n.at("name").get<std::string>(), n.value("line", 0)});
    }
    return names;
}

auto Analyzer::units(std::string const& source) -> std::vector<CodeUnit> {
    auto const payload = analyze(AnalyzerMode::Units, source, nullptr);
    std::vector<CodeUnit> units;
    for (auto const& u : payload.value("units", json::array())) {
        CodeUnit unit;
        unit.qualified_name = u.at("qualified_name").get<std::string>();
        unit.params = u.value("params", std::vector<std::string>{});
        unit.start_line = u.value("start_line", 0);
        unit.end_line = u.value("end_line", 0);
        units.push_back(std::move(unit));
    }
    return units;
}

auto Analyzer::canonical_dumps(std::string const& source) -> std::vector<UnitDump> {
    auto const payload = analyze(AnalyzerMode::CanonicalDump, source, nullptr);
    std::vector<UnitDump> dumps;
    for (auto const& d : payload.value("dumps", json::array())) {
        dumps.push_back({d.at("qualified_name").get<std::string>(), d.at("dump").get<std::string>()});
    }
    return dumps;
}

auto Analyzer::ast_diff(std::string const& before, std::string const& after) -> AstDiff {
    auto const payload = analyze(AnalyzerMode::AstDiff, before, &after);
    AstDiff diff;
    auto const added = payload.value("added", json::object());
    auto const removed = payload.value("removed", json::object());
    for (auto const& [kind, count] : added.items()) {
        if (count.get<int>() > 0) {
            diff.added[kind] = count.get<int>();
        }
    }
    for (auto const& [kind, count] : removed.items()) {
        if (count.get<int>() > 0) {
            diff.removed[kind] = count.get<int>();
        }
    }
    return diff;
}

auto decode_analyzer_response(std::string const& text, AnalyzerMode mode) -> json {
    json doc;
    try {
        doc = json::parse(text);
    } catch (json::parse_error const& e) {
        throw Error{ErrorCode::AnalyzerUnavailable,
                    std::string{"analyzer output is not a JSON document: "} + e.what()};
    }
    if (doc.value("schema", std::string{}) != kAnalyzerResponseSchema) {
        throw Error{ErrorCode::AnalyzerUnavailable, "unexpected analyzer schema id"};
    }
    return payload_or_throw(doc, mode);
}

SubprocessAnalyzer::SubprocessAnalyzer(std::vector<std::string> command, Allowlist allowlist,
                                       fs::path workdir, double timeout,
                                       std::size_t output_cap)
    : command_{std::move(command)},
      allowlist_{std::move(allowlist)},
      workdir_{std::move(workdir)},
      timeout_{timeout},
      output_cap_{output_cap} {
    if (command_.empty()) {
        throw Error{ErrorCode::InvalidConfig, "empty analyzer command"};
    }
}

auto SubprocessAnalyzer::analyze(AnalyzerMode mode, std::string const& source,
                                 std::string const* second_source) -> json {
    if ((mode == AnalyzerMode::AstDiff) != (second_source != nullptr)) {
        throw Error{ErrorCode::ModeError, "AST_DIFF needs exactly two sources"};
    }
    CommandSpec spec;
    spec.program = command_.front();
    spec.args.assign(command_.begin() + 1, command_.end());
    spec.args.push_back("--mode");
    spec.args.push_back(to_string(mode));
    spec.timeout = timeout_;
    spec.output_cap = output_cap_;
    spec.workspace = workdir_;
    spec.workdir = workdir_;
    std::string input = source;
    if (second_source != nullptr) {
        input.push_back('\0');
        input += *second_source;
    }
    spec.stdin_data = std::move(input);

    CommandResult result;
    try {
        result = run_bounded_command(spec, allowlist_);
    } catch (Error const& e) {
        throw Error{ErrorCode::AnalyzerUnavailable, e.what()};
    }
    if (result.truncated) {
        throw Error{ErrorCode::AnalyzerUnavailable, "analyzer output exceeded the output cap"};
    }
    json doc;
    try {
        doc = json::parse(result.stdout_text);
    } catch (json::parse_error const&) {
        throw Error{ErrorCode::AnalyzerUnavailable,
                    "analyzer produced no JSON document (exit " +
                        std::to_string(result.exit_status) + "): " + result.stderr_text};
    }
    if (doc.value("schema", std::string{}) != kAnalyzerResponseSchema) {
        throw Error{ErrorCode::AnalyzerUnavailable, "unexpected analyzer schema id"};
    }
    return payload_or_throw(doc, mode);
}

RecordedAnalyzer::RecordedAnalyzer(fs::path const& fixture_file) {
    auto const base = fixture_file.parent_path();
    json doc;
    try {
        doc = json::parse(read_file(fixture_file));
    } catch (json::parse_error const& e) {
        throw Error{ErrorCode::InvalidConfig, "bad analyzer fixture file: " + std::string{e.what()}};
    }
    for (auto const& entry : doc.value("entries", json::array())) {
        Key key{analyzer_mode_from_string(entry.at("mode").get<std::string>()), {}, {}};
        if (entry.contains("source_file")) {
            key.source = read_file(base / entry.at("source_file").get<std::string>());
        } else {
            key.source = entry.value("source", std::string{});
        }
        if (entry.contains("second_source_file")) {
            key.second = read_file(base / entry.at("second_source_file").get<std::string>());
        } else {
            key.second = entry.value("second_source", std::string{});
        }
        entries_[key] = entry.at("response");
    }
    auto const defaults = doc.value("defaults", json::object());
    for (auto const& [mode, response] : defaults.items()) {
        defaults_[analyzer_mode_from_string(mode)] = response;
    }
}

auto RecordedAnalyzer::analyze(AnalyzerMode mode, std::string const& source,
                               std::string const* second_source) -> json {
    if ((mode == AnalyzerMode::AstDiff) != (second_source != nullptr)) {
        throw Error{ErrorCode::ModeError, "AST_DIFF needs exactly two sources"};
    }
    Key const key{mode, source, second_source != nullptr ? *second_source : std::string{}};
    if (auto it = entries_.find(key); it != entries_.end()) {
        return payload_or_throw(it->second, mode);
    }
    if (auto it = defaults_.find(mode); it != defaults_.end()) {
        return payload_or_throw(it->second, mode);
    }
    auto first_line = source.substr(0, source.find('\n'));
    throw Error{ErrorCode::AnalyzerUnavailable,
                "no recorded " + to_string(mode) + " response for source starting '" +
                    first_line + "'"};
}

}  // namespace mera
