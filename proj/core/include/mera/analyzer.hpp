#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/command.hpp"

namespace mera {

inline constexpr std::string_view kAnalyzerRequestSchema = "mera.analyzer.request/1";
inline constexpr std::string_view kAnalyzerResponseSchema = "mera.analyzer.response/1";

/// Library names whose import sets a common-library flag, in flag order.
inline constexpr std::array<std::string_view, 5> kCommonLibraries = {
    "collections", "itertools", "math", "numpy", "random"};

enum class AnalyzerMode { Features, UndefinedNames, Units, CanonicalDump, AstDiff };

[[nodiscard]] auto to_string(AnalyzerMode mode) -> std::string;
[[nodiscard]] auto analyzer_mode_from_string(std::string const& text) -> AnalyzerMode;

struct AstFeatures {
    int function_count{0};
    int class_count{0};
    int max_loop_depth{0};
    bool recursion{false};
    bool class_usage{false};
    std::array<bool, kCommonLibraries.size()> common_libraries{};
    bool state_machine{false};
    int approx_cyclomatic{0};
    std::set<std::string> import_names;
    std::vector<int> return_arities;  // multiset, kept sorted

    auto operator==(AstFeatures const&) const -> bool = default;
};

struct UndefinedName {
    std::string name;
    int line{0};
};

struct CodeUnit {
    std::string qualified_name;  // "f" or "Class.method"
    std::vector<std::string> params;
    int start_line{0};
    int end_line{0};
};

struct UnitDump {
    std::string qualified_name;
    std::string dump;
};

struct AstDiff {
    std::map<std::string, int> added;
    std::map<std::string, int> removed;

    [[nodiscard]] auto empty() const -> bool { return added.empty() && removed.empty(); }
};

void to_json(nlohmann::json& j, AstFeatures const& f);
void from_json(nlohmann::json const& j, AstFeatures& f);

/// Client side of the structural analyzer protocol. Implementations return
/// the raw payload for a mode; the typed helpers decode it.
///
/// Transport failures raise Error{AnalyzerUnavailable}; a response with
/// ok=false raises Error{ParseFailure}.
class Analyzer {
  public:
    virtual ~Analyzer() = default;

    [[nodiscard]] virtual auto analyze(AnalyzerMode mode, std::string const& source,
                                       std::string const* second_source)
        -> nlohmann::json = 0;

    [[nodiscard]] auto features(std::string const& source) -> AstFeatures;
    [[nodiscard]] auto undefined_names(std::string const& source)
        -> std::vector<UndefinedName>;
    [[nodiscard]] auto units(std::string const& source) -> std::vector<CodeUnit>;
    [[nodiscard]] auto canonical_dumps(std::string const& source) -> std::vector<UnitDump>;
    [[nodiscard]] auto ast_diff(std::string const& before, std::string const& after)
        -> AstDiff;
};

/// Decodes one response document; validates schema id, mode and ok flag.
[[nodiscard]] auto decode_analyzer_response(std::string const& text, AnalyzerMode mode)
    -> nlohmann::json;

/// Runs the analyzer as a bounded, allowlisted subprocess:
/// `<command...> --mode <MODE>` with the source on stdin (for AST_DIFF the
/// two sources are separated by a single NUL byte) and one JSON document on
/// stdout.
class SubprocessAnalyzer final : public Analyzer {
  public:
    SubprocessAnalyzer(std::vector<std::string> command, Allowlist allowlist,
                       std::filesystem::path workdir, double timeout = 30.0,
                       std::size_t output_cap = 1 << 20);

    auto analyze(AnalyzerMode mode, std::string const& source,
                 std::string const* second_source) -> nlohmann::json override;

  private:
    std::vector<std::string> command_;
    Allowlist allowlist_;
    std::filesystem::path workdir_;
    double timeout_;
    std::size_t output_cap_;
};

/// Replays recorded analyzer responses from a fixture document:
///
///   { "entries": [ { "mode": "UNITS", "source_file": "a.py",
///                    "second_source_file": "b.py", "response": {...} } ],
///     "defaults": { "FEATURES": {...} } }
///
/// Source files are resolved relative to the fixture file and matched by
/// exact content. A miss without a mode default raises AnalyzerUnavailable.
class RecordedAnalyzer final : public Analyzer {
  public:
    explicit RecordedAnalyzer(std::filesystem::path const& fixture_file);

    auto analyze(AnalyzerMode mode, std::string const& source,
                 std::string const* second_source) -> nlohmann::json override;

    [[nodiscard]] auto size() const -> std::size_t { return entries_.size(); }

  private:
    struct Key {
        AnalyzerMode mode;
        std::string source;
        std::string second;
        auto operator<=>(Key const&) const = default;
    };
    std::map<Key, nlohmann::json> entries_;
    std::map<AnalyzerMode, nlohmann::json> defaults_;
};

}  // namespace mera
