#include <gtest/gtest.h>

#include "mera/analyzer.hpp"
#include "mera/error.hpp"
#include "test_support.hpp"

namespace mera {
namespace {

using nlohmann::json;
using testing::TempDir;

auto code_of(std::function<void()> const& fn) -> std::optional<ErrorCode> {
    try {
        fn();
    } catch (Error const& e) {
        return e.code();
    }
    return std::nullopt;
}

TEST(RecordedAnalyzer, ExactContentMatch) {
    auto a = testing::recorded_analyzer();
    auto const src = testing::read_file(testing::fixture("pipeline/candidates/undefined_name.py"));
    auto const names = a->undefined_names(src);
    ASSERT_EQ(names.size(), 1u);
    EXPECT_EQ(names[0].name, "c");
    EXPECT_EQ(names[0].line, 2);
}

TEST(RecordedAnalyzer, FeaturesDecode) {
    auto a = testing::recorded_analyzer();
    auto const f = a->features(testing::read_file(testing::fixture("rl/q_learning/candidates/pass.py")));
    EXPECT_EQ(f.function_count, 4);
    EXPECT_EQ(f.class_count, 1);
    EXPECT_EQ(f.max_loop_depth, 2);
    EXPECT_EQ(f.approx_cyclomatic, 12);
    EXPECT_EQ(f.return_arities, (std::vector<int>{1, 1, 1, 1, 3}));
    EXPECT_TRUE(f.common_libraries[4]);
    EXPECT_TRUE(f.import_names.contains("random"));
}

TEST(RecordedAnalyzer, OkFalseIsParseFailure) {
    auto a = testing::recorded_analyzer();
    auto const src = testing::read_file(testing::fixture("pipeline/candidates/syntax_error.py"));
    EXPECT_EQ(code_of([&] { (void)a->features(src); }), ErrorCode::ParseFailure);
}

TEST(RecordedAnalyzer, MissUsesModeDefault) {
    auto a = testing::recorded_analyzer();
    EXPECT_EQ(a->features("print('never recorded')\n"), AstFeatures{});
    EXPECT_TRUE(a->units("print('never recorded')\n").empty());
}

TEST(RecordedAnalyzer, MissWithoutDefaultIsUnavailable) {
    TempDir dir{"rec"};
    testing::write_file(dir / "r.json", R"({"entries": [{"mode": "UNITS", "source": "x = 1\n",
        "response": {"ok": true, "mode": "UNITS", "payload": {"units": []}}}]})");
    RecordedAnalyzer a{dir / "r.json"};
    EXPECT_EQ(a.size(), 1u);
    EXPECT_TRUE(a.units("x = 1\n").empty());
    EXPECT_EQ(code_of([&] { (void)a.units("x = 2\n"); }), ErrorCode::AnalyzerUnavailable);
}

TEST(RecordedAnalyzer, AstDiffNeedsTwoSources) {
    auto a = testing::recorded_analyzer();
    EXPECT_EQ(code_of([&] { (void)a->analyze(AnalyzerMode::AstDiff, "x", nullptr); }),
              ErrorCode::ModeError);
    std::string const other = "y";
    EXPECT_EQ(code_of([&] { (void)a->analyze(AnalyzerMode::Units, "x", &other); }),
              ErrorCode::ModeError);
}

TEST(RecordedAnalyzer, BadFixtureFile) {
    TempDir dir{"rec"};
    testing::write_file(dir / "r.json", "{");
    EXPECT_THROW((RecordedAnalyzer{dir / "r.json"}), Error);
}

TEST(DecodeResponse, SchemaModeAndOk) {
    auto const good = R"({"schema": "mera.analyzer.response/1", "ok": true, "mode": "UNITS",
                          "payload": {"units": []}})";
    EXPECT_EQ(decode_analyzer_response(good, AnalyzerMode::Units), (json{{"units", json::array()}}));
    EXPECT_EQ(code_of([&] { (void)decode_analyzer_response(good, AnalyzerMode::Features); }),
              ErrorCode::ModeError);
    EXPECT_EQ(code_of([&] {
                  (void)decode_analyzer_response(R"({"schema": "other/9", "ok": true})",
                                                 AnalyzerMode::Units);
              }),
              ErrorCode::AnalyzerUnavailable);
    EXPECT_EQ(code_of([&] { (void)decode_analyzer_response("not json", AnalyzerMode::Units); }),
              ErrorCode::AnalyzerUnavailable);
    EXPECT_EQ(code_of([&] {
                  (void)decode_analyzer_response(
                      R"({"schema": "mera.analyzer.response/1", "ok": false, "error": "bad"})",
                      AnalyzerMode::Units);
              }),
              ErrorCode::ParseFailure);
}

TEST(AstFeatures, JsonRoundTripAndValidation) {
    AstFeatures f;
    f.function_count = 2;
    f.common_libraries[2] = true;
    f.import_names = {"math"};
    f.return_arities = {2, 1};
    json const j = f;
    auto back = j.get<AstFeatures>();
    EXPECT_EQ(back.return_arities, (std::vector<int>{1, 2}));
    EXPECT_TRUE(back.common_libraries[2]);
    EXPECT_THROW((void)(json{{"function_count", -1}}.get<AstFeatures>()), Error);
}

// A stand-in analyzer process that echoes what it was given, so the
// subprocess protocol is exercised without the real analyzer.
constexpr char const* kEchoAnalyzer = R"(import json, sys
mode = sys.argv[sys.argv.index('--mode') + 1]
data = sys.stdin.buffer.read()
if mode == 'FEATURES' and data == b'boom':
    print(json.dumps({'schema': 'mera.analyzer.response/1', 'ok': False, 'mode': mode, 'error': 'invalid syntax'}))
elif mode == 'FEATURES' and data == b'garbage':
    print('Traceback (most recent call last):')
elif mode == 'AST_DIFF':
    before, after = data.split(b'\0')
    print(json.dumps({'schema': 'mera.analyzer.response/1', 'ok': True, 'mode': mode,
                      'payload': {'added': {'Name': len(after)}, 'removed': {'Name': len(before)}}}))
else:
    print(json.dumps({'schema': 'mera.analyzer.response/1', 'ok': True, 'mode': mode,
                      'payload': {'units': [{'qualified_name': data.decode(), 'params': ['a'],
                                             'start_line': 1, 'end_line': 1}],
                                  'function_count': len(data)}}))
)";

class SubprocessAnalyzerTest : public ::testing::Test {
  protected:
    void SetUp() override { testing::write_file(dir_ / "echo.py", kEchoAnalyzer); }
    auto make(double timeout = 10.0) -> SubprocessAnalyzer {
        return SubprocessAnalyzer{{"python3", (dir_ / "echo.py").string()},
                                  testing::python_allowlist(), dir_.path(), timeout};
    }
    TempDir dir_{"sub"};
};

TEST_F(SubprocessAnalyzerTest, SourceOnStdinModeOnArgv) {
    auto a = make();
    auto const units = a.units("def f(a): pass");
    ASSERT_EQ(units.size(), 1u);
    EXPECT_EQ(units[0].qualified_name, "def f(a): pass");
    EXPECT_EQ(a.features("abcd").function_count, 4);
}

TEST_F(SubprocessAnalyzerTest, AstDiffSeparatesSourcesWithNul) {
    auto a = make();
    auto const diff = a.ast_diff("abc", "abcdefg");
    EXPECT_EQ(diff.added.at("Name"), 7);
    EXPECT_EQ(diff.removed.at("Name"), 3);
}

TEST_F(SubprocessAnalyzerTest, FailureModes) {
    auto a = make();
    EXPECT_EQ(code_of([&] { (void)a.features("boom"); }), ErrorCode::ParseFailure);
    EXPECT_EQ(code_of([&] { (void)a.features("garbage"); }), ErrorCode::AnalyzerUnavailable);
    SubprocessAnalyzer missing{{"python3", (dir_ / "absent.py").string()},
                               testing::python_allowlist(), dir_.path()};
    EXPECT_EQ(code_of([&] { (void)missing.units("x"); }), ErrorCode::AnalyzerUnavailable);
    SubprocessAnalyzer refused{{"ruby", "x.rb"}, testing::python_allowlist(), dir_.path()};
    EXPECT_EQ(code_of([&] { (void)refused.units("x"); }), ErrorCode::AnalyzerUnavailable);
    EXPECT_THROW((SubprocessAnalyzer{{}, testing::python_allowlist(), dir_.path()}), Error);
}

TEST(AnalyzerMode, Names) {
    for (auto m : {AnalyzerMode::Features, AnalyzerMode::UndefinedNames, AnalyzerMode::Units,
                   AnalyzerMode::CanonicalDump, AnalyzerMode::AstDiff}) {
        EXPECT_EQ(analyzer_mode_from_string(to_string(m)), m);
    }
    EXPECT_THROW((void)analyzer_mode_from_string("TOKENS"), Error);
}

}  // namespace
}  // namespace mera
