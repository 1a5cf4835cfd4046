#include <gtest/gtest.h>

#include "mera/error.hpp"
#include "mera/harness.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace mera {
namespace {

using testing::TempDir;

TEST(Wilson, TablePairs) {
    struct Case {
        long s, n;
        double lo, hi;
    };
    for (auto const& c : {Case{0, 9, 0.000, 0.299}, Case{8, 9, 0.565, 0.980},
                          Case{11, 11, 0.741, 1.000}, Case{10, 11, 0.623, 0.984}}) {
        auto const ci = wilson_interval(c.s, c.n);
        EXPECT_DOUBLE_EQ(round3(ci.lo), c.lo) << c.s << "/" << c.n;
        EXPECT_DOUBLE_EQ(round3(ci.hi), c.hi) << c.s << "/" << c.n;
    }
}

TEST(Wilson, AgreesWithHighPrecisionOracle) {
    for (double conf : {0.80, 0.90, 0.95, 0.98, 0.99}) {
        for (long n = 1; n <= 30; ++n) {
            for (long s = 0; s <= n; ++s) {
                auto const got = wilson_interval(s, n, conf);
                auto const want = testing::wilson_oracle(s, n, conf);
                ASSERT_NEAR(got.lo, want.lo, 1e-6) << s << "/" << n << " @" << conf;
                ASSERT_NEAR(got.hi, want.hi, 1e-6) << s << "/" << n << " @" << conf;
                ASSERT_LE(0.0, got.lo);
                ASSERT_LE(got.lo, static_cast<double>(s) / n);
                ASSERT_LE(static_cast<double>(s) / n, got.hi);
                ASSERT_LE(got.hi, 1.0);
            }
        }
    }
}

TEST(Wilson, InvalidCounts) {
    EXPECT_THROW((void)wilson_interval(0, 0), Error);
    EXPECT_THROW((void)wilson_interval(5, 4), Error);
    EXPECT_THROW((void)wilson_interval(-1, 4), Error);
    EXPECT_THROW((void)normal_quantile(0.5), Error);
    EXPECT_NEAR(normal_quantile(0.95), 1.959964, 1e-6);
}

TEST(Round3, HalfAwayFromZero) {
    EXPECT_DOUBLE_EQ(round3(0.2985), 0.299);
    EXPECT_DOUBLE_EQ(round3(0.0004), 0.0);
    EXPECT_DOUBLE_EQ(round3(1.0), 1.0);
}

auto run(bool accepted, FailureClass f = FailureClass::Unknown) -> RunResult {
    RunResult r;
    r.accepted = accepted;
    r.final_failure = f;
    return r;
}

TEST(SummarizeFailures, Examples) {
    EXPECT_TRUE(summarize_failures({run(true), run(true)}).empty());
    EXPECT_EQ(summarize_failures({run(false, FailureClass::Runtime)}),
              (std::map<FailureClass, int>{{FailureClass::Runtime, 1}}));
    std::vector<RunResult> nine(6, run(true));
    nine.push_back(run(false, FailureClass::Runtime));
    nine.push_back(run(false, FailureClass::Semantic));
    nine.push_back(run(false, FailureClass::Runtime));
    EXPECT_EQ(summarize_failures(nine),
              (std::map<FailureClass, int>{{FailureClass::Runtime, 2}, {FailureClass::Semantic, 1}}));
}

TEST(SummarizePhase, RatesAndIntervals) {
    std::vector<RunResult> runs;
    for (int i = 0; i < 9; ++i) {
        auto r = run(i != 4, i == 4 ? FailureClass::Runtime : FailureClass::Unknown);
        r.condition = Condition::Mera;
        r.task_id = "t" + std::to_string(i % 3);
        r.attempts = 1 + i % 2;
        runs.push_back(r);
    }
    auto const s = summarize_phase("p", {Condition::Mera}, runs);
    auto const* c = s.find(Condition::Mera);
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->runs, 9);
    EXPECT_EQ(c->successes, 8);
    EXPECT_DOUBLE_EQ(round3(c->success_rate), 0.889);
    EXPECT_DOUBLE_EQ(round3(c->ci.lo), 0.565);
    EXPECT_DOUBLE_EQ(round3(c->ci.hi), 0.980);
    EXPECT_NEAR(c->mean_attempts, 13.0 / 9.0, 1e-12);
    ASSERT_EQ(c->tasks.size(), 3u);
    EXPECT_EQ(s.find(Condition::Grace), nullptr);
    EXPECT_FALSE(render_table(s).empty());
}

TEST(ExpandSpec, Placeholders) {
    EXPECT_EQ(expand_generator_spec("scripted:s/{condition}/{task}/r{repeat}", Condition::RefineB1,
                                    "vi", 2),
              "scripted:s/refine_b1/vi/r2");
}

class HarnessRun : public ::testing::Test {
  protected:
    auto env() -> PhaseEnvironment {
        PhaseEnvironment e;
        e.analyzer = testing::recorded_analyzer();
        e.allowlist = testing::python_allowlist();
        e.clock_factory = [] { return std::make_shared<ManualClock>(0.25); };
        e.generator_factory = [](std::string const& spec) -> std::shared_ptr<Generator> {
            return make_generator(spec);
        };
        return e;
    }
    auto suite() -> SuiteSpec {
        SuiteSpec s;
        s.name = "unit";
        s.tasks = {testing::fixture("pipeline/task.json")};
        s.conditions = {Condition::Mera};
        s.generator = "scripted:" + (dir_ / "scripts").string() + "/{condition}/{task}/r{repeat}";
        return s;
    }
    void respond(std::string const& name, std::string const& text) {
        testing::write_file(dir_ / "scripts/mera/add/r1" / name, text);
    }
    TempDir dir_{"harness"};
};

TEST_F(HarnessRun, SingleAlwaysPassRun) {
    respond("000.txt", "```python\n" +
                           testing::read_file(testing::fixture("pipeline/candidates/full_pass.py")) +
                           "```\n");
    auto const s = run_phase(suite(), env(), dir_ / "out");
    auto const* c = s.find(Condition::Mera);
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->runs, 1);
    EXPECT_EQ(c->successes, 1);
    EXPECT_DOUBLE_EQ(c->success_rate, 1.0);
    EXPECT_FALSE(s.harness_errors);
    EXPECT_TRUE(std::filesystem::exists(dir_ / "out/summary.json"));
    EXPECT_TRUE(std::filesystem::exists(dir_ / "out/summary.txt"));
    auto const doc = nlohmann::json::parse(testing::read_file(dir_ / "out/summary.json"));
    EXPECT_EQ(doc.at("schema"), "mera.phase_summary/1");
}

TEST_F(HarnessRun, GeneratorErrorIsCountedAsFailure) {
    respond("000.error", "timed out");
    auto const s = run_phase(suite(), env(), dir_ / "out");
    auto const* c = s.find(Condition::Mera);
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->runs, 1);
    EXPECT_EQ(c->successes, 0);
    ASSERT_EQ(s.runs.size(), 1u);
    EXPECT_TRUE(s.runs[0].client_error);
    EXPECT_EQ(s.runs[0].attempts, 1);
}

TEST(SuiteSpec, LoadResolvesRelativePaths) {
    auto const s = SuiteSpec::load(testing::fixture("phase1c/suite.json"));
    EXPECT_EQ(s.tasks.size(), 3u);
    EXPECT_EQ(s.repeats, 3);
    EXPECT_EQ(s.conditions, (std::vector<Condition>{Condition::RefineB1, Condition::Mera, Condition::Grace}));
    EXPECT_TRUE(s.deterministic_clock);
    EXPECT_TRUE(std::filesystem::exists(s.analyzer_fixtures));
    EXPECT_TRUE(s.generator.starts_with("scripted:/"));
}

}  // namespace
}  // namespace mera
