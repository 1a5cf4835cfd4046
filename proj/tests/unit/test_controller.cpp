#include <gtest/gtest.h>

#include "mera/controller.hpp"
#include "mera/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace mera {
namespace {

using testing::TempDir;

class ControllerTest : public ::testing::Test {
  protected:
    void script(std::vector<std::string> const& responses) {
        std::filesystem::create_directories(dir_ / "script");
        for (std::size_t i = 0; i < responses.size(); ++i) {
            char name[16];
            std::snprintf(name, sizeof name, "%03zu", i);
            auto const& r = responses[i];
            if (r.starts_with("!error ")) {
                testing::write_file(dir_ / "script" / (std::string{name} + ".error"), r.substr(7));
            } else {
                testing::write_file(dir_ / "script" / (std::string{name} + ".txt"), r);
            }
        }
    }

    static auto fenced(std::string const& candidate) -> std::string {
        return "Here is the implementation.\n```python\n" +
               testing::read_file(testing::fixture("pipeline/candidates/" + candidate)) + "```\n";
    }

    auto make(std::shared_ptr<Judge> judge = nullptr) -> Controller {
        return Controller{ControllerConfig{},
                          dir_ / "store",
                          std::make_shared<ScriptedGenerator>(dir_ / "script"),
                          testing::recorded_analyzer(),
                          testing::python_allowlist(),
                          std::make_shared<ManualClock>(0.25),
                          std::move(judge)};
    }

    auto task() -> TaskSpec { return testing::load_fixture_task("pipeline/task.json", dir_ / "ws"); }

    TempDir dir_{"ctl"};
};

TEST_F(ControllerTest, ImmediateSuccess) {
    script({fenced("full_pass.py")});
    auto controller = make();
    auto const r = controller.run_task(task(), Condition::Mera, dir_ / "run");
    EXPECT_TRUE(r.accepted);
    EXPECT_EQ(r.attempts, 1);
    EXPECT_FALSE(r.client_error);
    EXPECT_EQ(r.final_report.primary_failure, FailureClass::Unknown);
    EXPECT_EQ(r.accepted_source, testing::read_file(testing::fixture("pipeline/candidates/full_pass.py")));
    EXPECT_EQ(controller.episodes().size(), 1u);
    EXPECT_EQ(controller.skills().size(), 1u);
    EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / "attempt_01" / "prompt.txt"));
    EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / "attempts.jsonl"));
    EXPECT_TRUE(std::filesystem::exists(dir_ / "store" / "arms.json"));
}

TEST_F(ControllerTest, ProseOnlyExhaustsBudget) {
    script({"I cannot write code today.", "Still prose.", "More prose."});
    auto controller = make();
    auto const r = controller.run_task(task(), Condition::Mera, dir_ / "run");
    EXPECT_FALSE(r.accepted);
    EXPECT_EQ(r.attempts, 3);
    EXPECT_EQ(r.final_report.primary_failure, FailureClass::Extraction);
    EXPECT_TRUE(r.final_report.checks.empty());
    for (auto const& entry : r.attempt_log) {
        EXPECT_TRUE(entry.at("extraction_failed").get<bool>());
    }
    EXPECT_EQ(controller.episodes().size(), 3u);
}

TEST_F(ControllerTest, SyntaxErrorThenPassHandTrace) {
    script({fenced("syntax_error.py"), fenced("full_pass.py")});
    auto controller = make();
    auto const r = controller.run_task(task(), Condition::Mera, dir_ / "run");
    ASSERT_TRUE(r.accepted);
    ASSERT_EQ(r.attempts, 2);
    ASSERT_EQ(r.attempt_log.size(), 2u);
    EXPECT_EQ(r.attempt_log[0].at("primary_failure"), "SYNTAX");

    // Rewards recomputed from the logged inputs with the default weights.
    std::vector<double> rewards;
    for (auto const& entry : r.attempt_log) {
        double const d = entry.at("duration").get<double>();
        bool const acc = entry.at("accepted").get<bool>();
        int const t = entry.at("attempt").get<int>() - 1;
        int const p = entry.at("passed_count").get<int>();
        double const want = (acc ? 1.0 : 0.1 * p) - 0.05 * t - 0.1 * std::min(1.0, d / 120.0);
        EXPECT_NEAR(entry.at("reward").get<double>(), want, 1e-12);
        rewards.push_back(entry.at("reward").get<double>());
    }

    auto const ref = testing::credit_reference(CreditConfig{}, rewards);
    ASSERT_EQ(r.dispatch.size(), 3u);
    ASSERT_EQ(ref.size(), 3u);
    for (std::size_t k = 0; k < ref.size(); ++k) {
        EXPECT_EQ(r.dispatch[k].source, ref[k].source);
        EXPECT_EQ(r.dispatch[k].target, ref[k].target);
        EXPECT_EQ(r.dispatch[k].weight, ref[k].weight);
        EXPECT_EQ(r.dispatch[k].signal, ref[k].signal);
    }
    EXPECT_NEAR(r.dispatch[1].eligibility, 0.72, 1e-15);
    auto const trace = testing::read_file(dir_ / "run" / "trace.jsonl");
    EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 3);
}

TEST_F(ControllerTest, ClientErrorEndsRunWithoutCredit) {
    script({fenced("syntax_error.py"), "!error connection refused"});
    auto controller = make();
    auto const r = controller.run_task(task(), Condition::Mera, dir_ / "run");
    EXPECT_FALSE(r.accepted);
    EXPECT_TRUE(r.client_error);
    EXPECT_EQ(r.attempts, 2);
    EXPECT_TRUE(r.dispatch.empty());
    EXPECT_NE(r.error_message.find("connection refused"), std::string::npos);
    EXPECT_TRUE(r.attempt_log.back().at("client_error").get<bool>());
}

TEST_F(ControllerTest, RefinePersistsNothing) {
    script({fenced("syntax_error.py"), fenced("full_pass.py")});
    auto controller = make();
    auto const r = controller.run_task(task(), Condition::RefineB1, dir_ / "run");
    EXPECT_TRUE(r.accepted);
    EXPECT_EQ(controller.episodes().size(), 0u);
    EXPECT_EQ(controller.skills().size(), 0u);
    EXPECT_TRUE(r.dispatch.empty());
    for (auto a : kAllRetrievalActions) {
        EXPECT_EQ(controller.bandit().arm(a).pulls(), 0);
    }
    for (auto const& entry : r.attempt_log) {
        EXPECT_EQ(entry.at("retrieval_action"), "NONE");
    }
    EXPECT_FALSE(std::filesystem::exists(dir_ / "store" / "arms.json"));
}

class VetoJudge final : public Judge {
  public:
    auto judge(TaskSpec const&, std::string const&, ValidationReport const&) -> JudgeVerdict override {
        ++calls;
        return JudgeVerdict::HighConfidenceFail;
    }
    int calls{0};
};

TEST_F(ControllerTest, JudgeVetoBlocksAcceptance) {
    script({fenced("full_pass.py"), fenced("syntax_error.py"), fenced("full_pass.py")});
    auto judge = std::make_shared<VetoJudge>();
    auto controller = make(judge);
    auto const r = controller.run_task(task(), Condition::Mera, dir_ / "run");
    EXPECT_FALSE(r.accepted);
    EXPECT_EQ(r.attempts, 3);
    EXPECT_EQ(judge->calls, 2);  // never consulted for the failing candidate
    EXPECT_EQ(r.attempt_log[1].at("judge"), "SKIPPED");
}

TEST_F(ControllerTest, StateReloadsFromStoreRoot) {
    script({fenced("syntax_error.py"), fenced("full_pass.py")});
    std::int64_t pulls = 0;
    {
        auto controller = make();
        (void)controller.run_task(task(), Condition::Mera, dir_ / "run1");
        EXPECT_EQ(controller.episodes().size(), 2u);
        for (auto a : kAllRetrievalActions) {
            pulls += controller.bandit().arm(a).pulls();
        }
    }
    auto reopened = make();
    EXPECT_EQ(reopened.episodes().size(), 2u);
    EXPECT_EQ(reopened.skills().size(), 1u);
    std::int64_t reloaded = 0;
    for (auto a : kAllRetrievalActions) {
        reloaded += reopened.bandit().arm(a).pulls();
    }
    EXPECT_EQ(reloaded, pulls);
}

}  // namespace
}  // namespace mera
