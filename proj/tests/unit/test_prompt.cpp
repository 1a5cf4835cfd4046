#include <gtest/gtest.h>

#include "mera/prompt.hpp"

namespace mera {
namespace {

TEST(ExtractCode, TaggedBlock) {
    auto const code = extract_code("Here:\n```python\ndef f():\n    return 1\n```\nDone.");
    ASSERT_TRUE(code.has_value());
    EXPECT_EQ(*code, "def f():\n    return 1\n");
}

TEST(ExtractCode, ProseOnlyIsNone) {
    EXPECT_FALSE(extract_code("I would write a function that returns one.").has_value());
    EXPECT_FALSE(extract_code("").has_value());
}

TEST(ExtractCode, TaggedBeatsLongerUntagged) {
    std::string response = "```\nx = 1\ny = 2\nz = 3\n```\n\n```python\n";
    for (int i = 0; i < 10; ++i) {
        response += "v" + std::to_string(i) + " = " + std::to_string(i) + "\n";
    }
    response += "```\n";
    auto const code = extract_code(response);
    ASSERT_TRUE(code.has_value());
    EXPECT_TRUE(code->starts_with("v0 = 0\n"));
    EXPECT_EQ(std::count(code->begin(), code->end(), '\n'), 10);
}

TEST(ExtractCode, LongestUntaggedWhenNoTag) {
    auto const code = extract_code("```\na = 1\n```\ntext\n```\nb = 1\nc = 2\n```\n");
    ASSERT_TRUE(code.has_value());
    EXPECT_EQ(*code, "b = 1\nc = 2\n");
}

TEST(ExtractCode, OtherLanguagesAreIgnored) {
    EXPECT_FALSE(extract_code("```bash\nls\n```\n").has_value());
    EXPECT_EQ(extract_code("```Python3\nx = 1\n```\n"), std::nullopt);
    EXPECT_EQ(extract_code("```PYTHON\nx = 1\n```\n"), "x = 1\n");
}

TEST(ExtractCode, EmptyTaggedBlockFallsThrough) {
    EXPECT_EQ(extract_code("```python\n\n```\n```\nx = 1\n```\n"), "x = 1\n");
}

TEST(ExtractCode, UnterminatedFenceRunsToEnd) {
    EXPECT_EQ(extract_code("```python\nx = 1\ny = 2"), "x = 1\ny = 2\n");
}

TEST(Prose, FencesRemoved) {
    EXPECT_EQ(prose_outside_fences("before\n```python\ncode\n```\nafter"), "before\nafter\n");
}

TEST(UnifiedDiff, MatchesGnuDiff) {
    // Expected text produced by `diff -U3 --label previous --label current`.
    std::string const before = "a\nb\nc\nd\ne\nf\ng\nh\ni\nj\nk\n";
    std::string const after = "a\nB\nc\nd\ne\nf\ng\nh\ni\nJ\nk\nl\n";
    EXPECT_EQ(unified_diff(before, after),
              "--- previous\n+++ current\n"
              "@@ -1,5 +1,5 @@\n a\n-b\n+B\n c\n d\n e\n"
              "@@ -7,5 +7,6 @@\n g\n h\n i\n-j\n+J\n k\n+l\n");
}

TEST(UnifiedDiff, IdenticalIsEmpty) {
    EXPECT_EQ(unified_diff("x\ny\n", "x\ny\n"), "");
}

TEST(UnifiedDiff, FromEmpty) {
    EXPECT_EQ(unified_diff("", "x\n", "a", "b"), "--- a\n+++ b\n@@ -0,0 +1 @@\n+x\n");
}

TEST(History, OldestDroppedFirst) {
    History h{2, 10};
    h.append("first");
    h.append("second");
    h.append("third block that is long");
    ASSERT_EQ(h.blocks().size(), 2u);
    EXPECT_EQ(h.blocks()[0], "second");
    EXPECT_EQ(h.blocks()[1], "third bloc");
}

auto full_inputs() -> PromptInputs {
    PromptInputs in;
    in.request = "Implement value iteration.";
    in.current_file = "def value_iteration():\n    pass\n";
    in.previous_report = "RUNTIME FAILED: IndexError";
    in.episodes = {{"record 3 (RUNTIME)", "x = ```python\n"}};
    in.skills = {{"clamp", "def clamp(x, lo, hi):\n    return x\n"}};
    in.guidance = {{"op-1", "when RUNTIME, adding Try"}};
    in.diff = "--- previous\n+++ current\n";
    in.history = {"older feedback"};
    return in;
}

TEST(ComposePrompt, Deterministic) {
    EXPECT_EQ(compose_prompt(full_inputs()), compose_prompt(full_inputs()));
}

TEST(ComposePrompt, NoRetrievalMeansNoUntrustedSections) {
    PromptInputs in;
    in.request = "Implement value iteration.";
    in.previous_report = "SYNTAX FAILED";
    auto const prompt = compose_prompt(in);
    for (auto marker : {kUntrustedEpisode, kUntrustedSkill, kUntrustedGuidance, kUntrustedDiff}) {
        EXPECT_EQ(prompt.find(marker), std::string::npos) << marker;
    }
    EXPECT_NE(prompt.find("Implement value iteration."), std::string::npos);
}

TEST(ComposePrompt, SectionOrderAndDefusedFences) {
    auto const prompt = compose_prompt(full_inputs());
    auto const task = prompt.find("## Task");
    auto const current = prompt.find("## Current");
    auto const report = prompt.find("## Validation report");
    auto const episode = prompt.find(kUntrustedEpisode);
    auto const skill = prompt.find(kUntrustedSkill);
    auto const guidance = prompt.find(kUntrustedGuidance);
    auto const diff = prompt.find(kUntrustedDiff);
    auto const history = prompt.find("## Earlier feedback");
    auto const output = prompt.find("## Output");
    EXPECT_LT(task, current);
    EXPECT_LT(current, report);
    EXPECT_LT(report, episode);
    EXPECT_LT(episode, skill);
    EXPECT_LT(skill, guidance);
    EXPECT_LT(guidance, diff);
    EXPECT_LT(diff, history);
    EXPECT_LT(history, output);
    EXPECT_NE(prompt.find("x = '''python"), std::string::npos);
}

TEST(ComposePrompt, OverBudgetHistoryKeepsNewestSuffix) {
    History h{2, 2000};
    for (int i = 1; i <= 5; ++i) {
        h.append("feedback " + std::to_string(i));
    }
    PromptInputs in;
    in.request = "r";
    in.history.assign(h.blocks().begin(), h.blocks().end());
    auto const prompt = compose_prompt(in);
    EXPECT_EQ(prompt.find("feedback 3"), std::string::npos);
    auto const four = prompt.find("feedback 4");
    auto const five = prompt.find("feedback 5");
    ASSERT_NE(four, std::string::npos);
    ASSERT_NE(five, std::string::npos);
    EXPECT_LT(four, five);
}

}  // namespace
}  // namespace mera
