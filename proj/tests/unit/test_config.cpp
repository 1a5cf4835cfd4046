#include <gtest/gtest.h>

#include "mera/config.hpp"
#include "mera/error.hpp"
#include "test_support.hpp"

namespace mera {
namespace {

using nlohmann::json;

TEST(Config, EmptyDocumentGivesDefaults) {
    auto const c = ControllerConfig::from_json(json::object());
    EXPECT_DOUBLE_EQ(c.reward.success_bonus, 1.0);
    EXPECT_DOUBLE_EQ(c.credit.gamma, 0.9);
    EXPECT_DOUBLE_EQ(c.linucb.exploration, kDefaultExploration);
    EXPECT_EQ(c.retention_cap, kDefaultRetentionCap);
    EXPECT_FALSE(c.decoding_bandit);
}

TEST(Config, PartialBlocksOverride) {
    auto const c = ControllerConfig::from_json(
        json{{"credit", {{"w_max", 0.25}}}, {"grace", {{"top_k", 3}}}, {"retention_cap", 100}});
    EXPECT_DOUBLE_EQ(c.credit.w_max, 0.25);
    EXPECT_DOUBLE_EQ(c.credit.gamma, 0.9);
    EXPECT_EQ(c.grace.top_k, 3u);
    EXPECT_EQ(c.retention_cap, 100u);
}

TEST(Config, UnknownKeysAreRejected) {
    EXPECT_THROW((void)ControllerConfig::from_json(json{{"rewrd", json::object()}}), Error);
    EXPECT_THROW((void)ControllerConfig::from_json(json{{"credit", {{"lambda", 0.5}}}}), Error);
}

TEST(Config, BadValuesAreRejected) {
    EXPECT_THROW((void)ControllerConfig::from_json(json{{"credit", {{"gamma", "high"}}}}), Error);
    EXPECT_THROW((void)ControllerConfig::from_json(json{{"credit", {{"gamma", 2.0}}}}), Error);
    EXPECT_THROW((void)ControllerConfig::from_json(json{{"linucb", {{"ridge", 0.0}}}}), Error);
    EXPECT_THROW((void)ControllerConfig::from_json(json{{"reward", 3}}), Error);
}

TEST(Config, JsonRoundTrip) {
    auto c = ControllerConfig::from_json(json{{"reward", {{"latency_horizon", 60.0}}},
                                              {"similarity", {{"tok", 0.5}}},
                                              {"decoding_bandit", true},
                                              {"decoding_seed", 9}});
    auto const again = ControllerConfig::from_json(c.to_json());
    EXPECT_EQ(again.to_json(), c.to_json());
    EXPECT_DOUBLE_EQ(again.reward.latency_horizon, 60.0);
    EXPECT_TRUE(again.decoding_bandit);
}

TEST(Config, LoadFromFile) {
    testing::TempDir dir{"cfg"};
    testing::write_file(dir / "c.json", R"({"validator": {"command_timeout": 12.5}})");
    EXPECT_DOUBLE_EQ(ControllerConfig::load(dir / "c.json").validator.command_timeout, 12.5);
    testing::write_file(dir / "bad.json", "{");
    EXPECT_THROW((void)ControllerConfig::load(dir / "bad.json"), Error);
    EXPECT_THROW((void)ControllerConfig::load(dir / "missing.json"), Error);
}

}  // namespace
}  // namespace mera
