#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mera/credit.hpp"
#include "mera/error.hpp"
#include "oracles.hpp"

namespace mera {
namespace {

auto trajectory(std::vector<double> const& rewards) -> std::vector<TraceStep> {
    std::vector<TraceStep> steps;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        TraceStep s;
        s.step_index = static_cast<int>(i);
        s.reward = rewards[i];
        steps.push_back(s);
    }
    return steps;
}

TEST(TdDelta, Examples) {
    CreditConfig cfg;
    EXPECT_DOUBLE_EQ(td_delta(cfg, 0.3), 0.3);
    cfg.clip_bound = 0.5;
    EXPECT_DOUBLE_EQ(td_delta(cfg, -1.0), -0.5);
    EXPECT_DOUBLE_EQ(td_delta(cfg, 0.9), 0.5);
    cfg.clip_bound = 0.0;
    for (double r : {-1.0, -0.2, 0.0, 0.4, 1.0}) {
        EXPECT_EQ(td_delta(cfg, r), 0.0);
    }
}

TEST(Dispatch, SingleStep) {
    auto const out = dispatch_delayed_credit({}, trajectory({1.0}));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].source, 0);
    EXPECT_EQ(out[0].target, 0);
    EXPECT_DOUBLE_EQ(out[0].eligibility, 1.0);
    EXPECT_DOUBLE_EQ(out[0].weight, 0.5);
    EXPECT_DOUBLE_EQ(out[0].signal, 0.5);
}

TEST(Dispatch, TwoStepHandTrace) {
    auto const out = dispatch_delayed_credit({}, trajectory({0.0, 1.0}));
    ASSERT_EQ(out.size(), 3u);
    // j = 0: the zero reward still yields a record with zero signal.
    EXPECT_EQ(out[0].target, 0);
    EXPECT_DOUBLE_EQ(out[0].signal, 0.0);
    // j = 1
    EXPECT_EQ(out[1].source, 0);
    EXPECT_EQ(out[1].target, 1);
    EXPECT_NEAR(out[1].eligibility, 0.72, 1e-15);
    EXPECT_NEAR(out[1].weight, 0.36, 1e-15);
    EXPECT_NEAR(out[1].signal, 0.36, 1e-15);
    EXPECT_EQ(out[2].source, 1);
    EXPECT_DOUBLE_EQ(out[2].eligibility, 1.0);
    EXPECT_DOUBLE_EQ(out[2].weight, 0.5);
    EXPECT_DOUBLE_EQ(out[2].signal, 0.5);
}

auto expect_matches_reference(CreditConfig const& cfg, std::vector<double> const& rewards) {
    auto const got = dispatch_delayed_credit(cfg, trajectory(rewards));
    auto const want = testing::credit_reference(cfg, rewards);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
        EXPECT_EQ(got[k].source, want[k].source);
        EXPECT_EQ(got[k].target, want[k].target);
        EXPECT_EQ(got[k].eligibility, want[k].eligibility);
        EXPECT_EQ(got[k].weight, want[k].weight);
        EXPECT_EQ(got[k].signal, want[k].signal);
    }
}

TEST(Dispatch, HandTraceMatchesReferenceExactly) {
    expect_matches_reference({}, {0.0, 1.0});
    expect_matches_reference({}, {-0.35, -0.2, 1.0});
}

TEST(Dispatch, EligibilityFollowsClosedForm) {
    CreditConfig cfg;
    cfg.eligibility_floor = 0.0;
    auto const out = dispatch_delayed_credit(cfg, trajectory(std::vector<double>(6, 0.1)));
    double const decay = cfg.gamma * cfg.lambda_td;
    for (auto const& r : out) {
        EXPECT_NEAR(r.eligibility, std::pow(decay, r.target - r.source), 1e-12);
    }
}

TEST(Dispatch, FloorDropsStaleSources) {
    CreditConfig cfg;
    cfg.eligibility_floor = 0.5;
    // 0.72 passes the floor, 0.72^2 = 0.5184 passes, 0.72^3 does not.
    auto const out = dispatch_delayed_credit(cfg, trajectory({0, 0, 0, 1}));
    for (auto const& r : out) {
        EXPECT_GE(r.eligibility, 0.5);
        if (r.target == 3) {
            EXPECT_GE(r.source, 1);
        }
    }
}

TEST(Dispatch, SinksSeeOnlyAttributableSteps) {
    auto steps = trajectory({-0.3, 0.2, 1.0});
    steps[0].attributable_retrieval = true;
    steps[2].attributable_retrieval = true;
    steps[1].decoding_action = "exploratory";
    std::vector<std::pair<int, double>> retrieval;
    std::vector<int> decoding;
    CreditSinks sinks;
    sinks.retrieval = [&](TraceStep const& s, double delta, double w) {
        retrieval.emplace_back(s.step_index, w * delta);
    };
    sinks.decoding = [&](TraceStep const& s, double, double) { decoding.push_back(s.step_index); };
    auto const out = dispatch_delayed_credit({}, steps, sinks);
    EXPECT_EQ(out.size(), 6u);
    ASSERT_EQ(retrieval.size(), 4u);  // source 0 at j=0,1,2; source 2 at j=2
    EXPECT_EQ(retrieval[0].first, 0);
    EXPECT_EQ(retrieval[3].first, 2);
    EXPECT_EQ(decoding, (std::vector<int>{1, 1}));
}

TEST(Dispatch, EmptyTrajectory) {
    EXPECT_TRUE(dispatch_delayed_credit({}, {}).empty());
}

TEST(Dispatch, InvalidConfig) {
    CreditConfig cfg;
    cfg.gamma = 1.5;
    EXPECT_THROW((void)dispatch_delayed_credit(cfg, trajectory({1.0})), Error);
    cfg = {};
    cfg.w_max = -1.0;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(Dispatch, SignalBoundProperty) {
    std::mt19937_64 rng{17};
    std::uniform_real_distribution<double> u{0.0, 1.0};
    std::uniform_real_distribution<double> r{-3.0, 3.0};
    std::uniform_int_distribution<int> len{1, 12};
    for (int trial = 0; trial < 500; ++trial) {
        CreditConfig cfg{u(rng), u(rng), 2.0 * u(rng), 2.0 * u(rng), u(rng), 0.01 * u(rng)};
        std::vector<double> rewards(static_cast<std::size_t>(len(rng)));
        for (auto& x : rewards) {
            x = r(rng);
        }
        for (auto const& rec : dispatch_delayed_credit(cfg, trajectory(rewards))) {
            ASSERT_LE(std::abs(rec.signal), cfg.w_max * cfg.clip_bound + 1e-15);
            ASSERT_LE(rec.weight, cfg.w_max);
        }
        expect_matches_reference(cfg, rewards);
    }
}

TEST(DispatchRecord, JsonRoundTrip) {
    DispatchRecord const r{0, 1, 1.0, 0.72, 0.36, 0.36};
    nlohmann::json const j = r;
    EXPECT_EQ(j.get<DispatchRecord>(), r);
}

}  // namespace
}  // namespace mera
