#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "mera/credit.hpp"
#include "mera/fingerprint.hpp"
#include "mera/linucb.hpp"
#include "mera/skills.hpp"

namespace {

auto random_phi(std::mt19937_64& rng) -> mera::FeatureVector {
    std::uniform_real_distribution<double> u{-1.0, 1.0};
    mera::FeatureVector phi;
    for (int i = 0; i < mera::kFeatureDim; ++i) {
        phi[i] = u(rng);
    }
    return phi;
}

void BM_LinUcbUpdate(benchmark::State& state) {
    std::mt19937_64 rng{1};
    mera::LinUcbArm arm;
    auto const phi = random_phi(rng);
    for (auto _ : state) {
        arm.update(phi, 0.5, 0.3);
        benchmark::DoNotOptimize(arm.A_inverse().data());
    }
}
BENCHMARK(BM_LinUcbUpdate);

void BM_LinUcbSelect(benchmark::State& state) {
    std::mt19937_64 rng{2};
    mera::LinUcbBandit bandit;
    for (int i = 0; i < 64; ++i) {
        bandit.update(static_cast<mera::RetrievalAction>(i % mera::kRetrievalActionCount),
                      random_phi(rng), 0.2, 1.0);
    }
    auto const phi = random_phi(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(bandit.select(phi));
    }
}
BENCHMARK(BM_LinUcbSelect);

void BM_DelayedCredit(benchmark::State& state) {
    std::vector<mera::TraceStep> steps(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < steps.size(); ++i) {
        steps[i].step_index = static_cast<int>(i);
        steps[i].reward = i + 1 == steps.size() ? 1.0 : -0.15;
    }
    mera::CreditConfig const cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mera::dispatch_delayed_credit(cfg, steps));
    }
}
BENCHMARK(BM_DelayedCredit)->Arg(3)->Arg(10)->Arg(50);

auto make_fingerprint(std::mt19937_64& rng, std::size_t n) -> mera::Fingerprint {
    static std::vector<std::string> const words = {"q", "=", "(", ")", "for", "in", "range",
                                                   "s", "a", "return", "np", "max"};
    std::uniform_int_distribution<std::size_t> pick{0, words.size() - 1};
    mera::Fingerprint f;
    f.task_family = "rl";
    for (std::size_t i = 0; i < n; ++i) {
        f.trigrams.push_back({words[pick(rng)], words[pick(rng)], words[pick(rng)]});
    }
    f.failure_signature = {mera::FailureClass::Runtime, "IndexError"};
    return f;
}

void BM_Similarity(benchmark::State& state) {
    std::mt19937_64 rng{3};
    auto const a = make_fingerprint(rng, static_cast<std::size_t>(state.range(0)));
    auto const b = make_fingerprint(rng, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mera::similarity(a, b));
    }
}
BENCHMARK(BM_Similarity)->Arg(32)->Arg(256);

void BM_SkillHash(benchmark::State& state) {
    std::string const dump(static_cast<std::size_t>(state.range(0)), 'x');
    for (auto _ : state) {
        benchmark::DoNotOptimize(mera::skill_hash(dump));
    }
}
BENCHMARK(BM_SkillHash)->Arg(256)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
