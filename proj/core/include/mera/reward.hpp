#pragma once

namespace mera {

struct RewardConfig {
    double success_bonus{1.0};       // R_succ
    double progress_weight{0.1};     // beta, per passed check
    double attempt_penalty{0.05};    // eta, per zero-based attempt index
    double extraction_penalty{0.3};  // kappa
    double behavior_penalty{0.2};    // mu
    double latency_weight{0.1};      // xi
    double latency_horizon{120.0};   // D, seconds

    /// Throws Error{InvalidConfig} for negative weights or D <= 0.
    void validate() const;
};

struct RewardInputs {
    bool accepted{false};
    int passed_count{0};
    int attempt_index{0};
    bool extraction_failed{false};
    bool behavior_failed{false};
    double duration{0.0};
};

/// clip_[-1,1](R_succ*A + (1-A)*beta*p - eta*t - kappa*e - mu*b - xi*min(1, d/D)).
[[nodiscard]] auto shaped_reward(RewardConfig const& cfg, RewardInputs const& in) -> double;

/// Unclipped sum, exposed for the monotonicity and clipping tests.
[[nodiscard]] auto raw_reward(RewardConfig const& cfg, RewardInputs const& in) -> double;

/// (r + 1) / 2. Throws Error{OutOfRange} when |r| > 1.
[[nodiscard]] auto pseudo_success(double reward) -> double;

}  // namespace mera
