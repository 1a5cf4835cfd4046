#include "mera/reward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mera/error.hpp"

namespace mera {

void RewardConfig::validate() const {
    for (double w : {success_bonus, progress_weight, attempt_penalty, extraction_penalty,
                     behavior_penalty, latency_weight}) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw Error{ErrorCode::InvalidConfig, "reward weights must be finite and >= 0"};
        }
    }
    if (!(latency_horizon > 0.0) || !std::isfinite(latency_horizon)) {
        throw Error{ErrorCode::InvalidConfig, "latency horizon must be > 0"};
    }
}

auto raw_reward(RewardConfig const& cfg, RewardInputs const& in) -> double {
    double const a = in.accepted ? 1.0 : 0.0;
    double const latency = std::min(1.0, std::max(0.0, in.duration) / cfg.latency_horizon);
    return cfg.success_bonus * a + (1.0 - a) * cfg.progress_weight * in.passed_count -
           cfg.attempt_penalty * in.attempt_index -
           cfg.extraction_penalty * (in.extraction_failed ? 1.0 : 0.0) -
           cfg.behavior_penalty * (in.behavior_failed ? 1.0 : 0.0) -
           cfg.latency_weight * latency;
}

auto shaped_reward(RewardConfig const& cfg, RewardInputs const& in) -> double {
    return std::clamp(raw_reward(cfg, in), -1.0, 1.0);
}

auto pseudo_success(double reward) -> double {
    if (!(std::abs(reward) <= 1.0)) {
        throw Error{ErrorCode::OutOfRange, "reward " + std::to_string(reward) + " outside [-1, 1]"};
    }
    return (reward + 1.0) / 2.0;
}

}  // namespace mera
