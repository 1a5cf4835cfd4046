#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/linucb.hpp"

namespace mera {

struct TraceStep {
    int step_index{0};
    FeatureVector features{FeatureVector::Zero()};
    RetrievalAction retrieval_action{RetrievalAction::None};
    std::optional<std::string> decoding_action;
    double reward{0.0};
    bool attributable_retrieval{false};
};

struct CreditConfig {
    double gamma{0.9};
    double lambda_td{0.8};
    double alpha_td{0.5};
    double clip_bound{1.0};  // Delta
    double w_max{0.5};
    double eligibility_floor{1e-3};

    void validate() const;
};

struct DispatchRecord {
    int source{0};
    int target{0};
    double delta{0.0};
    double eligibility{0.0};
    double weight{0.0};
    double signal{0.0};

    auto operator==(DispatchRecord const&) const -> bool = default;
};

void to_json(nlohmann::json& j, DispatchRecord const& r);
void from_json(nlohmann::json const& j, DispatchRecord& r);

/// Side-learner callbacks. Each receives the source step, the clipped delta
/// and the eligibility weight.
struct CreditSinks {
    std::function<void(TraceStep const&, double delta, double weight)> retrieval;
    std::function<void(TraceStep const&, double delta, double weight)> decoding;
};

/// clip_[-Delta, Delta](r); the value estimate is fixed at zero.
[[nodiscard]] auto td_delta(CreditConfig const& cfg, double reward) -> double;

/// Eligibility-trace dispatch over a finished trajectory. For each target
/// j: decay E_i (i <= j) by gamma*lambda, add 1 to E_j, then emit
/// w = min(w_max, alpha*E_i) and signal w*delta_j for every i whose
/// eligibility is at least the floor. Sinks run in (j, i) order.
[[nodiscard]] auto dispatch_delayed_credit(CreditConfig const& cfg,
                                           std::vector<TraceStep> const& trajectory,
                                           CreditSinks const& sinks = {})
    -> std::vector<DispatchRecord>;

}  // namespace mera
