#include "mera/credit.hpp"

#include <algorithm>
#include <cmath>

#include "mera/error.hpp"

namespace mera {

using nlohmann::json;

void CreditConfig::validate() const {
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in_unit(gamma) || !in_unit(lambda_td)) {
        throw Error{ErrorCode::InvalidConfig, "gamma and lambda must lie in [0, 1]"};
    }
    if (!(alpha_td >= 0.0) || !(clip_bound >= 0.0) || !(w_max >= 0.0) ||
        !(eligibility_floor >= 0.0)) {
        throw Error{ErrorCode::InvalidConfig, "credit parameters must be >= 0"};
    }
}

void to_json(json& j, DispatchRecord const& r) {
    j = json{{"source", r.source},         {"target", r.target}, {"delta", r.delta},
             {"eligibility", r.eligibility}, {"weight", r.weight}, {"signal", r.signal}};
}

void from_json(json const& j, DispatchRecord& r) {
    r.source = j.at("source").get<int>();
    r.target = j.at("target").get<int>();
    r.delta = j.at("delta").get<double>();
    r.eligibility = j.at("eligibility").get<double>();
    r.weight = j.at("weight").get<double>();
    r.signal = j.at("signal").get<double>();
}

auto td_delta(CreditConfig const& cfg, double reward) -> double {
    return std::clamp(reward, -cfg.clip_bound, cfg.clip_bound);
}

auto dispatch_delayed_credit(CreditConfig const& cfg, std::vector<TraceStep> const& trajectory,
                             CreditSinks const& sinks) -> std::vector<DispatchRecord> {
    cfg.validate();
    std::vector<DispatchRecord> out;
    std::vector<double> eligibility(trajectory.size(), 0.0);
    double const decay = cfg.gamma * cfg.lambda_td;
    for (std::size_t j = 0; j < trajectory.size(); ++j) {
        double const delta = td_delta(cfg, trajectory[j].reward);
        for (std::size_t i = 0; i <= j; ++i) {
            eligibility[i] *= decay;
        }
        eligibility[j] += 1.0;
        for (std::size_t i = 0; i <= j; ++i) {
            if (eligibility[i] < cfg.eligibility_floor) {
                continue;
            }
            double const w = std::min(cfg.w_max, cfg.alpha_td * eligibility[i]);
            auto const& step = trajectory[i];
            out.push_back({step.step_index, trajectory[j].step_index, delta, eligibility[i], w,
                           w * delta});
            if (step.attributable_retrieval && sinks.retrieval) {
                sinks.retrieval(step, delta, w);
            }
            if (step.decoding_action && sinks.decoding) {
                sinks.decoding(step, delta, w);
            }
        }
    }
    return out;
}

}  // namespace mera
