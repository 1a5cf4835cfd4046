#include "mera/decoding.hpp"

#include <algorithm>
#include <cmath>

#include "mera/error.hpp"

namespace mera {

using nlohmann::json;

DecodingProfileBandit::DecodingProfileBandit(std::uint64_t seed,
                                             std::vector<DecodingProfile> profiles)
    : profiles_{std::move(profiles)},
      successes_(profiles_.size(), 0.0),
      failures_(profiles_.size(), 0.0),
      rng_{seed} {
    if (profiles_.empty()) {
        throw Error{ErrorCode::InvalidConfig, "decoding bandit needs at least one profile"};
    }
}

auto DecodingProfileBandit::default_profiles() -> std::vector<DecodingProfile> {
    return {{"conservative", 0.2, 0.9}, {"balanced", 0.7, 0.9}, {"exploratory", 1.0, 0.95}};
}

auto DecodingProfileBandit::sample_beta(double a, double b) -> double {
    std::gamma_distribution<double> ga{a, 1.0};
    std::gamma_distribution<double> gb{b, 1.0};
    double const x = ga(rng_);
    double const y = gb(rng_);
    return x + y > 0.0 ? x / (x + y) : 0.5;
}

auto DecodingProfileBandit::select() -> DecodingProfile const& {
    std::size_t best = 0;
    double best_draw = -1.0;
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
        double const draw = sample_beta(successes_[i] + 1.0, failures_[i] + 1.0);
        if (draw > best_draw) {
            best = i;
            best_draw = draw;
        }
    }
    return profiles_[best];
}

auto DecodingProfileBandit::index_of(std::string const& profile) const -> std::size_t {
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
        if (profiles_[i].name == profile) {
            return i;
        }
    }
    throw Error{ErrorCode::InvalidConfig, "unknown decoding profile " + profile};
}

void DecodingProfileBandit::update(std::string const& profile, double pseudo_success,
                                   double weight) {
    if (weight < 0.0 || std::isnan(weight)) {
        throw Error{ErrorCode::NegativeWeight, "decoding update weight must be >= 0"};
    }
    if (!(pseudo_success >= 0.0 && pseudo_success <= 1.0)) {
        throw Error{ErrorCode::OutOfRange, "pseudo-success must lie in [0, 1]"};
    }
    auto const i = index_of(profile);
    successes_[i] += weight * pseudo_success;
    failures_[i] += weight * (1.0 - pseudo_success);
}

auto DecodingProfileBandit::successes(std::string const& profile) const -> double {
    return successes_[index_of(profile)];
}

auto DecodingProfileBandit::failures(std::string const& profile) const -> double {
    return failures_[index_of(profile)];
}

auto DecodingProfileBandit::to_json() const -> json {
    json out = json::array();
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
        out.push_back({{"name", profiles_[i].name},
                       {"temperature", profiles_[i].temperature},
                       {"top_p", profiles_[i].top_p},
                       {"successes", successes_[i]},
                       {"failures", failures_[i]}});
    }
    return json{{"profiles", out}};
}

void DecodingProfileBandit::load_json(json const& j) {
    for (auto const& p : j.at("profiles")) {
        auto const i = index_of(p.at("name").get<std::string>());
        successes_[i] = p.at("successes").get<double>();
        failures_[i] = p.at("failures").get<double>();
    }
}

}  // namespace mera
