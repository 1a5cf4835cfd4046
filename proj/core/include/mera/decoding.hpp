#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/generator.hpp"

namespace mera {

/// Optional Thompson-sampling bandit over a fixed set of decoding presets.
/// Each profile keeps a Beta(successes + 1, failures + 1) posterior fed by
/// pseudo-success values, possibly fractional.
class DecodingProfileBandit {
  public:
    explicit DecodingProfileBandit(std::uint64_t seed = 0,
                                   std::vector<DecodingProfile> profiles = default_profiles());

    [[nodiscard]] static auto default_profiles() -> std::vector<DecodingProfile>;

    [[nodiscard]] auto select() -> DecodingProfile const&;
    /// successes += w*r, failures += w*(1-r), with r in [0, 1] and w >= 0.
    void update(std::string const& profile, double pseudo_success, double weight = 1.0);

    [[nodiscard]] auto profiles() const -> std::vector<DecodingProfile> const& { return profiles_; }
    [[nodiscard]] auto successes(std::string const& profile) const -> double;
    [[nodiscard]] auto failures(std::string const& profile) const -> double;

    [[nodiscard]] auto to_json() const -> nlohmann::json;
    void load_json(nlohmann::json const& j);

  private:
    auto index_of(std::string const& profile) const -> std::size_t;
    auto sample_beta(double a, double b) -> double;

    std::vector<DecodingProfile> profiles_;
    std::vector<double> successes_;
    std::vector<double> failures_;
    std::mt19937_64 rng_;
};

}  // namespace mera
