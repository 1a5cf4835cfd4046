#pragma once

// Reference implementations used as test oracles. They are written
// independently of the library code and favor obviousness over speed.

#include <cstddef>
#include <vector>

#include "mera/credit.hpp"
#include "mera/episode_store.hpp"
#include "mera/fingerprint.hpp"

namespace mera::testing {

struct Interval {
    double lo;
    double hi;
};

/// Wilson interval in 50-digit arithmetic with the exact normal quantile.
[[nodiscard]] auto wilson_oracle(long s, long n, double confidence = 0.95) -> Interval;

struct CreditRef {
    int source;
    int target;
    double eligibility;
    double weight;
    double signal;
};

/// Eligibility table E[j][i] filled row by row, then weights and signals.
[[nodiscard]] auto credit_reference(CreditConfig const& cfg, std::vector<double> const& rewards)
    -> std::vector<CreditRef>;

/// Fingerprint similarity evaluated straight from the component definitions.
[[nodiscard]] auto similarity_oracle(Fingerprint const& a, Fingerprint const& b,
                                     SimilarityWeights const& w) -> double;

/// Exhaustive ranking: score all candidates, sort by (score desc,
/// timestamp desc, id desc), keep k.
[[nodiscard]] auto rank_oracle(std::vector<EpisodeRecord> const& records, Fingerprint const& query,
                               RetrievalMode mode, std::size_t k, SimilarityWeights w)
    -> std::vector<std::int64_t>;

}  // namespace mera::testing
