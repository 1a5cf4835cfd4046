#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/analyzer.hpp"
#include "mera/types.hpp"

namespace mera {

struct TaskSpec;
struct ValidationReport;

inline constexpr std::size_t kDefaultTrigramCap = 256;

using Trigram = std::array<std::string, 3>;

enum class ComplexityBucket { Low, Med, High };

[[nodiscard]] auto to_string(ComplexityBucket b) -> std::string_view;

struct FailureSignature {
    FailureClass failure{FailureClass::Unknown};
    std::string key;

    auto operator==(FailureSignature const&) const -> bool = default;
};

/// Deterministic, embedding-free task/code signature.
struct Fingerprint {
    std::string task_family;
    std::vector<Trigram> trigrams;  // deduplicated, first-occurrence order
    AstFeatures ast;
    FailureSignature failure_signature;
    ComplexityBucket complexity{ComplexityBucket::Low};

    auto operator==(Fingerprint const&) const -> bool = default;
};

void to_json(nlohmann::json& j, Fingerprint const& f);
void from_json(nlohmann::json const& j, Fingerprint& f);

struct SimilarityWeights {
    double tok{0.4};
    double ast{0.3};
    double fail{0.2};
    double fam{0.1};

    void validate() const;
};

/// Lowercased word tokens grouped into consecutive triples; duplicates are
/// dropped and the set is truncated to `cap` in first-occurrence order.
[[nodiscard]] auto token_trigrams(std::string const& text,
                                  std::size_t cap = kDefaultTrigramCap) -> std::vector<Trigram>;

/// Keyword-table task-family label; unmatched text maps to "generic".
[[nodiscard]] auto task_family_label(std::string const& text) -> std::string;

[[nodiscard]] auto complexity_bucket(int approx_cyclomatic) -> ComplexityBucket;

/// sigma(F): failure class plus the diagnostic key of the failing stage.
[[nodiscard]] auto failure_signature(ValidationReport const* report) -> FailureSignature;

/// zeta = (f(q), g3(q), psi_AST(source), sigma(report), h(q, source)).
/// An absent or empty source yields zeroed features; an absent report an
/// UNKNOWN signature.
[[nodiscard]] auto compute_fingerprint(TaskSpec const& task, std::string const* source,
                                       ValidationReport const* report, Analyzer& analyzer,
                                       std::size_t trigram_cap = kDefaultTrigramCap)
    -> Fingerprint;

/// Component similarities, each in [0, 1].
struct SimilarityParts {
    double tok{0.0};
    double ast{0.0};
    double fail{0.0};
    double fam{0.0};
};

[[nodiscard]] auto similarity_parts(Fingerprint const& a, Fingerprint const& b) -> SimilarityParts;

/// Weighted mean of the component similarities, normalized by the weight sum.
[[nodiscard]] auto combine(SimilarityParts const& parts, SimilarityWeights const& w) -> double;

[[nodiscard]] auto similarity(Fingerprint const& a, Fingerprint const& b,
                              SimilarityWeights const& w = {}) -> double;

/// 0.70*S_struct + 0.15*S_imports + 0.15*S_return.
[[nodiscard]] auto ast_similarity(AstFeatures const& a, AstFeatures const& b) -> double;

}  // namespace mera
