#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/analyzer.hpp"
#include "mera/types.hpp"

namespace mera {

inline constexpr std::size_t kHintTextLimit = 400;

struct GraceConfig {
    int delta_progress{1};    // Delta_p, checks
    int delta_score{5};       // Delta_v, points
    double rho{0.5};
    std::size_t top_k{2};
    bool bootstrap_enabled{true};
    int hint_ttl{1};

    void validate() const;
};

struct RepairOperator {
    std::string id;
    FailureClass from_failure{FailureClass::Unknown};
    FailureClass to_failure{FailureClass::Unknown};
    std::map<std::string, int> added_kinds;
    std::map<std::string, int> removed_kinds;
    std::string hint_text;
    int progress_gain{0};
    std::int64_t n_offered{0};
    std::int64_t n_succ_offered{0};
    std::int64_t created_ms{0};

    [[nodiscard]] auto success_ratio() const -> double;
    auto operator==(RepairOperator const&) const -> bool = default;
};

void to_json(nlohmann::json& j, RepairOperator const& op);
void from_json(nlohmann::json const& j, RepairOperator& op);

struct GapHint {
    std::string text;
    int source_attempt{0};
    int ttl{1};
};

/// K_t = A_t or (dp >= Delta_p and v >= v_prev) or (dv >= Delta_v and p >= p_prev).
[[nodiscard]] auto consolidation_gate(GraceConfig const& cfg, bool accepted, int passed,
                                      int passed_prev, int score, int score_prev) -> bool;

/// Builds an operator from the before/after AST difference. Returns an
/// operator with empty multisets for identical sources; callers discard
/// those. Throws Error{ParseFailure} when either source cannot be parsed.
[[nodiscard]] auto derive_operator(std::string const& prev_source,
                                   std::string const& curr_source, FailureClass prev_failure,
                                   FailureClass curr_failure, int progress_gain,
                                   Analyzer& analyzer, std::int64_t now_ms) -> RepairOperator;

/// With offers: success ratio >= rho. Without offers: the bootstrap rule
/// (enabled, source failure matches, derived from a progress gain >= Delta_p).
[[nodiscard]] auto operator_eligibility(GraceConfig const& cfg, RepairOperator const& op,
                                        FailureClass current_failure) -> bool;

/// Intent-execution gap: identifiers the response prose promises (backticked
/// names or `name(` calls outside code fences) that the code never defines.
[[nodiscard]] auto derive_gap_hints(std::string const& response, std::string const& code,
                                    int attempt, int ttl) -> std::vector<GapHint>;

struct GuidanceBlock {
    std::string text;
    std::string operator_id;  // empty for gap hints
};

/// Persistent operator store plus the ephemeral hint set of one task.
class OperatorStore {
  public:
    /// Stores the operator unless its diff is empty or its id already exists.
    /// Returns true when stored.
    auto add(RepairOperator op) -> bool;

    /// TopK eligible operators whose source failure equals
    /// `previous_failure`, by success ratio then recency; increments their
    /// offer counters. Live hints follow. Blocks are untrusted evidence.
    auto compose_guidance(GraceConfig const& cfg, FailureClass previous_failure,
                          std::vector<GapHint> const& hints) -> std::vector<GuidanceBlock>;

    /// Credits accepted attempts to the operators that were offered.
    void record_outcome(std::vector<std::string> const& offered_ids, bool accepted);

    [[nodiscard]] auto operators() const -> std::vector<RepairOperator> const& { return ops_; }
    [[nodiscard]] auto find(std::string const& id) const -> RepairOperator const*;

    void save(std::filesystem::path const& file) const;
    void load(std::filesystem::path const& file);

  private:
    std::vector<RepairOperator> ops_;
};

/// Drops expired hints after an attempt and decrements the rest.
void age_hints(std::vector<GapHint>& hints);

}  // namespace mera
