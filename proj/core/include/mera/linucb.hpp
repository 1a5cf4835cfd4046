#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mera/types.hpp"

namespace mera {

inline constexpr int kFeatureDim = 16;

using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;
using FeatureMatrix = Eigen::Matrix<double, kFeatureDim, kFeatureDim>;

enum class RetrievalAction {
    None,
    OneFailureMatch,
    OneAstMatch,
    OneFailureOneAst,
    TwoAstMatch,
    OneSkillOnly,
    OneFailureOneSkill,
    DiffOnly,
};

inline constexpr std::size_t kRetrievalActionCount = 8;

inline constexpr std::array<RetrievalAction, kRetrievalActionCount> kAllRetrievalActions = {
    RetrievalAction::None,         RetrievalAction::OneFailureMatch,
    RetrievalAction::OneAstMatch,  RetrievalAction::OneFailureOneAst,
    RetrievalAction::TwoAstMatch,  RetrievalAction::OneSkillOnly,
    RetrievalAction::OneFailureOneSkill, RetrievalAction::DiffOnly};

[[nodiscard]] auto to_string(RetrievalAction a) -> std::string_view;
[[nodiscard]] auto retrieval_action_from_string(std::string_view text)
    -> std::optional<RetrievalAction>;

/// Feature layout:
///   [0] bias  [1] t/(T-1)  [2] p_prev/6
///   [3..11] previous failure one-hot: UNKNOWN, EXTRACTION, SYNTAX,
///           UNDEFINED_NAME, SPEC_CONTRACT, IMPORT, RUNTIME, TYPE,
///           SEMANTIC or BEHAVIOR
///   [12..14] previous duration bucket: <10 s, 10-60 s, >60 s
///   [15] edit mode (a prior candidate file exists)
struct AttemptContext {
    int attempt_index{0};
    int attempt_budget{1};
    bool has_previous_report{false};
    int previous_passed{0};
    FailureClass previous_failure{FailureClass::Unknown};
    double previous_duration{0.0};
    bool edit_mode{false};
};

[[nodiscard]] auto build_features(AttemptContext const& ctx) -> FeatureVector;

inline constexpr double kDefaultRidge = 1.0;
inline constexpr double kDefaultExploration = 0.6;
inline constexpr int kReinversionInterval = 64;

/// Ridge state for one action. A^{-1} is kept by Sherman-Morrison rank-one
/// updates and recomputed directly every kReinversionInterval updates.
class LinUcbArm {
  public:
    explicit LinUcbArm(double ridge = kDefaultRidge);

    [[nodiscard]] auto A() const -> FeatureMatrix const& { return a_; }
    [[nodiscard]] auto A_inverse() const -> FeatureMatrix const& { return a_inv_; }
    [[nodiscard]] auto b() const -> FeatureVector const& { return b_; }
    [[nodiscard]] auto pulls() const -> std::int64_t { return pulls_; }
    [[nodiscard]] auto theta() const -> FeatureVector { return a_inv_ * b_; }

    /// A += w phi phi^T, b += w r phi. Throws Error{NegativeWeight} for w < 0.
    void update(FeatureVector const& phi, double reward_signal, double weight);

    /// Replaces state (used by persistence); validates symmetry and
    /// positive definiteness, throws Error{NumericalFailure} otherwise.
    void assign(FeatureMatrix const& a, FeatureVector const& b, std::int64_t pulls);

  private:
    void reinvert();

    FeatureMatrix a_;
    FeatureMatrix a_inv_;
    FeatureVector b_;
    std::int64_t pulls_{0};
    int updates_since_inversion_{0};
};

/// theta^T phi + alpha sqrt(phi^T A^{-1} phi).
[[nodiscard]] auto ucb_score(LinUcbArm const& arm, FeatureVector const& phi, double alpha) -> double;

/// Functional form of LinUcbArm::update.
[[nodiscard]] auto update_arm(LinUcbArm arm, FeatureVector const& phi, double reward_signal,
                              double weight) -> LinUcbArm;

using ArmSet = std::array<LinUcbArm, kRetrievalActionCount>;

/// argmax over the eight actions; ties go to the earlier action.
[[nodiscard]] auto select_action(ArmSet const& arms, FeatureVector const& phi, double alpha)
    -> RetrievalAction;

struct LinUcbConfig {
    double ridge{kDefaultRidge};
    double exploration{kDefaultExploration};
};

/// Retrieval-action controller: eight arms plus persistence.
class LinUcbBandit {
  public:
    explicit LinUcbBandit(LinUcbConfig config = {});

    [[nodiscard]] auto select(FeatureVector const& phi) const -> RetrievalAction;
    void update(RetrievalAction action, FeatureVector const& phi, double reward_signal,
                double weight);

    [[nodiscard]] auto arm(RetrievalAction action) const -> LinUcbArm const&;
    [[nodiscard]] auto arms() const -> ArmSet const& { return arms_; }
    [[nodiscard]] auto config() const -> LinUcbConfig const& { return config_; }

    /// Row-major matrices at full (round-trip) precision.
    [[nodiscard]] auto to_json() const -> nlohmann::json;
    void load_json(nlohmann::json const& j);
    void save(std::filesystem::path const& file) const;
    /// Missing file leaves fresh arms.
    void load(std::filesystem::path const& file);

  private:
    LinUcbConfig config_;
    ArmSet arms_;
};

}  // namespace mera
