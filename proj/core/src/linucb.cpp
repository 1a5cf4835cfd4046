#include "mera/linucb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mera/error.hpp"

namespace mera {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, kRetrievalActionCount> kActionNames = {
    "NONE",         "ONE_FAILURE_MATCH",     "ONE_AST_MATCH", "ONE_FAILURE_ONE_AST",
    "TWO_AST_MATCH", "ONE_SKILL_ONLY", "ONE_FAILURE_ONE_SKILL", "DIFF_ONLY"};

auto failure_slot(FailureClass f) -> int {
    switch (f) {
        case FailureClass::Unknown: return 3;
        case FailureClass::Extraction: return 4;
        case FailureClass::Syntax: return 5;
        case FailureClass::UndefinedName: return 6;
        case FailureClass::SpecContract: return 7;
        case FailureClass::Import: return 8;
        case FailureClass::Runtime: return 9;
        case FailureClass::Type: return 10;
        case FailureClass::Semantic:
        case FailureClass::Behavior: return 11;
    }
    return 3;
}

auto all_finite(auto const& m) -> bool {
    return m.allFinite();
}

void write_atomically(fs::path const& file, std::string const& text) {
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
    auto const tmp = file.string() + ".tmp";
    {
        std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
        out << text;
        if (!out.flush()) {
            throw Error{ErrorCode::StorageFailure, "cannot write " + tmp};
        }
    }
    fs::rename(tmp, file);
}

}  // namespace

auto to_string(RetrievalAction a) -> std::string_view {
    return kActionNames.at(static_cast<std::size_t>(a));
}

auto retrieval_action_from_string(std::string_view text) -> std::optional<RetrievalAction> {
    for (std::size_t i = 0; i < kActionNames.size(); ++i) {
        if (kActionNames[i] == text) {
            return kAllRetrievalActions[i];
        }
    }
    return std::nullopt;
}

auto build_features(AttemptContext const& ctx) -> FeatureVector {
    FeatureVector phi = FeatureVector::Zero();
    phi[0] = 1.0;
    if (ctx.attempt_budget > 1) {
        phi[1] = std::clamp(static_cast<double>(ctx.attempt_index) / (ctx.attempt_budget - 1), 0.0, 1.0);
    }
    FailureClass failure = FailureClass::Unknown;
    double duration = 0.0;
    if (ctx.has_previous_report) {
        phi[2] = std::clamp(static_cast<double>(ctx.previous_passed) / 6.0, 0.0, 1.0);
        failure = ctx.previous_failure;
        duration = ctx.previous_duration;
    }
    phi[failure_slot(failure)] = 1.0;
    if (duration < 10.0) {
        phi[12] = 1.0;
    } else if (duration <= 60.0) {
        phi[13] = 1.0;
    } else {
        phi[14] = 1.0;
    }
    phi[15] = ctx.edit_mode ? 1.0 : 0.0;
    return phi;
}

LinUcbArm::LinUcbArm(double ridge) {
    if (!(ridge > 0.0) || !std::isfinite(ridge)) {
        throw Error{ErrorCode::InvalidConfig, "ridge must be > 0"};
    }
    a_ = FeatureMatrix::Identity() * ridge;
    a_inv_ = FeatureMatrix::Identity() / ridge;
    b_ = FeatureVector::Zero();
}

void LinUcbArm::reinvert() {
    Eigen::LLT<FeatureMatrix> llt{a_};
    if (llt.info() != Eigen::Success) {
        throw Error{ErrorCode::NumericalFailure, "arm matrix is not positive definite"};
    }
    a_inv_ = llt.solve(FeatureMatrix::Identity());
    a_inv_ = 0.5 * (a_inv_ + a_inv_.transpose()).eval();
    updates_since_inversion_ = 0;
}

void LinUcbArm::update(FeatureVector const& phi, double reward_signal, double weight) {
    if (weight < 0.0 || std::isnan(weight)) {
        throw Error{ErrorCode::NegativeWeight, "update weight " + std::to_string(weight)};
    }
    if (!all_finite(phi) || !std::isfinite(reward_signal) || !std::isfinite(weight)) {
        throw Error{ErrorCode::NumericalFailure, "non-finite update"};
    }
    if (weight == 0.0) {
        return;
    }
    a_.noalias() += weight * phi * phi.transpose();
    b_.noalias() += weight * reward_signal * phi;
    ++pulls_;
    if (++updates_since_inversion_ >= kReinversionInterval) {
        reinvert();
        return;
    }
    FeatureVector const u = a_inv_ * phi;
    double const denom = 1.0 + weight * phi.dot(u);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        reinvert();
        return;
    }
    a_inv_.noalias() -= (weight / denom) * u * u.transpose();
    a_inv_ = 0.5 * (a_inv_ + a_inv_.transpose()).eval();
    if (!all_finite(a_inv_)) {
        reinvert();
    }
}

void LinUcbArm::assign(FeatureMatrix const& a, FeatureVector const& b, std::int64_t pulls) {
    if (!all_finite(a) || !all_finite(b) || pulls < 0) {
        throw Error{ErrorCode::NumericalFailure, "non-finite arm state"};
    }
    double const scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw Error{ErrorCode::NumericalFailure, "arm matrix is not symmetric"};
    }
    auto const saved_a = a_;
    a_ = a;
    try {
        reinvert();
    } catch (...) {
        a_ = saved_a;
        throw;
    }
    b_ = b;
    pulls_ = pulls;
}

auto ucb_score(LinUcbArm const& arm, FeatureVector const& phi, double alpha) -> double {
    auto const& inv = arm.A_inverse();
    if (!all_finite(inv)) {
        throw Error{ErrorCode::NumericalFailure, "arm inverse is not finite"};
    }
    double const mean = (inv * arm.b()).dot(phi);
    double const var = std::max(0.0, phi.dot(inv * phi));
    return mean + alpha * std::sqrt(var);
}

auto update_arm(LinUcbArm arm, FeatureVector const& phi, double reward_signal, double weight)
    -> LinUcbArm {
    arm.update(phi, reward_signal, weight);
    return arm;
}

auto select_action(ArmSet const& arms, FeatureVector const& phi, double alpha)
    -> RetrievalAction {
    std::size_t best = 0;
    double best_score = ucb_score(arms[0], phi, alpha);
    for (std::size_t i = 1; i < arms.size(); ++i) {
        double const s = ucb_score(arms[i], phi, alpha);
        if (s > best_score) {
            best = i;
            best_score = s;
        }
    }
    return kAllRetrievalActions[best];
}

namespace {

auto fresh_arms(double ridge) -> ArmSet {
    ArmSet arms;
    arms.fill(LinUcbArm{ridge});
    return arms;
}

}  // namespace

LinUcbBandit::LinUcbBandit(LinUcbConfig config)
    : config_{config}, arms_{fresh_arms(config.ridge)} {
    if (!(config_.exploration >= 0.0)) {
        throw Error{ErrorCode::InvalidConfig, "exploration weight must be >= 0"};
    }
}

auto LinUcbBandit::select(FeatureVector const& phi) const -> RetrievalAction {
    return select_action(arms_, phi, config_.exploration);
}

void LinUcbBandit::update(RetrievalAction action, FeatureVector const& phi, double reward_signal,
                          double weight) {
    arms_.at(static_cast<std::size_t>(action)).update(phi, reward_signal, weight);
}

auto LinUcbBandit::arm(RetrievalAction action) const -> LinUcbArm const& {
    return arms_.at(static_cast<std::size_t>(action));
}

auto LinUcbBandit::to_json() const -> json {
    json arms = json::array();
    for (std::size_t i = 0; i < arms_.size(); ++i) {
        auto const& arm = arms_[i];
        std::vector<double> a(kFeatureDim * kFeatureDim);
        for (int r = 0; r < kFeatureDim; ++r) {
            for (int c = 0; c < kFeatureDim; ++c) {
                a[static_cast<std::size_t>(r * kFeatureDim + c)] = arm.A()(r, c);
            }
        }
        std::vector<double> b(arm.b().data(), arm.b().data() + kFeatureDim);
        arms.push_back({{"action", to_string(kAllRetrievalActions[i])},
                        {"A", a},
                        {"b", b},
                        {"pulls", arm.pulls()}});
    }
    return json{{"dimension", kFeatureDim},
                {"ridge", config_.ridge},
                {"exploration", config_.exploration},
                {"arms", arms}};
}

void LinUcbBandit::load_json(json const& j) {
    if (j.value("dimension", kFeatureDim) != kFeatureDim) {
        throw Error{ErrorCode::ParseFailure, "arm state has the wrong dimension"};
    }
    auto arms = fresh_arms(config_.ridge);
    for (auto const& entry : j.at("arms")) {
        auto action = retrieval_action_from_string(entry.at("action").get<std::string>());
        if (!action) {
            throw Error{ErrorCode::ParseFailure, "unknown action in arm state"};
        }
        auto const a = entry.at("A").get<std::vector<double>>();
        auto const b = entry.at("b").get<std::vector<double>>();
        if (a.size() != kFeatureDim * kFeatureDim || b.size() != kFeatureDim) {
            throw Error{ErrorCode::ParseFailure, "arm state has the wrong shape"};
        }
        FeatureMatrix am;
        FeatureVector bv;
        for (int r = 0; r < kFeatureDim; ++r) {
            bv[r] = b[static_cast<std::size_t>(r)];
            for (int c = 0; c < kFeatureDim; ++c) {
                am(r, c) = a[static_cast<std::size_t>(r * kFeatureDim + c)];
            }
        }
        arms.at(static_cast<std::size_t>(*action)).assign(am, bv, entry.value("pulls", std::int64_t{0}));
    }
    arms_ = arms;
}

void LinUcbBandit::save(fs::path const& file) const {
    write_atomically(file, to_json().dump(2) + "\n");
}

void LinUcbBandit::load(fs::path const& file) {
    std::ifstream in{file};
    if (!in) {
        return;
    }
    json j;
    try {
        in >> j;
    } catch (json::exception const& e) {
        throw Error{ErrorCode::ParseFailure, file.string() + ": " + e.what()};
    }
    load_json(j);
}

}  // namespace mera
