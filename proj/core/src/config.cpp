#include "mera/config.hpp"

#include <fstream>
#include <set>

#include "mera/error.hpp"

namespace mera {

using nlohmann::json;

namespace {

/// Reads `key` into `out` when present; rejects keys outside `allowed`.
class Reader {
  public:
    Reader(json const& j, std::string block, std::set<std::string> allowed)
        : j_{j}, block_{std::move(block)} {
        if (!j_.is_object()) {
            throw Error{ErrorCode::InvalidConfig, block_ + " must be an object"};
        }
        for (auto const& [key, _] : j_.items()) {
            if (!allowed.contains(key)) {
                throw Error{ErrorCode::InvalidConfig, "unknown key " + block_ + "." + key};
            }
        }
    }

    template <typename T>
    void get(char const* key, T& out) const {
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (json::exception const& e) {
            throw Error{ErrorCode::InvalidConfig, block_ + "." + key + ": " + e.what()};
        }
    }

  private:
    json const& j_;
    std::string block_;
};

}  // namespace

void ControllerConfig::validate() const {
    reward.validate();
    similarity.validate();
    credit.validate();
    grace.validate();
    if (!(linucb.ridge > 0.0) || !(linucb.exploration >= 0.0)) {
        throw Error{ErrorCode::InvalidConfig, "linucb needs ridge > 0 and exploration >= 0"};
    }
    if (!(validator.command_timeout > 0.0) || validator.output_cap == 0) {
        throw Error{ErrorCode::InvalidConfig, "validator timeout and output cap must be > 0"};
    }
    if (trigram_cap == 0 || retention_cap == 0 || skill_cap == 0 || history_blocks == 0 ||
        history_block_chars == 0) {
        throw Error{ErrorCode::InvalidConfig, "caps must be >= 1"};
    }
}

auto ControllerConfig::from_json(json const& j) -> ControllerConfig {
    ControllerConfig c;
    Reader top{j, "config",
               {"reward", "similarity", "linucb", "credit", "grace", "validator", "trigram_cap",
                "retention_cap", "skill_cap", "history_blocks", "history_block_chars",
                "decoding_bandit", "decoding_seed"}};
    if (j.contains("reward")) {
        Reader r{j["reward"], "reward",
                 {"success_bonus", "progress_weight", "attempt_penalty", "extraction_penalty",
                  "behavior_penalty", "latency_weight", "latency_horizon"}};
        r.get("success_bonus", c.reward.success_bonus);
        r.get("progress_weight", c.reward.progress_weight);
        r.get("attempt_penalty", c.reward.attempt_penalty);
        r.get("extraction_penalty", c.reward.extraction_penalty);
        r.get("behavior_penalty", c.reward.behavior_penalty);
        r.get("latency_weight", c.reward.latency_weight);
        r.get("latency_horizon", c.reward.latency_horizon);
    }
    if (j.contains("similarity")) {
        Reader r{j["similarity"], "similarity", {"tok", "ast", "fail", "fam"}};
        r.get("tok", c.similarity.tok);
        r.get("ast", c.similarity.ast);
        r.get("fail", c.similarity.fail);
        r.get("fam", c.similarity.fam);
    }
    if (j.contains("linucb")) {
        Reader r{j["linucb"], "linucb", {"ridge", "exploration"}};
        r.get("ridge", c.linucb.ridge);
        r.get("exploration", c.linucb.exploration);
    }
    if (j.contains("credit")) {
        Reader r{j["credit"], "credit",
                 {"gamma", "lambda_td", "alpha_td", "clip_bound", "w_max", "eligibility_floor"}};
        r.get("gamma", c.credit.gamma);
        r.get("lambda_td", c.credit.lambda_td);
        r.get("alpha_td", c.credit.alpha_td);
        r.get("clip_bound", c.credit.clip_bound);
        r.get("w_max", c.credit.w_max);
        r.get("eligibility_floor", c.credit.eligibility_floor);
    }
    if (j.contains("grace")) {
        Reader r{j["grace"], "grace",
                 {"delta_progress", "delta_score", "rho", "top_k", "bootstrap_enabled", "hint_ttl"}};
        r.get("delta_progress", c.grace.delta_progress);
        r.get("delta_score", c.grace.delta_score);
        r.get("rho", c.grace.rho);
        r.get("top_k", c.grace.top_k);
        r.get("bootstrap_enabled", c.grace.bootstrap_enabled);
        r.get("hint_ttl", c.grace.hint_ttl);
    }
    if (j.contains("validator")) {
        Reader r{j["validator"], "validator", {"python", "command_timeout", "output_cap"}};
        r.get("python", c.validator.python);
        r.get("command_timeout", c.validator.command_timeout);
        r.get("output_cap", c.validator.output_cap);
    }
    top.get("trigram_cap", c.trigram_cap);
    top.get("retention_cap", c.retention_cap);
    top.get("skill_cap", c.skill_cap);
    top.get("history_blocks", c.history_blocks);
    top.get("history_block_chars", c.history_block_chars);
    top.get("decoding_bandit", c.decoding_bandit);
    top.get("decoding_seed", c.decoding_seed);
    c.validate();
    return c;
}

auto ControllerConfig::load(std::filesystem::path const& file) -> ControllerConfig {
    std::ifstream in{file};
    if (!in) {
        throw Error{ErrorCode::InvalidConfig, "cannot read config " + file.string()};
    }
    json j;
    try {
        in >> j;
    } catch (json::exception const& e) {
        throw Error{ErrorCode::InvalidConfig, file.string() + ": " + e.what()};
    }
    return from_json(j);
}

auto ControllerConfig::to_json() const -> json {
    return json{
        {"reward",
         {{"success_bonus", reward.success_bonus},
          {"progress_weight", reward.progress_weight},
          {"attempt_penalty", reward.attempt_penalty},
          {"extraction_penalty", reward.extraction_penalty},
          {"behavior_penalty", reward.behavior_penalty},
          {"latency_weight", reward.latency_weight},
          {"latency_horizon", reward.latency_horizon}}},
        {"similarity",
         {{"tok", similarity.tok}, {"ast", similarity.ast}, {"fail", similarity.fail},
          {"fam", similarity.fam}}},
        {"linucb", {{"ridge", linucb.ridge}, {"exploration", linucb.exploration}}},
        {"credit",
         {{"gamma", credit.gamma},
          {"lambda_td", credit.lambda_td},
          {"alpha_td", credit.alpha_td},
          {"clip_bound", credit.clip_bound},
          {"w_max", credit.w_max},
          {"eligibility_floor", credit.eligibility_floor}}},
        {"grace",
         {{"delta_progress", grace.delta_progress},
          {"delta_score", grace.delta_score},
          {"rho", grace.rho},
          {"top_k", grace.top_k},
          {"bootstrap_enabled", grace.bootstrap_enabled},
          {"hint_ttl", grace.hint_ttl}}},
        {"validator",
         {{"python", validator.python},
          {"command_timeout", validator.command_timeout},
          {"output_cap", validator.output_cap}}},
        {"trigram_cap", trigram_cap},
        {"retention_cap", retention_cap},
        {"skill_cap", skill_cap},
        {"history_blocks", history_blocks},
        {"history_block_chars", history_block_chars},
        {"decoding_bandit", decoding_bandit},
        {"decoding_seed", decoding_seed}};
}

}  // namespace mera
