#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mera/credit.hpp"
#include "mera/episode_store.hpp"
#include "mera/fingerprint.hpp"
#include "mera/grace.hpp"
#include "mera/linucb.hpp"
#include "mera/prompt.hpp"
#include "mera/reward.hpp"
#include "mera/skills.hpp"
#include "mera/validator.hpp"

namespace mera {

/// Controller configuration; every block and coefficient is optional in
/// the JSON document and falls back to the defaults below.
struct ControllerConfig {
    RewardConfig reward;
    SimilarityWeights similarity;
    LinUcbConfig linucb;
    CreditConfig credit;
    GraceConfig grace;
    ValidatorConfig validator;
    std::size_t trigram_cap{kDefaultTrigramCap};
    std::size_t retention_cap{kDefaultRetentionCap};
    std::size_t skill_cap{kDefaultSkillCap};
    std::size_t history_blocks{kDefaultHistoryBlocks};
    std::size_t history_block_chars{kDefaultHistoryBlockChars};
    bool decoding_bandit{false};
    std::uint64_t decoding_seed{0};

    void validate() const;

    [[nodiscard]] static auto from_json(nlohmann::json const& j) -> ControllerConfig;
    [[nodiscard]] static auto load(std::filesystem::path const& file) -> ControllerConfig;
    [[nodiscard]] auto to_json() const -> nlohmann::json;
};

}  // namespace mera
