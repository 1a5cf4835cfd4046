#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/analyzer.hpp"

namespace mera {

inline constexpr std::size_t kDefaultSkillCap = 200;

/// BLAKE2b-256 of the bytes, lowercase hex.
[[nodiscard]] auto skill_hash(std::string const& canonical_dump) -> std::string;

struct SkillRecord {
    std::string hash;
    std::string canonical_body;
    std::string qualified_name;
    std::vector<std::string> params;
    std::string source;  // original unit text, shown as prompt evidence
    std::set<std::string> families;
    std::int64_t n_offered{0};
    std::int64_t n_succ{0};
    bool quarantined{true};
    std::int64_t last_used_ms{0};

    [[nodiscard]] auto arity() const -> int { return static_cast<int>(params.size()); }
    [[nodiscard]] auto success_ratio() const -> double;

    auto operator==(SkillRecord const&) const -> bool = default;
};

void to_json(nlohmann::json& j, SkillRecord const& s);
void from_json(nlohmann::json const& j, SkillRecord& s);

/// Extracts top-level functions and methods of an accepted program as
/// canonicalized, hashed, quarantined skill records (not yet in a library).
[[nodiscard]] auto extract_skills(std::string const& accepted_source, std::string const& family,
                                  Analyzer& analyzer, std::int64_t now_ms)
    -> std::vector<SkillRecord>;

/// Skill library with offer/success accounting and bounded size.
class SkillLibrary {
  public:
    explicit SkillLibrary(std::size_t cap = kDefaultSkillCap) : cap_{cap} {}

    /// Adds the units of an accepted program. Existing hashes only merge
    /// families and refresh last use. Returns the harvested records.
    auto harvest(std::string const& accepted_source, std::string const& family,
                 Analyzer& analyzer, std::int64_t now_ms) -> std::vector<SkillRecord>;

    /// Inserts or merges one record, then applies the cap.
    void add(SkillRecord record);

    /// Ranks by family match, success ratio, trusted before quarantined,
    /// recency, then hash. Increments n_offered of each returned skill.
    /// Throws Error{EmptyLibrary} when there are no skills.
    auto select(std::string const& family, std::size_t k, std::int64_t now_ms)
        -> std::vector<SkillRecord>;

    /// On acceptance every offered skill gains a success and leaves
    /// quarantine; otherwise nothing changes.
    void record_outcome(std::vector<std::string> const& offered_hashes, bool accepted);

    [[nodiscard]] auto skills() const -> std::vector<SkillRecord> const& { return skills_; }
    [[nodiscard]] auto find(std::string const& hash) const -> SkillRecord const*;
    [[nodiscard]] auto size() const -> std::size_t { return skills_.size(); }

    void save(std::filesystem::path const& file) const;
    /// Missing file yields an empty library.
    void load(std::filesystem::path const& file);

  private:
    void enforce_cap();
    auto find_mutable(std::string const& hash) -> SkillRecord*;

    std::size_t cap_;
    std::vector<SkillRecord> skills_;
};

}  // namespace mera
