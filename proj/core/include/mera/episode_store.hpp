#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mera/fingerprint.hpp"
#include "mera/validator.hpp"

namespace mera {

inline constexpr std::size_t kDefaultRetentionCap = 500;
inline constexpr char const* kMemoryPathEnv = "MERA_MEMORY_PATH";

/// One persisted attempt. Failed attempts are stored as well as accepted ones.
struct EpisodeRecord {
    std::int64_t record_id{0};
    std::int64_t timestamp_ms{0};
    Fingerprint fingerprint;
    std::string task_id;
    std::string task_text;
    std::string candidate_source;
    ValidationReport report;
    double reward{0.0};
    bool accepted{false};
    double duration{0.0};
    std::string decoding_action;  // empty when the decoding bandit is off
    std::string retrieval_action;
    std::string model_id;

    auto operator==(EpisodeRecord const&) const -> bool = default;
};

void to_json(nlohmann::json& j, EpisodeRecord const& r);
void from_json(nlohmann::json const& j, EpisodeRecord& r);

enum class RetrievalMode { FailureMatch, AstMatch };

struct RankedEpisode {
    EpisodeRecord const* record;
    double score;
};

/// Ranks `records` against `query`. FAILURE_MATCH keeps only records whose
/// failure class equals the query's; AST_MATCH ranks everything with the
/// failure weight forced to zero. Ties break by recency, then record id
/// (newest first). Returns at most k entries.
[[nodiscard]] auto rank_episodes(std::vector<EpisodeRecord> const& records,
                                 Fingerprint const& query, RetrievalMode mode, std::size_t k,
                                 SimilarityWeights const& weights) -> std::vector<RankedEpisode>;

/// Append-only JSONL episodic store with oldest-first eviction.
///
/// Opening takes an exclusive advisory lock on "<path>.lock"; a second
/// writer fails with Error{StorageFailure}. Readers use load_records().
class EpisodeStore {
  public:
    explicit EpisodeStore(std::filesystem::path path,
                          std::size_t retention_cap = kDefaultRetentionCap);
    ~EpisodeStore();
    EpisodeStore(EpisodeStore const&) = delete;
    auto operator=(EpisodeStore const&) -> EpisodeStore& = delete;
    EpisodeStore(EpisodeStore&&) noexcept;
    auto operator=(EpisodeStore&&) noexcept -> EpisodeStore&;

    /// Assigns the next record id, appends, and compacts when over the cap.
    auto persist(EpisodeRecord record) -> std::int64_t;

    /// Throws Error{EmptyStore} when the store holds no records.
    [[nodiscard]] auto retrieve(Fingerprint const& query, RetrievalMode mode, std::size_t k,
                                SimilarityWeights const& weights = {}) const
        -> std::vector<EpisodeRecord>;

    [[nodiscard]] auto records() const -> std::vector<EpisodeRecord> const& { return records_; }
    [[nodiscard]] auto size() const -> std::size_t { return records_.size(); }
    [[nodiscard]] auto path() const -> std::filesystem::path const& { return path_; }

    /// Lock-free read of a store file.
    [[nodiscard]] static auto load_records(std::filesystem::path const& path)
        -> std::vector<EpisodeRecord>;

  private:
    void compact();

    std::filesystem::path path_;
    std::size_t cap_;
    std::vector<EpisodeRecord> records_;
    std::int64_t next_id_{1};
    int lock_fd_{-1};
};

}  // namespace mera
