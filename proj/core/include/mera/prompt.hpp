#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace mera {

inline constexpr std::size_t kDefaultHistoryBlocks = 2;
inline constexpr std::size_t kDefaultHistoryBlockChars = 2000;

/// First fenced block tagged with the target language, else the longest
/// untagged fenced block, else nothing (an extraction failure).
[[nodiscard]] auto extract_code(std::string const& response,
                                std::string const& language = "python")
    -> std::optional<std::string>;

/// Response text with every fenced block removed.
[[nodiscard]] auto prose_outside_fences(std::string const& response) -> std::string;

/// Line-based unified diff (single hunk set, 3 lines of context).
[[nodiscard]] auto unified_diff(std::string const& before, std::string const& after,
                                std::string const& before_label = "previous",
                                std::string const& after_label = "current") -> std::string;

/// Bounded transcript of feedback blocks; oldest blocks are dropped first.
class History {
  public:
    explicit History(std::size_t max_blocks = kDefaultHistoryBlocks,
                     std::size_t max_chars = kDefaultHistoryBlockChars)
        : max_blocks_{max_blocks}, max_chars_{max_chars} {}

    void append(std::string block);
    [[nodiscard]] auto blocks() const -> std::deque<std::string> const& { return blocks_; }

  private:
    std::size_t max_blocks_;
    std::size_t max_chars_;
    std::deque<std::string> blocks_;
};

struct PromptEvidence {
    std::string title;  // e.g. "record 12 (IMPORT)"
    std::string body;
};

struct PromptInputs {
    std::string request;
    std::string target_file{"algorithm.py"};
    std::optional<std::string> current_file;
    std::optional<std::string> previous_report;  // rendered feedback
    std::vector<PromptEvidence> episodes;
    std::vector<PromptEvidence> skills;
    std::vector<PromptEvidence> guidance;
    std::optional<std::string> diff;
    std::vector<std::string> history;
};

inline constexpr std::string_view kUntrustedEpisode = "UNTRUSTED PRIOR ATTEMPT";
inline constexpr std::string_view kUntrustedSkill = "UNTRUSTED SKILL";
inline constexpr std::string_view kUntrustedGuidance = "UNTRUSTED GUIDANCE";
inline constexpr std::string_view kUntrustedDiff = "UNTRUSTED DIFF";

/// Deterministic prompt: request, current file, previous report, episodes,
/// skills, guidance, diff, history, then the output instruction.
[[nodiscard]] auto compose_prompt(PromptInputs const& in) -> std::string;

}  // namespace mera
