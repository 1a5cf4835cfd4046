#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace mera {

struct DecodingProfile {
    std::string name;
    double temperature{0.7};
    double top_p{0.9};
};

struct GenerationRequest {
    std::string prompt;
    std::optional<DecodingProfile> profile;
};

/// Frozen code generator. Implementations hold their configuration as
/// immutable state; the controller only supplies prompts.
class Generator {
  public:
    virtual ~Generator() = default;
    /// Throws Error{GeneratorUnreachable} when no response can be obtained.
    [[nodiscard]] virtual auto generate(GenerationRequest const& request) -> std::string = 0;
    [[nodiscard]] virtual auto model_id() const -> std::string = 0;
};

/// Replays numbered response files (000.txt, 001.txt, ...) in order. A file
/// named NNN.error makes that call fail with GeneratorUnreachable carrying
/// the file content; running out of files fails the same way.
class ScriptedGenerator final : public Generator {
  public:
    explicit ScriptedGenerator(std::filesystem::path directory);

    auto generate(GenerationRequest const& request) -> std::string override;
    auto model_id() const -> std::string override { return "scripted"; }

    [[nodiscard]] auto calls() const -> std::size_t { return next_; }

  private:
    std::filesystem::path const directory_;
    std::size_t next_{0};
};

struct HttpGeneratorConfig {
    std::string url{"http://127.0.0.1:11434"};
    std::string path{"/api/generate"};
    std::string model{"qwen3:4b"};
    double timeout{300.0};

    /// Reads MERA_GENERATOR_URL and MERA_GENERATOR_MODEL over the defaults.
    [[nodiscard]] static auto from_environment() -> HttpGeneratorConfig;
};

/// Ollama-style adapter: POST {model, prompt, stream:false, options} and
/// read the "response" field of the reply.
class HttpGenerator final : public Generator {
  public:
    explicit HttpGenerator(HttpGeneratorConfig config);

    auto generate(GenerationRequest const& request) -> std::string override;
    auto model_id() const -> std::string override { return config_.model; }

  private:
    HttpGeneratorConfig const config_;
};

/// "scripted:<dir>" or "http" (optionally "http:<url>").
[[nodiscard]] auto make_generator(std::string const& spec) -> std::unique_ptr<Generator>;

}  // namespace mera
