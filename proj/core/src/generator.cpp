#include "mera/generator.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mera/error.hpp"

namespace mera {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

auto read_file(fs::path const& path) -> std::string {
    std::ifstream in{path, std::ios::binary};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ScriptedGenerator::ScriptedGenerator(fs::path directory) : directory_{std::move(directory)} {
    if (!fs::is_directory(directory_)) {
        throw Error{ErrorCode::InvalidConfig, "no response directory " + directory_.string()};
    }
}

auto ScriptedGenerator::generate(GenerationRequest const& /*request*/) -> std::string {
    char name[32];
    std::snprintf(name, sizeof name, "%03zu", next_);
    ++next_;
    auto const text = directory_ / (std::string{name} + ".txt");
    auto const error = directory_ / (std::string{name} + ".error");
    if (fs::exists(error)) {
        throw Error{ErrorCode::GeneratorUnreachable, read_file(error)};
    }
    if (!fs::exists(text)) {
        throw Error{ErrorCode::GeneratorUnreachable,
                    "scripted responses exhausted at " + std::string{name}};
    }
    return read_file(text);
}

auto HttpGeneratorConfig::from_environment() -> HttpGeneratorConfig {
    HttpGeneratorConfig cfg;
    if (auto const* url = std::getenv("MERA_GENERATOR_URL"); url != nullptr && *url != '\0') {
        cfg.url = url;
    }
    if (auto const* model = std::getenv("MERA_GENERATOR_MODEL"); model != nullptr && *model != '\0') {
        cfg.model = model;
    }
    return cfg;
}

HttpGenerator::HttpGenerator(HttpGeneratorConfig config) : config_{std::move(config)} {}

auto HttpGenerator::generate(GenerationRequest const& request) -> std::string {
    httplib::Client client{config_.url};
    auto const secs = static_cast<time_t>(config_.timeout);
    client.set_connection_timeout(std::min<time_t>(secs, 10), 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);

    json body{{"model", config_.model}, {"prompt", request.prompt}, {"stream", false}};
    if (request.profile) {
        body["options"] = {{"temperature", request.profile->temperature},
                           {"top_p", request.profile->top_p}};
    }
    auto res = client.Post(config_.path, body.dump(), "application/json");
    if (!res) {
        throw Error{ErrorCode::GeneratorUnreachable,
                    config_.url + ": " + httplib::to_string(res.error())};
    }
    if (res->status != 200) {
        throw Error{ErrorCode::GeneratorUnreachable,
                    config_.url + ": HTTP " + std::to_string(res->status)};
    }
    try {
        auto const reply = json::parse(res->body);
        return reply.at("response").get<std::string>();
    } catch (json::exception const& e) {
        throw Error{ErrorCode::GeneratorUnreachable, std::string{"malformed reply: "} + e.what()};
    }
}

auto make_generator(std::string const& spec) -> std::unique_ptr<Generator> {
    if (spec.starts_with("scripted:")) {
        return std::make_unique<ScriptedGenerator>(spec.substr(9));
    }
    if (spec == "http") {
        return std::make_unique<HttpGenerator>(HttpGeneratorConfig::from_environment());
    }
    if (spec.starts_with("http:")) {
        auto cfg = HttpGeneratorConfig::from_environment();
        cfg.url = spec.substr(5);
        return std::make_unique<HttpGenerator>(cfg);
    }
    throw Error{ErrorCode::InvalidConfig, "unknown generator spec: " + spec};
}

}  // namespace mera
