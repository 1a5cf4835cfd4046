#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mera/error.hpp"
#include "mera/generator.hpp"
#include "test_support.hpp"

namespace mera {
namespace {

using testing::TempDir;

TEST(ScriptedGenerator, ReplaysInOrderThenExhausts) {
    TempDir dir{"gen"};
    testing::write_file(dir / "000.txt", "first");
    testing::write_file(dir / "001.error", "connection reset");
    testing::write_file(dir / "002.txt", "third");
    ScriptedGenerator gen{dir.path()};
    EXPECT_EQ(gen.generate({"p", {}}), "first");
    try {
        (void)gen.generate({"p", {}});
        FAIL();
    } catch (Error const& e) {
        EXPECT_EQ(e.code(), ErrorCode::GeneratorUnreachable);
        EXPECT_NE(std::string{e.what()}.find("connection reset"), std::string::npos);
    }
    EXPECT_EQ(gen.generate({"p", {}}), "third");
    EXPECT_THROW((void)gen.generate({"p", {}}), Error);
    EXPECT_EQ(gen.calls(), 4u);
}

TEST(ScriptedGenerator, MissingDirectory) {
    TempDir dir{"gen"};
    EXPECT_THROW((ScriptedGenerator{dir / "absent"}), Error);
}

TEST(MakeGenerator, Specs) {
    TempDir dir{"gen"};
    EXPECT_EQ(make_generator("scripted:" + dir.path().string())->model_id(), "scripted");
    EXPECT_EQ(make_generator("http:http://127.0.0.1:9")->model_id(), HttpGeneratorConfig{}.model);
    EXPECT_THROW((void)make_generator("carrier-pigeon"), Error);
}

class LocalServer {
  public:
    explicit LocalServer(std::function<void(httplib::Request const&, httplib::Response&)> handler) {
        server_.Post("/api/generate", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread{[this] { server_.listen_after_bind(); }};
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    [[nodiscard]] auto url() const -> std::string { return "http://127.0.0.1:" + std::to_string(port_); }

  private:
    httplib::Server server_;
    int port_{0};
    std::thread thread_;
};

TEST(HttpGenerator, PostsPromptAndReadsResponse) {
    nlohmann::json seen;
    LocalServer server{[&](httplib::Request const& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        res.set_content(R"({"response": "```python\nx = 1\n```"})", "application/json");
    }};
    HttpGeneratorConfig cfg;
    cfg.url = server.url();
    cfg.model = "tiny";
    cfg.timeout = 5.0;
    HttpGenerator gen{cfg};
    auto const out = gen.generate({"write x", DecodingProfile{"balanced", 0.7, 0.9}});
    EXPECT_EQ(out, "```python\nx = 1\n```");
    EXPECT_EQ(seen.at("model"), "tiny");
    EXPECT_EQ(seen.at("prompt"), "write x");
    EXPECT_EQ(seen.at("stream"), false);
    EXPECT_DOUBLE_EQ(seen.at("options").at("temperature").get<double>(), 0.7);
}

TEST(HttpGenerator, ErrorsAreUnreachable) {
    LocalServer server{[](httplib::Request const&, httplib::Response& res) {
        res.status = 500;
    }};
    HttpGeneratorConfig cfg;
    cfg.url = server.url();
    cfg.timeout = 5.0;
    try {
        (void)HttpGenerator{cfg}.generate({"p", {}});
        FAIL();
    } catch (Error const& e) {
        EXPECT_EQ(e.code(), ErrorCode::GeneratorUnreachable);
    }
}

TEST(HttpGenerator, MalformedReply) {
    LocalServer server{[](httplib::Request const&, httplib::Response& res) {
        res.set_content(R"({"text": "no response field"})", "application/json");
    }};
    HttpGeneratorConfig cfg;
    cfg.url = server.url();
    cfg.timeout = 5.0;
    EXPECT_THROW((void)HttpGenerator{cfg}.generate({"p", {}}), Error);
}

TEST(HttpGenerator, RefusedConnection) {
    HttpGeneratorConfig cfg;
    cfg.url = "http://127.0.0.1:9";
    cfg.timeout = 2.0;
    EXPECT_THROW((void)HttpGenerator{cfg}.generate({"p", {}}), Error);
}

}  // namespace
}  // namespace mera
