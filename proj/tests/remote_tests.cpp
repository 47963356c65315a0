#include <doctest.h>

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "armcts/remote.hpp"

using namespace armcts;

namespace {

// Local HTTP fixture: one handler, request capture, hit counting.
class TestServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit TestServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard<std::mutex> lock(mutex_);
        bodies_.push_back(req.body);
        headers_.push_back(req.headers);
      }
      ++hits_;
      handler_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~TestServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int hits() const { return hits_.load(); }
  json body(std::size_t i) {
    std::lock_guard<std::mutex> lock(mutex_);
    return json::parse(bodies_.at(i));
  }
  httplib::Headers header_set(std::size_t i) {
    std::lock_guard<std::mutex> lock(mutex_);
    return headers_.at(i);
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  Handler handler_;
  std::atomic<int> hits_{0};
  std::mutex mutex_;
  std::vector<std::string> bodies_;
  std::vector<httplib::Headers> headers_;
  int port_ = 0;
};

void reply_step(httplib::Response& res, const std::string& content) {
  json body;
  body["choices"] = json::array({json{{"message", json{{"content", content}}}}});
  res.set_content(body.dump(), "application/json");
}

RemoteChatConfig fast_chat(const std::string& base_url) {
  RemoteChatConfig config;
  config.base_url = base_url;
  config.retry_base_ms = 1;
  config.timeout_ms = 5000;
  return config;
}

MultimodalQuery demo_query() {
  return {"q1", "What is 2 + 2?", std::nullopt, {"arithmetic"}, std::string("4")};
}

}  // namespace

// === chat endpoint: request shape =============================================

TEST_CASE("remote: step requests carry the chat wire shape and prompt context") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    reply_step(res, "Add the two numbers.\nignored trailing line");
  });
  RemoteChatConfig config = fast_chat(server.base_url());
  config.model = "test-model";
  config.max_tokens = 99;
  RemoteGenerator generator(config);

  ReasoningPath path;
  path.steps.push_back({"Recall the addition table.", std::nullopt});
  Insight insight;
  insight.entry = {"card1", "Addition combines quantities.", std::nullopt, "s", {}};

  const ReasoningStep step = generator.generate_step(demo_query(), path, &insight, 0.4, 7);
  CHECK(step.text == "Add the two numbers.");  // first line only, trimmed

  const json sent = server.body(0);
  CHECK(sent.at("model") == "test-model");
  CHECK(sent.at("max_tokens") == 99);
  CHECK(sent.at("temperature").get<double>() == doctest::Approx(0.4));
  REQUIRE(sent.at("messages").size() == 2);
  CHECK(sent["messages"][0].at("role") == "system");
  CHECK(sent["messages"][1].at("role") == "user");
  const std::string prompt = sent["messages"][1].at("content").get<std::string>();
  CHECK(prompt.find("Problem: What is 2 + 2?") != std::string::npos);
  CHECK(prompt.find("1. Recall the addition table.") != std::string::npos);
  CHECK(prompt.find("Addition combines quantities.") != std::string::npos);
  CHECK(prompt.find("Produce exactly one next step.") != std::string::npos);
}

TEST_CASE("remote: empty histories and missing insights are stated, not omitted") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    reply_step(res, "First step.");
  });
  RemoteGenerator generator(fast_chat(server.base_url()));
  generator.generate_step(demo_query(), {}, nullptr, 0.7, 1);
  const std::string prompt = server.body(0)["messages"][1]["content"].get<std::string>();
  CHECK(prompt.find("(none)") != std::string::npos);
  CHECK(prompt.find("Reference insight") == std::string::npos);
}

TEST_CASE("remote: the api key travels as a bearer token") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    reply_step(res, "ok step");
  });
  RemoteChatConfig config = fast_chat(server.base_url());
  config.api_key = "sk-test-123";
  RemoteGenerator generator(config);
  generator.generate_step(demo_query(), {}, nullptr, 0.7, 1);

  const auto headers = server.header_set(0);
  const auto it = headers.find("Authorization");
  REQUIRE(it != headers.end());
  CHECK(it->second == "Bearer sk-test-123");

  RemoteGenerator anonymous(fast_chat(server.base_url()));
  anonymous.generate_step(demo_query(), {}, nullptr, 0.7, 1);
  CHECK(server.header_set(1).count("Authorization") == 0);
}

// === chat endpoint: failure handling ==========================================

TEST_CASE("remote: transient server errors are retried until success") {
  std::atomic<int> calls{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) == 0) {
      res.status = 500;
      return;
    }
    reply_step(res, "recovered");
  });
  RemoteGenerator generator(fast_chat(server.base_url()));
  const ReasoningStep step = generator.generate_step(demo_query(), {}, nullptr, 0.7, 1);
  CHECK(step.text == "recovered");
  CHECK(server.hits() == 2);
}

TEST_CASE("remote: persistent 5xx exhausts the attempt budget") {
  TestServer server([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  RemoteGenerator generator(fast_chat(server.base_url()));
  try {
    generator.generate_step(demo_query(), {}, nullptr, 0.7, 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::endpoint_unreachable);
  }
  CHECK(server.hits() == 3);  // max_attempts default
}

TEST_CASE("remote: throttling surfaces as a rate-limit error after retries") {
  TestServer server([](const httplib::Request&, httplib::Response& res) { res.status = 429; });
  RemoteGenerator generator(fast_chat(server.base_url()));
  try {
    generator.generate_step(demo_query(), {}, nullptr, 0.7, 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::rate_limited);
  }
  CHECK(server.hits() == 3);
}

TEST_CASE("remote: request rejections do not retry") {
  TestServer server([](const httplib::Request&, httplib::Response& res) { res.status = 404; });
  RemoteGenerator generator(fast_chat(server.base_url()));
  CHECK_THROWS_AS(generator.generate_step(demo_query(), {}, nullptr, 0.7, 1), Error);
  CHECK(server.hits() == 1);
}

TEST_CASE("remote: malformed success replies fail immediately") {
  SUBCASE("unparseable body") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "application/json");
    });
    RemoteGenerator generator(fast_chat(server.base_url()));
    try {
      generator.generate_step(demo_query(), {}, nullptr, 0.7, 1);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::malformed_reply);
    }
    CHECK(server.hits() == 1);
  }
  SUBCASE("missing choices") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[]})", "application/json");
    });
    RemoteGenerator generator(fast_chat(server.base_url()));
    CHECK_THROWS_AS(generator.generate_step(demo_query(), {}, nullptr, 0.7, 1), Error);
  }
  SUBCASE("blank content") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
      reply_step(res, "   \nsecond line");
    });
    RemoteGenerator generator(fast_chat(server.base_url()));
    try {
      generator.generate_step(demo_query(), {}, nullptr, 0.7, 1);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::malformed_reply);
    }
  }
}

TEST_CASE("remote: an unreachable endpoint raises after the attempt budget") {
  RemoteChatConfig config = fast_chat("http://127.0.0.1:9");  // nothing listens here
  RemoteGenerator generator(config);
  try {
    generator.generate_step(demo_query(), {}, nullptr, 0.7, 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::endpoint_unreachable);
  }
}

// === chat endpoint: completion loop ===========================================

TEST_CASE("remote: completions extend until the terminal marker") {
  std::atomic<int> calls{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    const int n = calls.fetch_add(1);
    if (n < 2)
      reply_step(res, "intermediate step " + std::to_string(n + 1));
    else
      reply_step(res, "The answer is 42 <END>");
  });
  RemoteGenerator generator(fast_chat(server.base_url()));
  const ReasoningPath path = generator.generate_completion(demo_query(), {}, nullptr, 0.7, 1);
  REQUIRE(path.terminal());
  CHECK(path.steps.size() == 3);
  CHECK(normalize_answer(*path.final_answer) == "42");
}

TEST_CASE("remote: the completion cap forces a finalize request") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    const std::string prompt = body["messages"][1]["content"].get<std::string>();
    if (prompt.find("State the final answer now") != std::string::npos)
      reply_step(res, "answer: 7 <END>");
    else
      reply_step(res, "still thinking");
  });
  RemoteChatConfig config = fast_chat(server.base_url());
  config.completion_rounds_cap = 3;
  RemoteGenerator generator(config);
  const ReasoningPath path = generator.generate_completion(demo_query(), {}, nullptr, 0.7, 1);
  REQUIRE(path.terminal());
  CHECK(path.steps.size() == 3);
  CHECK(normalize_answer(*path.final_answer) == "7");
  CHECK(server.hits() == 3);
}

// === embeddings endpoint ======================================================

TEST_CASE("remote: embedding requests and replies round-trip") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    REQUIRE(body.at("input").is_array());
    json reply;
    reply["data"] = json::array({json{{"embedding", std::vector<double>{0.6, 0.8}}}});
    res.set_content(reply.dump(), "application/json");
  });
  RemoteEmbedConfig config;
  config.base_url = server.base_url();
  config.dim = 2;
  config.retry_base_ms = 1;
  RemoteEmbedder embedder(config);

  CHECK(embedder.dim() == 2);
  CHECK(embedder.embed_text("hello") == Embedding{0.6, 0.8});
  embedder.embed_image("figure.png");
  CHECK(server.body(1).at("input").at(0).get<std::string>() == "[image] figure.png");
}

TEST_CASE("remote: embedding shape violations are embed failures") {
  SUBCASE("wrong dimension") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
      json reply;
      reply["data"] = json::array({json{{"embedding", std::vector<double>{1.0, 2.0, 3.0}}}});
      res.set_content(reply.dump(), "application/json");
    });
    RemoteEmbedConfig config;
    config.base_url = server.base_url();
    config.dim = 2;
    config.retry_base_ms = 1;
    RemoteEmbedder embedder(config);
    try {
      embedder.embed_text("x");
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::embed_failure);
    }
  }
  SUBCASE("missing data field") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"unexpected":true})", "application/json");
    });
    RemoteEmbedConfig config;
    config.base_url = server.base_url();
    config.dim = 2;
    config.retry_base_ms = 1;
    RemoteEmbedder embedder(config);
    CHECK_THROWS_AS(embedder.embed_text("x"), Error);
  }
}
