#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "armcts/appconfig.hpp"

using namespace armcts;

namespace {

AppConfig apply_text(const std::string& text) {
  AppConfig config;
  apply_config(parse_config_text(text), config);
  return config;
}

}  // namespace

TEST_CASE("config: key = value lines with comments and blanks") {
  const auto kv = parse_config_text(
      "# a comment\n"
      "\n"
      "seed = 42\n"
      "  temperature=0.9  \n"
      "chat_model = gpt-test\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("seed") == "42");
  CHECK(kv.at("temperature") == "0.9");
  CHECK(kv.at("chat_model") == "gpt-test");
}

TEST_CASE("config: malformed lines carry their line number") {
  try {
    parse_config_text("seed = 1\nno equals sign here\n");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("= value without key\n"), Error);
}

TEST_CASE("config: every engine knob is reachable") {
  const AppConfig config = apply_text(
      "c_explore = 2.5\n"
      "ucb_variant = standard_uct\n"
      "k_rollouts = 4\n"
      "beam_b = 2\n"
      "max_depth = 6\n"
      "early_stop_round = 3\n"
      "temperature = 0.6\n"
      "t_r = 0.4\n"
      "t_kc = 0.3\n"
      "pos_value_threshold = 0.75\n"
      "top_k_retrieve = 7\n"
      "embed_dim = 128\n"
      "seed = 1234\n"
      "kc_enabled = false\n"
      "rounds = 5\n"
      "prm_hard = true\n");
  const EngineConfig& e = config.engine;
  CHECK(e.c_explore == 2.5);
  CHECK(e.ucb_variant == UcbVariant::standard_uct);
  CHECK(e.k_rollouts == 4);
  CHECK(e.beam_b == 2);
  CHECK(e.max_depth == 6);
  CHECK(e.early_stop_round == 3);
  CHECK(e.temperature == 0.6);
  CHECK(e.t_r == 0.4);
  CHECK(e.t_kc == 0.3);
  CHECK(e.pos_value_threshold == 0.75);
  CHECK(e.top_k_retrieve == 7);
  CHECK(e.embed_dim == 128);
  CHECK(e.seed == 1234);
  CHECK(e.kc_enabled == false);
  CHECK(e.rounds == 5);
  CHECK(e.prm_hard == true);
  CHECK_NOTHROW(validate(e));
}

TEST_CASE("config: endpoint settings split by prefix") {
  const AppConfig config = apply_text(
      "chat_base_url = http://chat.example:8000\n"
      "chat_path = /custom/chat\n"
      "chat_model = m1\n"
      "chat_api_key = k1\n"
      "chat_max_tokens = 64\n"
      "chat_timeout_ms = 9000\n"
      "chat_retry_base_ms = 10\n"
      "chat_max_attempts = 5\n"
      "chat_completion_rounds_cap = 8\n"
      "embed_base_url = http://embed.example:8001\n"
      "embed_path = /custom/embed\n"
      "embed_model = m2\n"
      "embed_api_key = k2\n"
      "embed_remote_dim = 512\n"
      "embed_timeout_ms = 7000\n"
      "embed_retry_base_ms = 20\n"
      "embed_max_attempts = 2\n");
  CHECK(config.chat.base_url == "http://chat.example:8000");
  CHECK(config.chat.path == "/custom/chat");
  CHECK(config.chat.model == "m1");
  CHECK(config.chat.api_key == "k1");
  CHECK(config.chat.max_tokens == 64);
  CHECK(config.chat.timeout_ms == 9000);
  CHECK(config.chat.retry_base_ms == 10);
  CHECK(config.chat.max_attempts == 5);
  CHECK(config.chat.completion_rounds_cap == 8);
  CHECK(config.embed.base_url == "http://embed.example:8001");
  CHECK(config.embed.path == "/custom/embed");
  CHECK(config.embed.model == "m2");
  CHECK(config.embed.api_key == "k2");
  CHECK(config.embed.dim == 512);
  CHECK(config.embed.timeout_ms == 7000);
  CHECK(config.embed.retry_base_ms == 20);
  CHECK(config.embed.max_attempts == 2);
}

TEST_CASE("config: unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(apply_text("mystery_knob = 1\n"), Error);
  CHECK_THROWS_AS(apply_text("seed = not_a_number\n"), Error);
  CHECK_THROWS_AS(apply_text("temperature = 0.7x\n"), Error);
  CHECK_THROWS_AS(apply_text("kc_enabled = yes\n"), Error);
  CHECK_THROWS_AS(apply_text("ucb_variant = sideways\n"), Error);
}

TEST_CASE("config: file loading and the missing-file error") {
  const auto path = std::filesystem::temp_directory_path() / "armcts_config_test.conf";
  {
    std::ofstream out(path);
    out << "seed = 77\nrounds = 2\n";
  }
  const AppConfig config = load_app_config(path.string());
  CHECK(config.engine.seed == 77);
  CHECK(config.engine.rounds == 2);
  std::filesystem::remove(path);

  try {
    load_app_config("/nonexistent/armcts.conf");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::file_not_found);
  }
}

TEST_CASE("config: credentials can come from the environment") {
  AppConfig config;
  config.chat.api_key = "from-file";
  ::setenv("ARMCTS_CHAT_API_KEY", "from-env", 1);
  ::setenv("ARMCTS_EMBED_API_KEY", "embed-env", 1);
  apply_env_overrides(config);
  CHECK(config.chat.api_key == "from-env");
  CHECK(config.embed.api_key == "embed-env");
  ::unsetenv("ARMCTS_CHAT_API_KEY");
  ::unsetenv("ARMCTS_EMBED_API_KEY");

  AppConfig untouched;
  untouched.chat.api_key = "kept";
  apply_env_overrides(untouched);
  CHECK(untouched.chat.api_key == "kept");
}
