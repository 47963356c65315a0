#pragma once

// Plain-text key = value configuration covering every engine field plus the
// remote endpoint settings; credentials can be overridden from the
// environment (ARMCTS_CHAT_API_KEY, ARMCTS_EMBED_API_KEY).

#include <cstdlib>
#include <fstream>
#include <map>
#include <string>

#include "armcts/common.hpp"
#include "armcts/core.hpp"
#include "armcts/remote.hpp"

namespace armcts {

struct AppConfig {
  EngineConfig engine;
  RemoteChatConfig chat;
  RemoteEmbedConfig embed;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::config_error, key + ": not a number: " + value);
  }
}

inline long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::config_error, key + ": not an integer: " + value);
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(Errc::config_error, key + ": not a boolean: " + value);
}

}  // namespace detail

// Lines of `key = value`; blank lines and #-comments ignored.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string line =
        trim(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
    ++line_no;
    if (!line.empty() && line[0] != '#') {
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw Error(Errc::config_error,
                    "line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw Error(Errc::config_error, "line " + std::to_string(line_no) + ": empty key");
      out[key] = value;
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

inline void apply_config(const std::map<std::string, std::string>& kv, AppConfig& config) {
  for (const auto& [key, value] : kv) {
    EngineConfig& e = config.engine;
    RemoteChatConfig& c = config.chat;
    RemoteEmbedConfig& m = config.embed;
    if (key == "c_explore") e.c_explore = detail::parse_double(key, value);
    else if (key == "ucb_variant") e.ucb_variant = parse_ucb_variant(value);
    else if (key == "k_rollouts") e.k_rollouts = static_cast<int>(detail::parse_int(key, value));
    else if (key == "beam_b") e.beam_b = static_cast<int>(detail::parse_int(key, value));
    else if (key == "max_depth") e.max_depth = static_cast<int>(detail::parse_int(key, value));
    else if (key == "early_stop_round")
      e.early_stop_round = static_cast<int>(detail::parse_int(key, value));
    else if (key == "temperature") e.temperature = detail::parse_double(key, value);
    else if (key == "t_r") e.t_r = detail::parse_double(key, value);
    else if (key == "t_kc") e.t_kc = detail::parse_double(key, value);
    else if (key == "pos_value_threshold")
      e.pos_value_threshold = detail::parse_double(key, value);
    else if (key == "top_k_retrieve")
      e.top_k_retrieve = static_cast<int>(detail::parse_int(key, value));
    else if (key == "embed_dim") e.embed_dim = static_cast<int>(detail::parse_int(key, value));
    else if (key == "seed") e.seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
    else if (key == "kc_enabled") e.kc_enabled = detail::parse_bool(key, value);
    else if (key == "rounds") e.rounds = static_cast<int>(detail::parse_int(key, value));
    else if (key == "prm_hard") e.prm_hard = detail::parse_bool(key, value);
    else if (key == "chat_base_url") c.base_url = value;
    else if (key == "chat_path") c.path = value;
    else if (key == "chat_model") c.model = value;
    else if (key == "chat_api_key") c.api_key = value;
    else if (key == "chat_max_tokens") c.max_tokens = static_cast<int>(detail::parse_int(key, value));
    else if (key == "chat_timeout_ms") c.timeout_ms = static_cast<int>(detail::parse_int(key, value));
    else if (key == "chat_retry_base_ms")
      c.retry_base_ms = static_cast<int>(detail::parse_int(key, value));
    else if (key == "chat_max_attempts")
      c.max_attempts = static_cast<int>(detail::parse_int(key, value));
    else if (key == "chat_completion_rounds_cap")
      c.completion_rounds_cap = static_cast<int>(detail::parse_int(key, value));
    else if (key == "embed_base_url") m.base_url = value;
    else if (key == "embed_path") m.path = value;
    else if (key == "embed_model") m.model = value;
    else if (key == "embed_api_key") m.api_key = value;
    else if (key == "embed_remote_dim") m.dim = static_cast<int>(detail::parse_int(key, value));
    else if (key == "embed_timeout_ms")
      m.timeout_ms = static_cast<int>(detail::parse_int(key, value));
    else if (key == "embed_retry_base_ms")
      m.retry_base_ms = static_cast<int>(detail::parse_int(key, value));
    else if (key == "embed_max_attempts")
      m.max_attempts = static_cast<int>(detail::parse_int(key, value));
    else
      throw Error(Errc::config_error, "unknown config key: " + key);
  }
}

// Credentials only; everything else flows through the file or CLI flags.
inline void apply_env_overrides(AppConfig& config) {
  if (const char* v = std::getenv("ARMCTS_CHAT_API_KEY")) config.chat.api_key = v;
  if (const char* v = std::getenv("ARMCTS_EMBED_API_KEY")) config.embed.api_key = v;
}

inline AppConfig load_app_config(const std::string& path) {
  AppConfig config;
  apply_config(parse_config_file(path), config);
  apply_env_overrides(config);
  return config;
}

}  // namespace armcts
