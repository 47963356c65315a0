#pragma once

// Remote backends speaking a chat-completion wire shape over HTTP:
// request {model, messages:[{role, content}], temperature, max_tokens},
// reply {choices:[{message:{content}}]}; and an embeddings endpoint
// {model, input:[text]} -> {data:[{embedding:[...]}]}. Transient failures
// (connection errors, 5xx, 429) retry with exponential backoff up to
// max_attempts total tries; malformed 200-replies fail immediately.
//
// Determinism caveat: the seed parameter is not part of the wire shape, so
// reproducibility depends on the remote service; the in-process mock is the
// deterministic reference backend.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "armcts/common.hpp"
#include "armcts/core.hpp"
#include "armcts/embedding.hpp"
#include "armcts/generator.hpp"

namespace armcts {

struct RemoteChatConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/v1/chat/completions";
  std::string model = "default";
  std::string api_key;       // sent as a Bearer token when non-empty
  int max_tokens = 256;
  int timeout_ms = 30000;
  int retry_base_ms = 250;   // doubled per retry
  int max_attempts = 3;      // total tries
  int completion_rounds_cap = 16;
};

struct RemoteEmbedConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/v1/embeddings";
  std::string model = "default";
  std::string api_key;
  int dim = 256;
  int timeout_ms = 30000;
  int retry_base_ms = 250;
  int max_attempts = 3;
};

namespace detail {

enum class TransientKind { none, unreachable, rate_limited };

inline json post_json_with_retries(const std::string& base_url, const std::string& path,
                                   const std::string& api_key, int timeout_ms, int retry_base_ms,
                                   int max_attempts, const json& body) {
  httplib::Client client(base_url);
  client.set_connection_timeout(0, timeout_ms * 1000);
  client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  TransientKind last = TransientKind::none;
  std::string last_detail;
  const int attempts = std::max(1, max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      const int delay = retry_base_ms * (1 << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    httplib::Result res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last = TransientKind::unreachable;
      last_detail = "connection failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      try {
        return json::parse(res->body);
      } catch (const std::exception& ex) {
        throw Error(Errc::malformed_reply, std::string("unparseable body: ") + ex.what());
      }
    }
    if (res->status == 429) {
      last = TransientKind::rate_limited;
      last_detail = "HTTP 429";
      continue;
    }
    if (res->status >= 500) {
      last = TransientKind::unreachable;
      last_detail = "HTTP " + std::to_string(res->status);
      continue;
    }
    // Remaining 4xx: the request itself is rejected; retrying cannot help.
    throw Error(Errc::endpoint_unreachable, "HTTP " + std::to_string(res->status));
  }
  if (last == TransientKind::rate_limited)
    throw Error(Errc::rate_limited, last_detail + " after " + std::to_string(attempts) + " attempts");
  throw Error(Errc::endpoint_unreachable,
              last_detail + " after " + std::to_string(attempts) + " attempts");
}

inline std::string first_line(const std::string& text) {
  const std::size_t pos = text.find('\n');
  return trim(pos == std::string::npos ? text : text.substr(0, pos));
}

}  // namespace detail

class RemoteGenerator final : public GeneratorBackend {
 public:
  explicit RemoteGenerator(RemoteChatConfig config) : config_(std::move(config)) {}

  ReasoningStep generate_step(const MultimodalQuery& query, const ReasoningPath& path,
                              const Insight* insight, double temperature,
                              std::uint64_t /*seed*/) const override {
    return request_step(query, path, insight, temperature, /*finalize=*/false);
  }

  ReasoningPath generate_completion(const MultimodalQuery& query, const ReasoningPath& path,
                                    const Insight* insight, double temperature,
                                    std::uint64_t /*seed*/) const override {
    ReasoningPath p = path;
    bool first = true;
    for (int round = 0; round < config_.completion_rounds_cap && !p.terminal(); ++round) {
      const bool finalize = round == config_.completion_rounds_cap - 1;
      const Insight* ins = first ? insight : nullptr;
      p = extend_path(p, request_step(query, p, ins, temperature, finalize));
      first = false;
    }
    return p;
  }

  const RemoteChatConfig& config() const { return config_; }

 private:
  ReasoningStep request_step(const MultimodalQuery& query, const ReasoningPath& path,
                             const Insight* insight, double temperature, bool finalize) const {
    json body;
    body["model"] = config_.model;
    body["temperature"] = temperature;
    body["max_tokens"] = config_.max_tokens;
    body["messages"] = json::array({
        json{{"role", "system"}, {"content", kSystemPrompt}},
        json{{"role", "user"}, {"content", build_user_prompt(query, path, insight, finalize)}},
    });
    const json reply =
        detail::post_json_with_retries(config_.base_url, config_.path, config_.api_key,
                                       config_.timeout_ms, config_.retry_base_ms,
                                       config_.max_attempts, body);
    try {
      const json& choices = reply.at("choices");
      if (!choices.is_array() || choices.empty())
        throw Error(Errc::malformed_reply, "empty choices");
      const std::string content = choices.at(0).at("message").at("content").get<std::string>();
      const std::string step = detail::first_line(content);
      if (step.empty()) throw Error(Errc::malformed_reply, "empty step content");
      ReasoningStep out;
      out.text = step;
      return out;
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      throw Error(Errc::malformed_reply, ex.what());
    }
  }

  static std::string build_user_prompt(const MultimodalQuery& query, const ReasoningPath& path,
                                       const Insight* insight, bool finalize) {
    std::string prompt = "Problem: " + query.text + "\n";
    if (query.image_ref.has_value()) prompt += "Image: " + *query.image_ref + "\n";
    prompt += "Steps so far:\n";
    if (path.steps.empty()) {
      prompt += "(none)\n";
    } else {
      for (std::size_t i = 0; i < path.steps.size(); ++i)
        prompt += std::to_string(i + 1) + ". " + path.steps[i].text + "\n";
    }
    if (insight != nullptr) prompt += "Reference insight:\n" + insight->entry.text + "\n";
    prompt += finalize ? "State the final answer now, ending with <END>."
                       : "Produce exactly one next step.";
    return prompt;
  }

  static constexpr const char* kSystemPrompt =
      "You are a careful step-by-step reasoner. Produce exactly one next reasoning step per "
      "request. When you produce the final step, state the final answer and end with <END>.";

  RemoteChatConfig config_;
};

class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedConfig config) : config_(std::move(config)) {}

  Embedding embed_text(const std::string& text) const override { return request(text); }
  Embedding embed_image(const std::string& image_ref) const override {
    return request("[image] " + image_ref);
  }
  int dim() const override { return config_.dim; }

 private:
  Embedding request(const std::string& input) const {
    json body;
    body["model"] = config_.model;
    body["input"] = json::array({input});
    const json reply =
        detail::post_json_with_retries(config_.base_url, config_.path, config_.api_key,
                                       config_.timeout_ms, config_.retry_base_ms,
                                       config_.max_attempts, body);
    Embedding emb;
    try {
      emb = reply.at("data").at(0).at("embedding").get<Embedding>();
    } catch (const std::exception& ex) {
      throw Error(Errc::embed_failure, ex.what());
    }
    if (static_cast<int>(emb.size()) != config_.dim)
      throw Error(Errc::embed_failure, "embedding dim " + std::to_string(emb.size()) +
                                           ", expected " + std::to_string(config_.dim));
    return emb;
  }

  RemoteEmbedConfig config_;
};

}  // namespace armcts
