#pragma once

// Domain types shared by every module, answer normalization, and path
// manipulation. All types here are immutable values: safe to copy and to
// share across concurrent workers.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "armcts/common.hpp"

namespace armcts {

// Generation stops when a step carries this marker (trailed only by
// whitespace); the text before it holds the final answer.
inline constexpr std::string_view kTerminalMarker = "<END>";

struct MultimodalQuery {
  std::string id;
  std::string text;                         // t
  std::optional<std::string> image_ref;     // x: opaque, never decoded
  std::vector<std::string> kc_labels;       // knowledge-concept labels
  std::optional<std::string> answer_key;    // present for annotation/benchmark
};

struct ReasoningStep {
  std::string text;                         // y_i
  std::optional<std::string> insight_id;    // retrieved entry used, if any
};

struct ReasoningPath {
  std::vector<ReasoningStep> steps;
  std::optional<std::string> final_answer;  // set iff the path is terminal

  bool terminal() const { return final_answer.has_value(); }
  std::size_t depth() const { return steps.size(); }
};

enum class UcbVariant { paper_literal, standard_uct };

inline const char* ucb_variant_name(UcbVariant v) {
  return v == UcbVariant::paper_literal ? "paper_literal" : "standard_uct";
}

inline UcbVariant parse_ucb_variant(std::string_view s) {
  if (s == "paper_literal") return UcbVariant::paper_literal;
  if (s == "standard_uct") return UcbVariant::standard_uct;
  throw Error(Errc::config_error, "unknown ucb_variant: " + std::string(s));
}

struct EngineConfig {
  double c_explore = 1.0;
  UcbVariant ucb_variant = UcbVariant::paper_literal;
  int k_rollouts = 8;              // rollouts per simulated node
  int beam_b = 3;                  // insights offered per expansion (B)
  int max_depth = 8;               // reasoning-step cap (T)
  int early_stop_round = 4;        // forced-completion round at inference
  double temperature = 0.7;
  double t_r = 0.5;                // query-similarity threshold
  double t_kc = 0.5;               // knowledge-concept similarity threshold
  double pos_value_threshold = 0.8;
  int top_k_retrieve = 5;          // K per retrieval route
  int embed_dim = 256;
  std::uint64_t seed = 0;
  bool kc_enabled = true;          // disable when queries carry no labels
  int rounds = 8;                  // annotation search rounds
  bool prm_hard = false;           // threshold PRM scores at 0.5
};

inline void validate(const EngineConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(Errc::config_error, msg); };
  if (c.k_rollouts < 1) fail("k_rollouts must be positive");
  if (c.beam_b < 0) fail("beam_b must be non-negative");
  if (c.max_depth < 1) fail("max_depth must be positive");
  if (c.early_stop_round < 1) fail("early_stop_round must be positive");
  if (c.early_stop_round > c.max_depth) fail("early_stop_round must not exceed max_depth");
  if (!(c.temperature > 0.0)) fail("temperature must be > 0");
  if (c.t_r < -1.0 || c.t_r > 1.0) fail("t_r must be in [-1, 1]");
  if (c.t_kc < -1.0 || c.t_kc > 1.0) fail("t_kc must be in [-1, 1]");
  if (!(c.pos_value_threshold > 0.0) || c.pos_value_threshold > 1.0)
    fail("pos_value_threshold must be in (0, 1]");
  if (c.top_k_retrieve < 1) fail("top_k_retrieve must be positive");
  if (c.embed_dim < 2) fail("embed_dim must be at least 2");
  if (c.rounds < 1) fail("rounds must be positive");
}

namespace detail {

inline bool is_strip_punct(char c) {
  switch (c) {
    case '(': case ')': case '[': case ']': case '{': case '}':
    case '.': case ',': case ':': case ';': case '!': case '?':
    case '"': case '\'': case '`':
      return true;
    default:
      return false;
  }
}

}  // namespace detail

// Canonical answer string: lowercased, trimmed, surrounding punctuation and a
// leading "answer:" stripped. Runs to a fixed point, so it is idempotent by
// construction.
inline std::string normalize_answer(std::string_view raw) {
  std::string s = lowercase(trim(raw));
  for (;;) {
    const std::string before = s;
    std::size_t b = 0, e = s.size();
    while (b < e && (is_space(s[b]) || detail::is_strip_punct(s[b]))) ++b;
    while (e > b && (is_space(s[e - 1]) || detail::is_strip_punct(s[e - 1]))) --e;
    s = s.substr(b, e - b);
    constexpr std::string_view prefix = "answer:";
    if (s.size() >= prefix.size() && std::string_view(s).substr(0, prefix.size()) == prefix)
      s = trim(std::string_view(s).substr(prefix.size()));
    if (s == before) break;
  }
  return s;
}

// A step is terminal iff it contains the marker followed by nothing but
// whitespace.
inline bool is_terminal_step(std::string_view text) {
  const std::size_t pos = text.rfind(kTerminalMarker);
  if (pos == std::string_view::npos) return false;
  for (std::size_t i = pos + kTerminalMarker.size(); i < text.size(); ++i)
    if (!is_space(text[i])) return false;
  return true;
}

namespace detail {

inline std::size_t rfind_ci(std::string_view hay, std::string_view needle) {
  if (needle.empty() || hay.size() < needle.size()) return std::string_view::npos;
  for (std::size_t start = hay.size() - needle.size() + 1; start-- > 0;) {
    bool match = true;
    for (std::size_t i = 0; i < needle.size(); ++i) {
      if (to_lower(hay[start + i]) != to_lower(needle[i])) {
        match = false;
        break;
      }
    }
    if (match) return start;
  }
  return std::string_view::npos;
}

}  // namespace detail

// Answer carried by a terminal step: the text between the last
// "answer is"/"answer:" cue and the marker, canonicalized. Falls back to the
// whole pre-marker text when no cue is present.
inline std::string extract_final_answer(std::string_view step_text) {
  std::string_view body = step_text;
  const std::size_t marker = body.rfind(kTerminalMarker);
  if (marker != std::string_view::npos) body = body.substr(0, marker);
  for (std::string_view cue : {std::string_view("answer is"), std::string_view("answer:")}) {
    const std::size_t pos = detail::rfind_ci(body, cue);
    if (pos != std::string_view::npos) return normalize_answer(body.substr(pos + cue.size()));
  }
  return normalize_answer(body);
}

// Value-semantics append; terminal-marker steps set final_answer.
inline ReasoningPath extend_path(const ReasoningPath& path, const ReasoningStep& step) {
  if (path.terminal()) throw Error(Errc::extend_terminal, "cannot extend a terminal path");
  ReasoningPath out = path;
  out.steps.push_back(step);
  if (is_terminal_step(step.text)) out.final_answer = extract_final_answer(step.text);
  return out;
}

// t_j = t_0 + sum of the step texts so far.
inline std::string compose_text(const MultimodalQuery& query, const ReasoningPath& path) {
  std::string out = query.text;
  for (const ReasoningStep& s : path.steps) {
    out.push_back(' ');
    out += s.text;
  }
  return out;
}

// Step texts joined; the payload for path-level embeddings and diversity.
inline std::string path_text(const ReasoningPath& path) {
  std::string out;
  for (const ReasoningStep& s : path.steps) {
    if (!out.empty()) out.push_back(' ');
    out += s.text;
  }
  return out;
}

}  // namespace armcts
