#pragma once

// Shared plumbing: error codes, stable 64-bit hashing, stateless seed mixing,
// and the two tokenizers used across the library.

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace armcts {

enum class Errc {
  precondition,
  extend_terminal,
  dim_mismatch,
  duplicate_id,
  embed_failure,
  empty_testset,
  file_not_found,
  all_lines_rejected,
  no_kc_labels,
  non_positive_visits,
  expand_terminal,
  depth_exceeded,
  generator_failure,
  missing_answer_key,
  node_not_found,
  unknown_step,
  empty_batch,
  non_finite_gradient,
  empty_answer_set,
  non_terminal_path,
  empty_path_set,
  endpoint_unreachable,
  malformed_reply,
  rate_limited,
  empty_record_set,
  too_few_paths,
  config_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::precondition: return "Precondition";
    case Errc::extend_terminal: return "ExtendTerminal";
    case Errc::dim_mismatch: return "DimMismatch";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::embed_failure: return "EmbedFailure";
    case Errc::empty_testset: return "EmptyTestset";
    case Errc::file_not_found: return "FileNotFound";
    case Errc::all_lines_rejected: return "AllLinesRejected";
    case Errc::no_kc_labels: return "NoKcLabels";
    case Errc::non_positive_visits: return "NonPositiveVisits";
    case Errc::expand_terminal: return "ExpandTerminal";
    case Errc::depth_exceeded: return "DepthExceeded";
    case Errc::generator_failure: return "GeneratorFailure";
    case Errc::missing_answer_key: return "MissingAnswerKey";
    case Errc::node_not_found: return "NodeNotFound";
    case Errc::unknown_step: return "UnknownStep";
    case Errc::empty_batch: return "EmptyBatch";
    case Errc::non_finite_gradient: return "NonFiniteGradient";
    case Errc::empty_answer_set: return "EmptyAnswerSet";
    case Errc::non_terminal_path: return "NonTerminalPath";
    case Errc::empty_path_set: return "EmptyPathSet";
    case Errc::endpoint_unreachable: return "EndpointUnreachable";
    case Errc::malformed_reply: return "MalformedReply";
    case Errc::rate_limited: return "RateLimited";
    case Errc::empty_record_set: return "EmptyRecordSet";
    case Errc::too_few_paths: return "TooFewPaths";
    case Errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// FNV-1a. std::hash is not guaranteed stable across runs/platforms, so every
// hash that feeds embeddings or seeds goes through this.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64 finalizer; the basis of all stateless seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(a, b), c);
}

// Uniform double in [0, 1) from a mixed seed (53 mantissa bits).
inline double u01(std::uint64_t seed) {
  return static_cast<double>(mix64(seed) >> 11) * 0x1.0p-53;
}

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
inline char to_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline std::string lowercase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(to_lower(c));
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Lowercased maximal alphanumeric runs; the embedder's token stream.
inline std::vector<std::string> tokenize_alnum(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (is_alnum(c)) {
      cur.push_back(to_lower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

// Whitespace split, lowercased, punctuation stripped from token edges;
// the n-gram overlap token stream.
inline std::vector<std::string> tokenize_ngram(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < n && !is_space(text[j])) ++j;
    if (j > i) {
      std::size_t b = i, e = j;
      while (b < e && !is_alnum(text[b])) ++b;
      while (e > b && !is_alnum(text[e - 1])) --e;
      if (e > b) {
        std::string tok;
        tok.reserve(e - b);
        for (std::size_t k = b; k < e; ++k) tok.push_back(to_lower(text[k]));
        tokens.push_back(std::move(tok));
      }
    }
    i = j;
  }
  return tokens;
}

}  // namespace armcts
