#pragma once

// Corpus entries, JSONL ingestion with a rejects report, character chunking,
// and n-gram contamination screening.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "armcts/common.hpp"
#include "armcts/core.hpp"

namespace armcts {

using json = nlohmann::json;

struct CorpusEntry {
  std::string id;
  std::string text;                      // question + solution + answer
  std::optional<std::string> image_ref;  // opaque
  std::string source;
  std::vector<std::string> kc_labels;
};

// Entries plus an id lookup, built once and shared read-only.
struct Corpus {
  std::vector<CorpusEntry> entries;
  std::unordered_map<std::string, std::size_t> by_id;

  static Corpus from(std::vector<CorpusEntry> list) {
    Corpus c;
    c.entries = std::move(list);
    c.by_id.reserve(c.entries.size());
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
      auto [it, inserted] = c.by_id.emplace(c.entries[i].id, i);
      if (!inserted) throw Error(Errc::duplicate_id, "corpus id: " + c.entries[i].id);
    }
    return c;
  }

  const CorpusEntry* find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &entries[it->second];
  }
};

// ---- JSON (de)serialization -------------------------------------------------

inline json to_json(const CorpusEntry& e) {
  json j;
  j["id"] = e.id;
  j["text"] = e.text;
  j["image_ref"] = e.image_ref.has_value() ? json(*e.image_ref) : json(nullptr);
  j["source"] = e.source;
  j["kc_labels"] = e.kc_labels;
  return j;
}

inline json to_json(const MultimodalQuery& q) {
  json j;
  j["id"] = q.id;
  j["text"] = q.text;
  j["image_ref"] = q.image_ref.has_value() ? json(*q.image_ref) : json(nullptr);
  j["kc_labels"] = q.kc_labels;
  j["answer_key"] = q.answer_key.has_value() ? json(*q.answer_key) : json(nullptr);
  return j;
}

namespace detail {

inline std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::precondition, std::string(key) + " must be a string or null");
  return it->get<std::string>();
}

inline std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw Error(Errc::precondition, std::string(key) + " must be an array");
  for (const auto& v : *it) {
    if (!v.is_string()) throw Error(Errc::precondition, std::string(key) + " items must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

// Unknown fields are ignored; id and non-empty text are required.
inline CorpusEntry corpus_entry_from_json(const json& j) {
  CorpusEntry e;
  if (!j.is_object()) throw Error(Errc::precondition, "record must be an object");
  if (!j.contains("id") || !j["id"].is_string())
    throw Error(Errc::precondition, "missing string field: id");
  if (!j.contains("text") || !j["text"].is_string())
    throw Error(Errc::precondition, "missing string field: text");
  e.id = j["id"].get<std::string>();
  e.text = j["text"].get<std::string>();
  if (e.text.empty()) throw Error(Errc::precondition, "text must be non-empty");
  e.image_ref = detail::opt_string(j, "image_ref");
  e.source = j.contains("source") && j["source"].is_string() ? j["source"].get<std::string>() : "";
  e.kc_labels = detail::string_list(j, "kc_labels");
  return e;
}

inline MultimodalQuery query_from_json(const json& j) {
  MultimodalQuery q;
  if (!j.is_object()) throw Error(Errc::precondition, "record must be an object");
  if (!j.contains("id") || !j["id"].is_string())
    throw Error(Errc::precondition, "missing string field: id");
  if (!j.contains("text") || !j["text"].is_string())
    throw Error(Errc::precondition, "missing string field: text");
  q.id = j["id"].get<std::string>();
  q.text = j["text"].get<std::string>();
  if (q.text.empty()) throw Error(Errc::precondition, "text must be non-empty");
  q.image_ref = detail::opt_string(j, "image_ref");
  q.kc_labels = detail::string_list(j, "kc_labels");
  q.answer_key = detail::opt_string(j, "answer_key");
  return q;
}

struct RejectRecord {
  int line = 0;          // 1-based
  std::string reason;
};

template <typename T>
struct ParsedLines {
  std::vector<T> items;
  std::vector<RejectRecord> rejects;
};

template <typename T, typename ParseFn>
ParsedLines<T> parse_jsonl_stream(std::istream& in, ParseFn parse) {
  ParsedLines<T> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty()) continue;
    try {
      out.items.push_back(parse(json::parse(body)));
    } catch (const std::exception& ex) {
      out.rejects.push_back({line_no, ex.what()});
    }
  }
  return out;
}

struct IngestResult {
  std::vector<CorpusEntry> entries;
  std::vector<RejectRecord> rejects;
};

// Malformed lines are collected, not fatal — unless nothing parses at all.
inline IngestResult ingest_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  auto parsed = parse_jsonl_stream<CorpusEntry>(in, corpus_entry_from_json);
  if (parsed.items.empty())
    throw Error(Errc::all_lines_rejected, path + " yielded no usable records");
  return {std::move(parsed.items), std::move(parsed.rejects)};
}

inline std::vector<MultimodalQuery> load_queries_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  auto parsed = parse_jsonl_stream<MultimodalQuery>(in, query_from_json);
  if (parsed.items.empty())
    throw Error(Errc::all_lines_rejected, path + " yielded no usable records");
  return std::move(parsed.items);
}

// ---- Chunking ---------------------------------------------------------------

// Consecutive disjoint slices of exactly `size` characters, shorter final
// slice allowed; concatenation reproduces the input.
inline std::vector<std::string> chunk_text(std::string_view doc, std::size_t size) {
  if (size < 1) throw Error(Errc::precondition, "chunk_text: size must be >= 1");
  std::vector<std::string> chunks;
  for (std::size_t i = 0; i < doc.size(); i += size)
    chunks.emplace_back(doc.substr(i, size));
  return chunks;
}

// ---- N-gram contamination ---------------------------------------------------

namespace detail {

// N-grams joined with a unit separator so distinct token sequences cannot
// collide.
inline void collect_ngrams(const std::vector<std::string>& tokens, std::size_t n,
                           std::unordered_set<std::string>& out) {
  if (tokens.size() < n) return;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t j = 0; j < n; ++j) {
      if (j) key.push_back('\x1f');
      key += tokens[i + j];
    }
    out.insert(std::move(key));
  }
}

}  // namespace detail

// True iff the two texts share at least one contiguous n-token sequence.
inline bool ngram_contaminated(std::string_view a, std::string_view b, std::size_t n) {
  if (n < 1) throw Error(Errc::precondition, "ngram_contaminated: n must be >= 1");
  const auto ta = tokenize_ngram(a);
  const auto tb = tokenize_ngram(b);
  if (ta.size() < n || tb.size() < n) return false;
  std::unordered_set<std::string> grams;
  detail::collect_ngrams(ta, n, grams);
  std::string key;
  for (std::size_t i = 0; i + n <= tb.size(); ++i) {
    key.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j) key.push_back('\x1f');
      key += tb[i + j];
    }
    if (grams.count(key)) return true;
  }
  return false;
}

struct ContaminationReport {
  double overall = 0.0;                          // contaminated / corpus size
  std::map<std::string, double> by_source;       // same rate per source
  std::vector<std::string> contaminated_ids;     // corpus ids flagged
};

// Fraction of corpus entries sharing an n-gram with ANY test query. A single
// n-gram set over the whole testset is equivalent to the per-query check.
inline ContaminationReport contamination_report(const std::vector<CorpusEntry>& corpus,
                                                const std::vector<MultimodalQuery>& testset,
                                                std::size_t n) {
  if (n < 1) throw Error(Errc::precondition, "contamination_report: n must be >= 1");
  if (testset.empty()) throw Error(Errc::empty_testset, "testset is empty");
  std::unordered_set<std::string> grams;
  for (const auto& q : testset) detail::collect_ngrams(tokenize_ngram(q.text), n, grams);

  ContaminationReport report;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_source;  // hits, total
  std::size_t hits = 0;
  std::string key;
  for (const auto& e : corpus) {
    auto& bucket = per_source[e.source];
    ++bucket.second;
    const auto tokens = tokenize_ngram(e.text);
    bool contaminated = false;
    if (tokens.size() >= n && !grams.empty()) {
      for (std::size_t i = 0; i + n <= tokens.size() && !contaminated; ++i) {
        key.clear();
        for (std::size_t j = 0; j < n; ++j) {
          if (j) key.push_back('\x1f');
          key += tokens[i + j];
        }
        contaminated = grams.count(key) > 0;
      }
    }
    if (contaminated) {
      ++hits;
      ++bucket.first;
      report.contaminated_ids.push_back(e.id);
    }
  }
  report.overall = corpus.empty() ? 0.0 : static_cast<double>(hits) / corpus.size();
  for (const auto& [source, counts] : per_source)
    report.by_source[source] =
        counts.second == 0 ? 0.0 : static_cast<double>(counts.first) / counts.second;
  return report;
}

inline double contamination_rate(const std::vector<CorpusEntry>& corpus,
                                 const std::vector<MultimodalQuery>& testset, std::size_t n) {
  return contamination_report(corpus, testset, n).overall;
}

}  // namespace armcts
