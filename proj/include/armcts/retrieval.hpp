#pragma once

// Unified retrieval (text route + cross-modal route + union), knowledge-
// concept filtering, and per-step active retrieval over the insight set.

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "armcts/common.hpp"
#include "armcts/core.hpp"
#include "armcts/corpus.hpp"
#include "armcts/embedding.hpp"
#include "armcts/index.hpp"

namespace armcts {

struct Insight {
  CorpusEntry entry;
  double sim_query = 0.0;  // cosine(candidate, query), fused embeddings
  double sim_kc = 0.0;     // cosine(candidate, concept-label text)
};

struct InsightSet {
  std::string query_id;
  std::vector<Insight> insights;  // sorted by sim_query descending
};

namespace detail {

inline Embedding fused_query_embedding(const MultimodalQuery& query,
                                       const EmbeddingProvider& provider) {
  std::optional<Embedding> img;
  if (query.image_ref.has_value()) img = provider.embed_image(*query.image_ref);
  return fuse(img, provider.embed_text(query.text));
}

inline Embedding fused_entry_embedding(const CorpusEntry& entry,
                                       const EmbeddingProvider& provider) {
  std::optional<Embedding> img;
  if (entry.image_ref.has_value()) img = provider.embed_image(*entry.image_ref);
  return fuse(img, provider.embed_text(entry.text));
}

inline std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (const std::string& l : labels) {
    if (!out.empty()) out.push_back(' ');
    out += l;
  }
  return out;
}

}  // namespace detail

// Text route: top-k of the query text embedding over the text-only index.
inline std::vector<ScoredId> retrieve_text(const MultimodalQuery& query,
                                           const VectorIndex& text_index,
                                           const EmbeddingProvider& provider, std::size_t k) {
  return top_k(text_index, provider.embed_text(query.text), k);
}

// Cross-modal route: fused query embedding over the hybrid index; a text-only
// query degenerates to its text embedding.
inline std::vector<ScoredId> retrieve_cross(const MultimodalQuery& query,
                                            const VectorIndex& hybrid_index,
                                            const EmbeddingProvider& provider, std::size_t k) {
  return top_k(hybrid_index, detail::fused_query_embedding(query, provider), k);
}

// Union of both routes deduplicated by id keeping the higher route score;
// result ordered by that score descending (ties by ascending id), size <= 2k.
inline std::vector<CorpusEntry> unified_retrieve(const MultimodalQuery& query,
                                                 const VectorIndex& text_index,
                                                 const VectorIndex& hybrid_index,
                                                 const EmbeddingProvider& provider,
                                                 const Corpus& corpus, std::size_t k) {
  std::unordered_map<std::string, double> best;
  for (const auto& route : {retrieve_text(query, text_index, provider, k),
                            retrieve_cross(query, hybrid_index, provider, k)}) {
    for (const ScoredId& s : route) {
      auto [it, inserted] = best.emplace(s.id, s.score);
      if (!inserted && s.score > it->second) it->second = s.score;
    }
  }
  std::vector<ScoredId> merged;
  merged.reserve(best.size());
  for (const auto& [id, score] : best) merged.push_back({id, score});
  std::sort(merged.begin(), merged.end(), [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::vector<CorpusEntry> out;
  out.reserve(merged.size());
  for (const ScoredId& s : merged) {
    const CorpusEntry* e = corpus.find(s.id);
    if (e == nullptr) throw Error(Errc::node_not_found, "retrieved id missing from corpus: " + s.id);
    out.push_back(*e);
  }
  return out;
}

// One row per candidate, kept or not; the retrieve report row shape.
struct KcCandidate {
  Insight insight;
  bool kept = false;
};

// Similarities for every candidate plus the kept flag under both thresholds.
// With kc filtering disabled the concept check is skipped (sim_kc still
// reported, 0 when there are no labels).
inline std::vector<KcCandidate> kc_candidates(const std::vector<CorpusEntry>& candidates,
                                              const MultimodalQuery& query,
                                              const EmbeddingProvider& provider, double t_r,
                                              double t_kc, bool kc_enabled = true) {
  if (kc_enabled && query.kc_labels.empty())
    throw Error(Errc::no_kc_labels, "query " + query.id + " has no kc_labels");
  const Embedding q_emb = detail::fused_query_embedding(query, provider);
  const Embedding kc_emb = provider.embed_text(detail::join_labels(query.kc_labels));
  std::vector<KcCandidate> out;
  out.reserve(candidates.size());
  for (const CorpusEntry& e : candidates) {
    const Embedding emb = detail::fused_entry_embedding(e, provider);
    Insight ins;
    ins.entry = e;
    ins.sim_query = cosine(emb, q_emb);
    ins.sim_kc = cosine(emb, kc_emb);
    const bool kept = ins.sim_query >= t_r && (!kc_enabled || ins.sim_kc >= t_kc);
    out.push_back({std::move(ins), kept});
  }
  return out;
}

// Candidates passing BOTH thresholds, sorted by sim_query descending
// (ties by ascending id).
inline InsightSet kc_filter(const std::vector<CorpusEntry>& candidates,
                            const MultimodalQuery& query, const EmbeddingProvider& provider,
                            double t_r, double t_kc, bool kc_enabled = true) {
  InsightSet set;
  set.query_id = query.id;
  for (KcCandidate& c : kc_candidates(candidates, query, provider, t_r, t_kc, kc_enabled))
    if (c.kept) set.insights.push_back(std::move(c.insight));
  std::sort(set.insights.begin(), set.insights.end(), [](const Insight& a, const Insight& b) {
    if (a.sim_query != b.sim_query) return a.sim_query > b.sim_query;
    return a.entry.id < b.entry.id;
  });
  return set;
}

// Step-conditioned re-ranking inside the insight set: candidates are ranked
// by cosine to the fused embedding of (query image?, query text + steps so
// far). With an empty path this reduces to ranking by similarity to the bare
// query. Returns the top b, clamped to the set size.
inline std::vector<Insight> active_retrieve(const InsightSet& insights,
                                            const MultimodalQuery& query,
                                            const ReasoningPath& path,
                                            const EmbeddingProvider& provider, std::size_t b) {
  if (b == 0 || insights.insights.empty()) return {};
  std::optional<Embedding> img;
  if (query.image_ref.has_value()) img = provider.embed_image(*query.image_ref);
  const Embedding step_query = fuse(img, provider.embed_text(compose_text(query, path)));

  std::vector<std::pair<double, std::size_t>> ranked;  // (similarity, position)
  ranked.reserve(insights.insights.size());
  for (std::size_t i = 0; i < insights.insights.size(); ++i) {
    const Embedding emb = detail::fused_entry_embedding(insights.insights[i].entry, provider);
    ranked.emplace_back(cosine(emb, step_query), i);
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b2) {
    if (a.first != b2.first) return a.first > b2.first;
    return insights.insights[a.second].entry.id < insights.insights[b2.second].entry.id;
  });
  const std::size_t take = std::min(b, ranked.size());
  std::vector<Insight> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(insights.insights[ranked[i].second]);
  return out;
}

}  // namespace armcts
