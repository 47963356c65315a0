#pragma once

// Exact dense vector index: build (text-only or hybrid-fused embeddings) and
// exhaustive top-K by dot product with a documented tie rule.

#include <algorithm>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "armcts/common.hpp"
#include "armcts/corpus.hpp"
#include "armcts/embedding.hpp"

namespace armcts {

struct VectorIndex {
  std::vector<std::pair<std::string, Embedding>> entries;
  int dim = 0;
};

struct ScoredId {
  std::string id;
  double score = 0.0;
  bool operator==(const ScoredId&) const = default;
};

namespace detail {

template <typename EmbedFn>
VectorIndex build_index_with(const std::vector<CorpusEntry>& entries,
                             const EmbeddingProvider& provider, EmbedFn embed) {
  VectorIndex index;
  index.dim = provider.dim();
  index.entries.reserve(entries.size());
  std::unordered_set<std::string> seen;
  seen.reserve(entries.size());
  for (const CorpusEntry& e : entries) {
    if (!seen.insert(e.id).second) throw Error(Errc::duplicate_id, "index id: " + e.id);
    index.entries.emplace_back(e.id, embed(e));
  }
  return index;
}

}  // namespace detail

// Hybrid index: image embedding fused with the text embedding when present.
inline VectorIndex build_index(const std::vector<CorpusEntry>& entries,
                               const EmbeddingProvider& provider) {
  return detail::build_index_with(entries, provider, [&](const CorpusEntry& e) {
    std::optional<Embedding> img;
    if (e.image_ref.has_value()) img = provider.embed_image(*e.image_ref);
    return fuse(img, provider.embed_text(e.text));
  });
}

// Text-only index over the same corpus (the text retrieval route).
inline VectorIndex build_text_index(const std::vector<CorpusEntry>& entries,
                                    const EmbeddingProvider& provider) {
  return detail::build_index_with(
      entries, provider, [&](const CorpusEntry& e) { return provider.embed_text(e.text); });
}

// Exhaustive top-k by dot product; descending score, ties by ascending id.
inline std::vector<ScoredId> top_k(const VectorIndex& index, const Embedding& query,
                                   std::size_t k) {
  if (static_cast<int>(query.size()) != index.dim)
    throw Error(Errc::dim_mismatch, "top_k: query dim " + std::to_string(query.size()) +
                                        " vs index dim " + std::to_string(index.dim));
  std::vector<ScoredId> scored;
  scored.reserve(index.entries.size());
  for (const auto& [id, emb] : index.entries) scored.push_back({id, dot(query, emb)});
  const auto better = [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), better);
  scored.resize(take);
  return scored;
}

inline json to_json(const VectorIndex& index) {
  json entries = json::array();
  for (const auto& [id, emb] : index.entries) entries.push_back({{"id", id}, {"values", emb}});
  return json{{"dim", index.dim}, {"entries", entries}};
}

inline VectorIndex vector_index_from_json(const json& j) {
  VectorIndex index;
  index.dim = j.at("dim").get<int>();
  for (const auto& e : j.at("entries")) {
    Embedding emb = e.at("values").get<Embedding>();
    if (static_cast<int>(emb.size()) != index.dim)
      throw Error(Errc::dim_mismatch, "stored embedding dim mismatch");
    index.entries.emplace_back(e.at("id").get<std::string>(), std::move(emb));
  }
  return index;
}

}  // namespace armcts
