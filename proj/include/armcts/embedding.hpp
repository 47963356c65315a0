#pragma once

// Embedding vectors, similarity kernels, the embedding-provider contract,
// the deterministic sign-hash reference embedder, and hybrid-modal fusion.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "armcts/common.hpp"

namespace armcts {

using Embedding = std::vector<double>;

inline double dot(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw Error(Errc::dim_mismatch, "dot: " + std::to_string(a.size()) + " vs " +
                                        std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Zero vectors get cosine 0 against everything.
inline double cosine(const Embedding& a, const Embedding& b) {
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

// Feature hashing with a hashed sign: every token occurrence lands in bucket
// hash>>1 mod dim with sign from the low hash bit; the accumulated vector is
// L2-normalized. Deterministic, token-overlap-correlated cosine similarity.
inline Embedding hash_embed_text(std::string_view text, int dim) {
  if (dim < 2) throw Error(Errc::precondition, "hash_embed_text: dim must be >= 2");
  Embedding v(static_cast<std::size_t>(dim), 0.0);
  for (const std::string& tok : tokenize_alnum(text)) {
    const std::uint64_t h = fnv1a64(tok);
    const std::size_t bucket = static_cast<std::size_t>((h >> 1) % static_cast<std::uint64_t>(dim));
    v[bucket] += (h & 1ull) ? 1.0 : -1.0;
  }
  const double n = l2_norm(v);
  if (n > 0.0)
    for (double& x : v) x /= n;
  return v;
}

// Behavioral contract: deterministic embeddings of fixed length dim().
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed_text(const std::string& text) const = 0;
  virtual Embedding embed_image(const std::string& image_ref) const = 0;
  virtual int dim() const = 0;
};

// Reference provider; image references are embedded as token streams, which
// keeps images opaque while still giving them overlap-driven similarity.
class HashEmbedder final : public EmbeddingProvider {
 public:
  explicit HashEmbedder(int dim) : dim_(dim) {
    if (dim < 2) throw Error(Errc::precondition, "HashEmbedder: dim must be >= 2");
  }
  Embedding embed_text(const std::string& text) const override {
    return hash_embed_text(text, dim_);
  }
  Embedding embed_image(const std::string& image_ref) const override {
    return hash_embed_text(image_ref, dim_);
  }
  int dim() const override { return dim_; }

 private:
  int dim_;
};

// Hybrid-modal fusion: element-wise mean when both modalities are present,
// the text embedding alone otherwise.
inline Embedding fuse(const std::optional<Embedding>& img, const Embedding& txt) {
  if (!img.has_value()) return txt;
  if (img->size() != txt.size())
    throw Error(Errc::dim_mismatch, "fuse: image dim " + std::to_string(img->size()) +
                                        " vs text dim " + std::to_string(txt.size()));
  Embedding out(txt.size());
  for (std::size_t i = 0; i < txt.size(); ++i) out[i] = 0.5 * ((*img)[i] + txt[i]);
  return out;
}

}  // namespace armcts
