#include <doctest.h>

#include <cmath>

#include "armcts/embedding.hpp"

using namespace armcts;

// === hash embedder ============================================================

TEST_CASE("embedding: identical input yields identical vectors") {
  const Embedding a = hash_embed_text("triangle angle sum theorem", 128);
  const Embedding b = hash_embed_text("triangle angle sum theorem", 128);
  CHECK(a == b);
}

TEST_CASE("embedding: empty and punctuation-only text embed to the zero vector") {
  CHECK(l2_norm(hash_embed_text("", 64)) == 0.0);
  CHECK(l2_norm(hash_embed_text("... !!! ---", 64)) == 0.0);
}

TEST_CASE("embedding: non-empty text embeds to a unit vector") {
  CHECK(l2_norm(hash_embed_text("one token stream", 64)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("embedding: token overlap orders cosine similarity") {
  const int dim = 256;
  const Embedding base = hash_embed_text("triangle angle sum", dim);
  const Embedding close = hash_embed_text("triangle angle theorem", dim);
  const Embedding far = hash_embed_text("stock market prices", dim);
  CHECK(cosine(base, close) > cosine(base, far));
}

TEST_CASE("embedding: tokenization is case-insensitive and splits on punctuation") {
  CHECK(hash_embed_text("Alpha-Beta", 64) == hash_embed_text("alpha beta", 64));
  CHECK(hash_embed_text("a_b", 64) == hash_embed_text("a b", 64));
}

TEST_CASE("embedding: dimension below 2 is rejected") {
  CHECK_THROWS_AS(hash_embed_text("x", 1), Error);
}

// === fusion ===================================================================

TEST_CASE("embedding: fuse takes the element-wise mean when both present") {
  const Embedding img{1.0, 0.0};
  const Embedding txt{0.0, 1.0};
  const Embedding out = fuse(img, txt);
  CHECK(out == Embedding{0.5, 0.5});
}

TEST_CASE("embedding: fuse returns the text embedding when image is absent") {
  const Embedding txt{0.3, 0.4};
  CHECK(fuse(std::nullopt, txt) == txt);
}

TEST_CASE("embedding: fuse of equal vectors is the identity") {
  const Embedding v{0.1, -0.2, 0.7};
  CHECK(fuse(v, v) == v);
}

TEST_CASE("embedding: fuse rejects mismatched dimensions") {
  try {
    fuse(Embedding{1.0, 2.0}, Embedding{1.0, 2.0, 3.0});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dim_mismatch);
  }
}

// === similarity kernels =======================================================

TEST_CASE("embedding: dot and cosine basics") {
  const Embedding a{1.0, 0.0};
  const Embedding b{0.0, 1.0};
  CHECK(dot(a, b) == 0.0);
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(cosine(a, b) == doctest::Approx(0.0));
  CHECK(cosine(Embedding{0.0, 0.0}, a) == 0.0);  // zero vector rule
  CHECK_THROWS_AS(dot(a, Embedding{1.0, 2.0, 3.0}), Error);
}

TEST_CASE("embedding: provider contract via HashEmbedder") {
  const HashEmbedder provider(128);
  CHECK(provider.dim() == 128);
  CHECK(provider.embed_text("same text") == provider.embed_text("same text"));
  CHECK(provider.embed_image("figure1") == provider.embed_image("figure1"));
  CHECK(static_cast<int>(provider.embed_text("x").size()) == 128);
}
