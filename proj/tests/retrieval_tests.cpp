#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "armcts/retrieval.hpp"

using namespace armcts;

namespace {

const int kDim = 256;

MultimodalQuery geometry_query() {
  return {"q_geo", "triangle angle sum problem", std::nullopt, {"geometry", "concept"},
          std::nullopt};
}

Corpus kc_corpus() {
  std::vector<CorpusEntry> entries{
      // overlaps both the query and the concept labels
      {"keep", "triangle angle sum geometry concept", std::nullopt, "s"},
      // overlaps the labels only
      {"drop_q", "geometry concept unrelated", std::nullopt, "s"},
      // overlaps the query only
      {"drop_kc", "triangle angle sum problem extra", std::nullopt, "s"},
      // overlaps nothing
      {"drop_both", "entirely different tokens about finance", std::nullopt, "s"},
  };
  return Corpus::from(std::move(entries));
}

}  // namespace

// === kc filtering =============================================================

TEST_CASE("retrieval: kc_filter keeps only entries passing both thresholds") {
  const HashEmbedder embedder(kDim);
  const Corpus corpus = kc_corpus();
  const MultimodalQuery query = geometry_query();

  const InsightSet set = kc_filter(corpus.entries, query, embedder, 0.5, 0.5, true);
  REQUIRE(set.insights.size() == 1);
  CHECK(set.query_id == "q_geo");
  CHECK(set.insights[0].entry.id == "keep");
  // token-overlap cosines for the surviving entry:
  //   sim_query = 3 / (sqrt(5)*sqrt(4)),  sim_kc = 2 / (sqrt(5)*sqrt(2))
  CHECK(set.insights[0].sim_query == doctest::Approx(3.0 / std::sqrt(20.0)).epsilon(1e-9));
  CHECK(set.insights[0].sim_kc == doctest::Approx(2.0 / std::sqrt(10.0)).epsilon(1e-9));
}

TEST_CASE("retrieval: disabling the concept check admits query-only matches") {
  const HashEmbedder embedder(kDim);
  const InsightSet set =
      kc_filter(kc_corpus().entries, geometry_query(), embedder, 0.5, 0.5, false);
  std::set<std::string> ids;
  for (const Insight& i : set.insights) ids.insert(i.entry.id);
  CHECK(ids == std::set<std::string>{"keep", "drop_kc"});
}

TEST_CASE("retrieval: concept filtering without labels is an error") {
  const HashEmbedder embedder(kDim);
  MultimodalQuery query = geometry_query();
  query.kc_labels.clear();
  try {
    kc_filter(kc_corpus().entries, query, embedder, 0.5, 0.5, true);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_kc_labels);
  }
  // ...but fine when the check is disabled.
  CHECK_NOTHROW(kc_filter(kc_corpus().entries, query, embedder, 0.5, 0.5, false));
}

TEST_CASE("retrieval: kc_candidates reports one row per candidate with kept flags") {
  const HashEmbedder embedder(kDim);
  const auto rows = kc_candidates(kc_corpus().entries, geometry_query(), embedder, 0.5, 0.5);
  REQUIRE(rows.size() == 4);
  int kept = 0;
  for (const auto& row : rows) kept += row.kept ? 1 : 0;
  CHECK(kept == 1);
}

TEST_CASE("retrieval: insight set is ordered by query similarity, ids break ties") {
  const HashEmbedder embedder(kDim);
  std::vector<CorpusEntry> entries{
      {"b_mid", "triangle angle geometry concept", std::nullopt, "s"},
      {"a_top", "triangle angle sum problem geometry concept", std::nullopt, "s"},
      {"c_tie", "triangle angle geometry concept", std::nullopt, "s"},  // same text as b_mid
  };
  const InsightSet set = kc_filter(entries, geometry_query(), embedder, 0.3, 0.3, true);
  REQUIRE(set.insights.size() == 3);
  CHECK(set.insights[0].entry.id == "a_top");
  CHECK(set.insights[1].entry.id == "b_mid");  // tie with c_tie -> ascending id
  CHECK(set.insights[2].entry.id == "c_tie");
}

// === unified retrieval ========================================================

TEST_CASE("retrieval: unified route deduplicates on the max score and honors k") {
  const HashEmbedder embedder(kDim);
  std::vector<CorpusEntry> entries{
      {"t1", "triangle angle sum problem", std::nullopt, "s"},
      {"t2", "triangle angle", std::nullopt, "s"},
      {"v1", "diagram of the figure", std::string("fig_triangle.png"), "s"},
      {"t3", "completely unrelated finance text", std::nullopt, "s"},
  };
  const Corpus corpus = Corpus::from(std::move(entries));
  const VectorIndex text_index = build_text_index(corpus.entries, embedder);
  const VectorIndex hybrid_index = build_index(corpus.entries, embedder);

  const MultimodalQuery query{"q1", "triangle angle sum problem",
                              std::string("fig_triangle.png"), {"geometry"}, std::nullopt};
  const std::size_t k = 3;
  const auto out = unified_retrieve(query, text_index, hybrid_index, embedder, corpus, k);

  // no duplicates, bounded by 2k, best text match present
  std::set<std::string> ids;
  for (const CorpusEntry& e : out) ids.insert(e.id);
  CHECK(ids.size() == out.size());
  CHECK(out.size() <= 2 * k);
  CHECK(ids.count("t1") == 1);
  // image-bearing entry should enter via the cross-modal route
  CHECK(ids.count("v1") == 1);
}

TEST_CASE("retrieval: unified scores decay monotonically with id tiebreak") {
  const HashEmbedder embedder(kDim);
  std::vector<CorpusEntry> entries{
      {"a", "alpha beta gamma", std::nullopt, "s"},
      {"b", "alpha beta", std::nullopt, "s"},
      {"c", "alpha", std::nullopt, "s"},
  };
  const Corpus corpus = Corpus::from(std::move(entries));
  const VectorIndex text_index = build_text_index(corpus.entries, embedder);
  const VectorIndex hybrid_index = build_index(corpus.entries, embedder);
  const MultimodalQuery query{"q", "alpha beta gamma", std::nullopt, {}, std::nullopt};
  const auto out = unified_retrieve(query, text_index, hybrid_index, embedder, corpus, 3);
  REQUIRE(out.size() == 3);
  CHECK(out[0].id == "a");
  CHECK(out[1].id == "b");
  CHECK(out[2].id == "c");
}

// === active retrieval =========================================================

TEST_CASE("retrieval: step context re-ranks the insight set") {
  const HashEmbedder embedder(kDim);
  const MultimodalQuery query{"q", "alpha beta gamma", std::nullopt, {}, std::nullopt};
  InsightSet set;
  set.query_id = "q";
  Insight a;
  a.entry = {"ins_a", "alpha beta gamma", std::nullopt, "s"};
  Insight b;
  b.entry = {"ins_b", "delta epsilon zeta", std::nullopt, "s"};
  set.insights = {a, b};

  // Bare query: exact-match entry first.
  ReasoningPath empty_path;
  const auto bare = active_retrieve(set, query, empty_path, embedder, 2);
  REQUIRE(bare.size() == 2);
  CHECK(bare[0].entry.id == "ins_a");
  CHECK(bare[1].entry.id == "ins_b");

  // After steps dominated by the other entry's tokens, the ranking flips.
  ReasoningPath path;
  path.steps.push_back({"delta epsilon zeta delta epsilon zeta", std::nullopt});
  path.steps.push_back({"delta epsilon zeta again delta epsilon zeta", std::nullopt});
  const auto flipped = active_retrieve(set, query, path, embedder, 2);
  REQUIRE(flipped.size() == 2);
  CHECK(flipped[0].entry.id == "ins_b");
  CHECK(flipped[1].entry.id == "ins_a");
}

TEST_CASE("retrieval: active retrieval edge cases") {
  const HashEmbedder embedder(kDim);
  const MultimodalQuery query{"q", "alpha beta", std::nullopt, {}, std::nullopt};
  InsightSet set;
  set.query_id = "q";
  Insight a;
  a.entry = {"only", "alpha beta", std::nullopt, "s"};
  set.insights = {a};
  ReasoningPath path;

  CHECK(active_retrieve(set, query, path, embedder, 0).empty());
  CHECK(active_retrieve(InsightSet{"q", {}}, query, path, embedder, 3).empty());
  // b larger than the set clamps to the set size
  CHECK(active_retrieve(set, query, path, embedder, 10).size() == 1);
}
