#pragma once

// The retrieval-augmented search tree: UCB selection, expansion with per-step
// active retrieval plus a no-insight branch, one-step-rollout simulation,
// incremental-mean back-propagation, and step-level annotation export.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "armcts/common.hpp"
#include "armcts/core.hpp"
#include "armcts/corpus.hpp"
#include "armcts/embedding.hpp"
#include "armcts/generator.hpp"
#include "armcts/retrieval.hpp"

namespace armcts {

struct TreeNode {
  int node_id = 0;
  ReasoningPath state;
  std::optional<std::string> insight_id;  // absent for the no-insight branch
  int visits = 0;
  double q_value = 0.0;
  std::vector<int> children;
  std::optional<int> parent;
  bool terminal = false;
  int depth = 0;
};

struct SearchTree {
  std::vector<TreeNode> nodes;  // node_id == position
  int root = 0;
  MultimodalQuery query;
  std::uint64_t rng_seed = 0;

  const TreeNode& at(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes.size()))
      throw Error(Errc::node_not_found, "node " + std::to_string(id));
    return nodes[static_cast<std::size_t>(id)];
  }
  TreeNode& at(int id) {
    if (id < 0 || id >= static_cast<int>(nodes.size()))
      throw Error(Errc::node_not_found, "node " + std::to_string(id));
    return nodes[static_cast<std::size_t>(id)];
  }
};

inline SearchTree make_tree(MultimodalQuery query, std::uint64_t rng_seed) {
  SearchTree tree;
  tree.query = std::move(query);
  tree.rng_seed = rng_seed;
  TreeNode root;
  root.node_id = 0;
  tree.nodes.push_back(std::move(root));
  return tree;
}

struct ValueEstimate {
  double value = 0.0;      // num_correct / num_rollouts, exactly
  int num_rollouts = 0;
  int num_correct = 0;
};

struct PreferencePair {
  std::string query_id;
  ReasoningPath prefix;
  ReasoningStep preferred;
  ReasoningStep dispreferred;
  double v_pos = 0.0;
  double v_neg = 0.0;
};

struct StepAnnotation {
  std::string query_id;
  ReasoningPath prefix;
  ReasoningStep step;
  int label = 0;       // 1 above the value threshold, 0 at value zero
  double value = 0.0;  // the node's Q
};

// Upper confidence bound of one child edge. Unvisited children force
// exploration with +infinity. The default variant follows the log-of-ratio
// form sqrt(2*ln(N_parent/n_child)); standard UCT is available as the
// escape hatch. Callers guarantee parent_visits >= child.visits.
inline double ucb_score(const TreeNode& child, int parent_visits, double c, UcbVariant variant) {
  if (child.visits == 0) return std::numeric_limits<double>::infinity();
  if (parent_visits <= 0)
    throw Error(Errc::non_positive_visits,
                "parent visits " + std::to_string(parent_visits) + " with visited child");
  const double np = static_cast<double>(parent_visits);
  const double nc = static_cast<double>(child.visits);
  const double explore = variant == UcbVariant::paper_literal
                             ? std::sqrt(2.0 * std::log(np / nc))
                             : std::sqrt(2.0 * std::log(np) / nc);
  return child.q_value + c * explore;
}

// Root-to-leaf descent by UCB argmax, ties to the smallest node id; stops at
// a childless or terminal node. Returns the node ids along the way.
inline std::vector<int> select_leaf(const SearchTree& tree, const EngineConfig& config) {
  std::vector<int> path;
  int cur = tree.root;
  path.push_back(cur);
  for (;;) {
    const TreeNode& node = tree.at(cur);
    if (node.terminal || node.children.empty()) break;
    int best_id = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    bool best_inf = false;
    for (int child_id : node.children) {
      const double s = ucb_score(tree.at(child_id), node.visits, config.c_explore,
                                 config.ucb_variant);
      const bool inf = std::isinf(s) && s > 0;
      // Strict comparisons keep the first (smallest-id) argmax; children are
      // stored in creation order, which is ascending id.
      if (best_id < 0 || (inf && !best_inf) || (inf == best_inf && s > best_score)) {
        best_id = child_id;
        best_score = s;
        best_inf = inf;
      }
    }
    cur = best_id;
    path.push_back(cur);
  }
  return path;
}

// Expansion: active retrieval picks the top-B insights for the leaf's state;
// one child is generated per insight plus exactly one no-insight child (in
// that order). The parent's own insight is not carried into the prompts.
// Children start with visits = 0, q = 0.
inline std::vector<int> expand(SearchTree& tree, int leaf_id, const GeneratorBackend& generator,
                               const InsightSet& insights, const EmbeddingProvider& provider,
                               const EngineConfig& config) {
  TreeNode& leaf = tree.at(leaf_id);
  if (leaf.terminal) throw Error(Errc::expand_terminal, "node " + std::to_string(leaf_id));
  if (leaf.depth >= config.max_depth)
    throw Error(Errc::depth_exceeded, "node " + std::to_string(leaf_id) + " at depth " +
                                          std::to_string(leaf.depth));
  const std::vector<Insight> ranked =
      active_retrieve(insights, tree.query, leaf.state, provider,
                      static_cast<std::size_t>(config.beam_b));

  std::vector<int> new_ids;
  const ReasoningPath leaf_state = leaf.state;  // leaf reference invalidated by push_back
  const int leaf_depth = leaf.depth;
  for (std::size_t idx = 0; idx <= ranked.size(); ++idx) {
    const Insight* insight = idx < ranked.size() ? &ranked[idx] : nullptr;
    const std::uint64_t seed =
        mix(tree.rng_seed, static_cast<std::uint64_t>(leaf_id), static_cast<std::uint64_t>(idx));
    ReasoningStep step;
    try {
      step = generator.generate_step(tree.query, leaf_state, insight, config.temperature, seed);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      throw Error(Errc::generator_failure, ex.what());
    }
    step.insight_id = insight ? std::optional<std::string>(insight->entry.id) : std::nullopt;

    TreeNode child;
    child.node_id = static_cast<int>(tree.nodes.size());
    child.state = extend_path(leaf_state, step);
    child.insight_id = step.insight_id;
    child.parent = leaf_id;
    child.terminal = child.state.terminal();
    child.depth = leaf_depth + 1;
    tree.nodes.push_back(std::move(child));
    tree.at(leaf_id).children.push_back(static_cast<int>(tree.nodes.size()) - 1);
    new_ids.push_back(static_cast<int>(tree.nodes.size()) - 1);
  }
  return new_ids;
}

// One-step rollout value: the fraction of k completions whose normalized
// final answer matches the normalized answer key. Already-terminal nodes
// bypass rollouts and score their own answer.
inline ValueEstimate simulate(const SearchTree& tree, int node_id,
                              const GeneratorBackend& generator, const EngineConfig& config) {
  if (!tree.query.answer_key.has_value())
    throw Error(Errc::missing_answer_key, "query " + tree.query.id);
  const std::string key = normalize_answer(*tree.query.answer_key);
  const TreeNode& node = tree.at(node_id);

  ValueEstimate est;
  if (node.terminal) {
    est.num_rollouts = 1;
    est.num_correct =
        node.state.final_answer.has_value() && normalize_answer(*node.state.final_answer) == key
            ? 1
            : 0;
    est.value = static_cast<double>(est.num_correct);
    return est;
  }

  est.num_rollouts = config.k_rollouts;
  for (int j = 0; j < config.k_rollouts; ++j) {
    const std::uint64_t seed = mix(tree.rng_seed, static_cast<std::uint64_t>(node_id),
                                   0x524f4c4cull + static_cast<std::uint64_t>(j));
    ReasoningPath rollout;
    try {
      rollout =
          generator.generate_completion(tree.query, node.state, nullptr, config.temperature, seed);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      throw Error(Errc::generator_failure, ex.what());
    }
    if (rollout.final_answer.has_value() && normalize_answer(*rollout.final_answer) == key)
      ++est.num_correct;
  }
  est.value = static_cast<double>(est.num_correct) / static_cast<double>(est.num_rollouts);
  return est;
}

// Visit-count increment then incremental-mean update, from the node up to and
// including the root.
inline void backprop(SearchTree& tree, int node_id, double v) {
  int cur = node_id;
  for (;;) {
    TreeNode& node = tree.at(cur);
    node.visits += 1;
    node.q_value += (v - node.q_value) / static_cast<double>(node.visits);
    if (!node.parent.has_value()) break;
    cur = *node.parent;
  }
}

// One annotation search: `rounds` iterations of select / expand / simulate
// each new child / back-propagate. Re-selected terminal or depth-capped
// leaves are re-simulated directly, which keeps every round contributing
// exactly its simulations to the root's visit count.
inline SearchTree run_annotation(const MultimodalQuery& query, const InsightSet& insights,
                                 const GeneratorBackend& generator,
                                 const EmbeddingProvider& provider, const EngineConfig& config,
                                 int rounds) {
  if (!query.answer_key.has_value())
    throw Error(Errc::missing_answer_key, "query " + query.id);
  SearchTree tree = make_tree(query, mix(config.seed, fnv1a64(query.id)));
  for (int round = 0; round < rounds; ++round) {
    const std::vector<int> path = select_leaf(tree, config);
    const int leaf_id = path.back();
    const TreeNode& leaf = tree.at(leaf_id);
    if (leaf.terminal || leaf.depth >= config.max_depth) {
      backprop(tree, leaf_id, simulate(tree, leaf_id, generator, config).value);
      continue;
    }
    for (int child_id : expand(tree, leaf_id, generator, insights, provider, config))
      backprop(tree, child_id, simulate(tree, child_id, generator, config).value);
  }
  return tree;
}

// Per parent: positives are children with Q above the threshold, negatives
// are visited children with Q exactly zero; both rank-sorted (Q descending,
// then node id) and zipped into min(#pos, #neg) pairs.
inline std::vector<PreferencePair> extract_pairs(const SearchTree& tree,
                                                 const EngineConfig& config) {
  std::vector<PreferencePair> pairs;
  for (const TreeNode& parent : tree.nodes) {
    if (parent.children.empty()) continue;
    std::vector<const TreeNode*> pos, neg;
    for (int child_id : parent.children) {
      const TreeNode& child = tree.at(child_id);
      if (child.visits < 1) continue;
      if (child.q_value > config.pos_value_threshold)
        pos.push_back(&child);
      else if (child.q_value == 0.0)
        neg.push_back(&child);
    }
    const auto rank = [](const TreeNode* a, const TreeNode* b) {
      if (a->q_value != b->q_value) return a->q_value > b->q_value;
      return a->node_id < b->node_id;
    };
    std::sort(pos.begin(), pos.end(), rank);
    std::sort(neg.begin(), neg.end(), rank);
    const std::size_t n = std::min(pos.size(), neg.size());
    for (std::size_t i = 0; i < n; ++i) {
      PreferencePair p;
      p.query_id = tree.query.id;
      p.prefix = parent.state;
      p.preferred = pos[i]->state.steps.back();
      p.dispreferred = neg[i]->state.steps.back();
      p.v_pos = pos[i]->q_value;
      p.v_neg = 0.0;
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

// One annotation per visited non-root node at the two unambiguous extremes:
// label 1 above the threshold, label 0 at exactly zero; everything in between
// is excluded.
inline std::vector<StepAnnotation> extract_point_labels(const SearchTree& tree,
                                                        const EngineConfig& config) {
  std::vector<StepAnnotation> labels;
  for (const TreeNode& node : tree.nodes) {
    if (!node.parent.has_value() || node.visits < 1) continue;
    int label = -1;
    if (node.q_value > config.pos_value_threshold)
      label = 1;
    else if (node.q_value == 0.0)
      label = 0;
    if (label < 0) continue;
    StepAnnotation a;
    a.query_id = tree.query.id;
    a.prefix = tree.at(*node.parent).state;
    a.step = node.state.steps.back();
    a.label = label;
    a.value = node.q_value;
    labels.push_back(std::move(a));
  }
  return labels;
}

// ---- Serialization ----------------------------------------------------------

inline json to_json(const TreeNode& node) {
  json j;
  j["node_id"] = node.node_id;
  j["parent"] = node.parent.has_value() ? json(*node.parent) : json(nullptr);
  j["depth"] = node.depth;
  j["insight_id"] = node.insight_id.has_value() ? json(*node.insight_id) : json(nullptr);
  j["visits"] = node.visits;
  j["q_value"] = node.q_value;
  j["terminal"] = node.terminal;
  j["step_text"] = node.state.steps.empty() ? std::string() : node.state.steps.back().text;
  return j;
}

inline std::string serialize_tree(const SearchTree& tree) {
  std::string out;
  for (const TreeNode& node : tree.nodes) {
    out += to_json(node).dump();
    out.push_back('\n');
  }
  return out;
}

inline json to_json(const ReasoningStep& step) {
  json j;
  j["text"] = step.text;
  j["insight_id"] = step.insight_id.has_value() ? json(*step.insight_id) : json(nullptr);
  return j;
}

inline json to_json(const ReasoningPath& path) {
  json steps = json::array();
  for (const ReasoningStep& s : path.steps) steps.push_back(to_json(s));
  json j;
  j["steps"] = steps;
  j["final_answer"] = path.final_answer.has_value() ? json(*path.final_answer) : json(nullptr);
  return j;
}

inline json to_json(const PreferencePair& p) {
  json j;
  j["query_id"] = p.query_id;
  j["prefix"] = to_json(p.prefix);
  j["preferred"] = to_json(p.preferred);
  j["dispreferred"] = to_json(p.dispreferred);
  j["v_pos"] = p.v_pos;
  j["v_neg"] = p.v_neg;
  return j;
}

inline json to_json(const StepAnnotation& a) {
  json j;
  j["query_id"] = a.query_id;
  j["prefix"] = to_json(a.prefix);
  j["step"] = to_json(a.step);
  j["label"] = a.label;
  j["value"] = a.value;
  return j;
}

inline ReasoningStep step_from_json(const json& j) {
  ReasoningStep s;
  s.text = j.at("text").get<std::string>();
  if (j.contains("insight_id") && !j["insight_id"].is_null())
    s.insight_id = j["insight_id"].get<std::string>();
  return s;
}

inline ReasoningPath path_from_json(const json& j) {
  ReasoningPath p;
  for (const auto& s : j.at("steps")) p.steps.push_back(step_from_json(s));
  if (j.contains("final_answer") && !j["final_answer"].is_null())
    p.final_answer = j["final_answer"].get<std::string>();
  return p;
}

inline PreferencePair pair_from_json(const json& j) {
  PreferencePair p;
  p.query_id = j.at("query_id").get<std::string>();
  p.prefix = path_from_json(j.at("prefix"));
  p.preferred = step_from_json(j.at("preferred"));
  p.dispreferred = step_from_json(j.at("dispreferred"));
  p.v_pos = j.at("v_pos").get<double>();
  p.v_neg = j.at("v_neg").get<double>();
  return p;
}

inline StepAnnotation annotation_from_json(const json& j) {
  StepAnnotation a;
  a.query_id = j.at("query_id").get<std::string>();
  a.prefix = path_from_json(j.at("prefix"));
  a.step = step_from_json(j.at("step"));
  a.label = j.at("label").get<int>();
  a.value = j.at("value").get<double>();
  return a;
}

}  // namespace armcts
