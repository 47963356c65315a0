#pragma once

// Synthetic knowledge-gated reasoning environment: generated tasks whose
// steps succeed with probability p_hi when the matching knowledge card is
// supplied and p_lo otherwise, a corpus of cards and distractors tuned so the
// hash embedder retrieves each task's own cards, a gated mock generator, and
// an oracle step scorer.
//
// Token construction notes: every meaningful token is purely alphanumeric
// (the embedder splits on punctuation), topic tokens repeat 6x in queries and
// cards so card-vs-query cosine lands near 0.67, and concept tokens repeat 5x
// so card-vs-label cosine lands near 0.59 — both above the 0.5 default
// thresholds. Wrong steps and the per-task wrong answer are deterministic:
// an unknowing model fails consistently, which keeps majority voting honest.

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "armcts/common.hpp"
#include "armcts/core.hpp"
#include "armcts/corpus.hpp"
#include "armcts/generator.hpp"
#include "armcts/prm.hpp"

namespace armcts {

struct SyntheticTask {
  MultimodalQuery query;                    // answer_key always present
  std::vector<std::string> required_cards;  // card id per step, in order
  double p_hi = 0.9;
  double p_lo = 0.3;

  int depth() const { return static_cast<int>(required_cards.size()); }
};

struct SyntheticSuite {
  std::vector<SyntheticTask> tasks;
  std::vector<CorpusEntry> entries;  // cards plus distractors
  std::unordered_map<std::string, std::size_t> task_by_query;

  void rebuild_lookup() {
    task_by_query.clear();
    for (std::size_t i = 0; i < tasks.size(); ++i) task_by_query.emplace(tasks[i].query.id, i);
  }
  const SyntheticTask* find(const std::string& query_id) const {
    auto it = task_by_query.find(query_id);
    return it == task_by_query.end() ? nullptr : &tasks[it->second];
  }
  const SyntheticTask& require(const std::string& query_id) const {
    const SyntheticTask* t = find(query_id);
    if (t == nullptr) throw Error(Errc::generator_failure, "unknown synthetic query: " + query_id);
    return *t;
  }
};

namespace synth {

inline std::string task_id(int i) { return "task" + std::to_string(i); }
inline std::string topic_token(int i) { return "topic" + std::to_string(i); }
inline std::string concept_token(int i) { return "concept" + std::to_string(i); }
inline std::string key_token(int i, int j) {
  return "key" + std::to_string(i) + "s" + std::to_string(j);
}
inline std::string card_id(int i, int j) {
  return "card" + std::to_string(i) + "s" + std::to_string(j);
}
inline std::string answer_token(int i) { return "ans" + std::to_string(i); }
inline std::string wrong_answer_token(int i) { return "wrong" + std::to_string(i); }

inline std::string repeat_token(const std::string& tok, int times) {
  std::string out;
  for (int k = 0; k < times; ++k) {
    if (k) out.push_back(' ');
    out += tok;
  }
  return out;
}

// Step texts emitted by the mock. Correct non-final steps announce the key
// needed next; correct steps cite the insight card they used (retrieval
// injects external tokens, the source of candidate-set diversity). Wrong
// steps are a fixed per-depth failure text.
inline std::string correct_step_text(const SyntheticTask& task, int step_index,
                                     const std::optional<std::string>& insight_id) {
  const int i = [&] {  // numeric id back out of "task{i}"
    return std::stoi(task.query.id.substr(4));
  }();
  std::string text = "step" + std::to_string(step_index) + " ok";
  if (insight_id.has_value()) text += " via " + *insight_id;
  if (step_index < task.depth()) {
    const std::string key = key_token(i, step_index + 1);
    text += " need " + key + " " + key;
  } else {
    text += " the answer is " + answer_token(i) + " <END>";
  }
  return text;
}

inline std::string wrong_step_text(const SyntheticTask& task, int step_index) {
  const int i = std::stoi(task.query.id.substr(4));
  std::string text = "step" + std::to_string(step_index) + " miss";
  if (step_index < task.depth())
    text += " attempt failed";
  else
    text += " the answer is " + wrong_answer_token(i) + " <END>";
  return text;
}

// A step counts as correct iff it is the ok-variant for its position.
inline bool is_correct_step(int step_index, const std::string& text) {
  const std::vector<std::string> toks = tokenize_alnum(text);
  return toks.size() >= 2 && toks[0] == "step" + std::to_string(step_index) && toks[1] == "ok";
}

inline bool path_on_track(const ReasoningPath& path) {
  for (std::size_t i = 0; i < path.steps.size(); ++i)
    if (!is_correct_step(static_cast<int>(i) + 1, path.steps[i].text)) return false;
  return true;
}

}  // namespace synth

struct SuiteParams {
  int count = 10;
  int depth_min = 3;
  int depth_max = 3;
  std::uint64_t seed = 0;
  double p_hi = 0.9;
  double p_lo = 0.3;
  int distractors_per_task = 1;
};

// Deterministic task/corpus generation per the token construction above.
inline SyntheticSuite gen_synthetic_suite(const SuiteParams& params) {
  if (params.count < 1) throw Error(Errc::precondition, "gen_synthetic_suite: count must be >= 1");
  if (params.depth_min < 1 || params.depth_max < params.depth_min)
    throw Error(Errc::precondition, "gen_synthetic_suite: bad depth range");
  if (!(params.p_lo >= 0.0 && params.p_lo < params.p_hi && params.p_hi <= 1.0))
    throw Error(Errc::precondition, "gen_synthetic_suite: need 0 <= p_lo < p_hi <= 1");

  SyntheticSuite suite;
  for (int i = 0; i < params.count; ++i) {
    const int span = params.depth_max - params.depth_min + 1;
    const int depth = params.depth_min +
                      static_cast<int>(mix(params.seed, 0xdeull, static_cast<std::uint64_t>(i)) %
                                       static_cast<std::uint64_t>(span));
    SyntheticTask task;
    task.p_hi = params.p_hi;
    task.p_lo = params.p_lo;
    task.query.id = synth::task_id(i);
    task.query.text = synth::repeat_token(synth::topic_token(i), 6) + " solve problem find value";
    task.query.kc_labels = {synth::concept_token(i)};
    task.query.answer_key = synth::answer_token(i);
    for (int j = 1; j <= depth; ++j) {
      task.required_cards.push_back(synth::card_id(i, j));
      CorpusEntry card;
      card.id = synth::card_id(i, j);
      card.text = synth::repeat_token(synth::topic_token(i), 6) + " " +
                  synth::repeat_token(synth::concept_token(i), 5) + " " +
                  synth::repeat_token(synth::key_token(i, j), 3) + " insight fact";
      card.source = "synthetic_cards";
      card.kc_labels = {synth::concept_token(i)};
      suite.entries.push_back(std::move(card));
    }
    for (int m = 0; m < params.distractors_per_task; ++m) {
      CorpusEntry noise;
      noise.id = "noise" + std::to_string(i) + "x" + std::to_string(m);
      std::string text;
      for (int w = 0; w < 8; ++w) {
        if (w) text.push_back(' ');
        text += "noisetok" + std::to_string(i) + "x" + std::to_string(m) + "w" + std::to_string(w);
      }
      noise.text = text;
      noise.source = "synthetic_noise";
      suite.entries.push_back(std::move(noise));
    }
    suite.tasks.push_back(std::move(task));
  }
  suite.rebuild_lookup();
  return suite;
}

// Knowledge-gated step generator. A step is sampled correct with probability
// p_hi iff the supplied insight is the step's required card, p_lo otherwise;
// once any step is wrong the continuation stays wrong (absorbing failure), so
// a full no-insight path is correct with probability p_lo^depth.
class MockGenerator final : public GeneratorBackend {
 public:
  explicit MockGenerator(const SyntheticSuite& suite) : suite_(&suite) {}

  ReasoningStep generate_step(const MultimodalQuery& query, const ReasoningPath& path,
                              const Insight* insight, double /*temperature*/,
                              std::uint64_t seed) const override {
    const SyntheticTask& task = suite_->require(query.id);
    if (path.terminal())
      throw Error(Errc::generator_failure, "generate_step on a terminal path");
    const int j = static_cast<int>(path.depth()) + 1;
    if (j > task.depth())
      throw Error(Errc::generator_failure, "step index beyond task depth");

    bool correct = false;
    if (synth::path_on_track(path)) {
      const bool matching =
          insight != nullptr && j <= task.depth() &&
          insight->entry.id == task.required_cards[static_cast<std::size_t>(j - 1)];
      const double p = matching ? task.p_hi : task.p_lo;
      correct = u01(mix(seed, fnv1a64(task.query.id), static_cast<std::uint64_t>(j))) < p;
    }
    ReasoningStep step;
    step.text = correct
                    ? synth::correct_step_text(
                          task, j,
                          insight ? std::optional<std::string>(insight->entry.id) : std::nullopt)
                    : synth::wrong_step_text(task, j);
    step.insight_id = insight ? std::optional<std::string>(insight->entry.id) : std::nullopt;
    return step;
  }

  ReasoningPath generate_completion(const MultimodalQuery& query, const ReasoningPath& path,
                                    const Insight* insight, double temperature,
                                    std::uint64_t seed) const override {
    ReasoningPath p = path;
    bool first = true;
    while (!p.terminal()) {
      const Insight* ins = first ? insight : nullptr;
      const std::uint64_t step_seed =
          mix(seed, 0xc011ull, static_cast<std::uint64_t>(p.depth()) + 1);
      p = extend_path(p, generate_step(query, p, ins, temperature, step_seed));
      first = false;
    }
    return p;
  }

 private:
  const SyntheticSuite* suite_;
};

// Grades candidate steps with ground truth: 0.9 when the prefix is on track
// and the step is the correct continuation, 0.1 otherwise.
class OraclePrm final : public PrmScorer {
 public:
  explicit OraclePrm(const SyntheticSuite& suite) : suite_(&suite) {}

  double score(const MultimodalQuery& query, const ReasoningPath& prefix,
               const ReasoningStep& step) const override {
    const SyntheticTask* task = suite_->find(query.id);
    if (task == nullptr) return 0.5;
    const int j = static_cast<int>(prefix.depth()) + 1;
    const bool good = synth::path_on_track(prefix) && synth::is_correct_step(j, step.text);
    return good ? 0.9 : 0.1;
  }

 private:
  const SyntheticSuite* suite_;
};

// Single-feature trajectory featurizer with ground-truth access: +1 when the
// path's final answer matches the task's key, -1 otherwise. Pairs with a
// single-column policy to form an oracle outcome scorer.
class OracleOrmFeaturizer final : public Featurizer {
 public:
  explicit OracleOrmFeaturizer(const SyntheticSuite& suite) : suite_(&suite) {}
  std::vector<double> features(const std::string& query_id,
                               const ReasoningPath& prefix) const override {
    const SyntheticTask* task = suite_->find(query_id);
    if (task == nullptr || !prefix.final_answer.has_value()) return {0.0};
    const bool good =
        normalize_answer(*prefix.final_answer) == normalize_answer(*task->query.answer_key);
    return {good ? 1.0 : -1.0};
  }
  int dim() const override { return 1; }

 private:
  const SyntheticSuite* suite_;
};

inline ParametricPolicy make_oracle_orm(const SyntheticSuite& suite) {
  ParametricPolicy orm =
      make_policy({"<path>"}, std::make_shared<OracleOrmFeaturizer>(suite));
  orm.weights[0] = 4.0;  // sigmoid(+-4): ~0.982 correct, ~0.018 wrong
  return orm;
}

// ---- Suite (de)serialization --------------------------------------------------

inline json to_json(const SyntheticTask& t) {
  json j;
  j["query"] = to_json(t.query);
  j["required_cards"] = t.required_cards;
  j["p_hi"] = t.p_hi;
  j["p_lo"] = t.p_lo;
  return j;
}

inline SyntheticTask task_from_json(const json& j) {
  SyntheticTask t;
  t.query = query_from_json(j.at("query"));
  t.required_cards = j.at("required_cards").get<std::vector<std::string>>();
  t.p_hi = j.at("p_hi").get<double>();
  t.p_lo = j.at("p_lo").get<double>();
  return t;
}

inline json suite_tasks_to_json(const SyntheticSuite& suite) {
  json tasks = json::array();
  for (const SyntheticTask& t : suite.tasks) tasks.push_back(to_json(t));
  return json{{"tasks", tasks}};
}

inline SyntheticSuite suite_from_json(const json& tasks_json,
                                      std::vector<CorpusEntry> entries) {
  SyntheticSuite suite;
  for (const auto& t : tasks_json.at("tasks")) suite.tasks.push_back(task_from_json(t));
  suite.entries = std::move(entries);
  suite.rebuild_lookup();
  return suite;
}

}  // namespace armcts
