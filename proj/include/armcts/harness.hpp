#pragma once

// Experiment harness: verified inference (per-round candidate generation,
// step scoring, argmax with early stop), sampling-space and diversity
// metrics, the benchmark runner, and the parallel annotation pipeline.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "armcts/common.hpp"
#include "armcts/core.hpp"
#include "armcts/corpus.hpp"
#include "armcts/embedding.hpp"
#include "armcts/generator.hpp"
#include "armcts/index.hpp"
#include "armcts/mcts.hpp"
#include "armcts/prm.hpp"
#include "armcts/retrieval.hpp"
#include "armcts/synthetic.hpp"

namespace armcts {

// ---- Shared pipeline: query -> insight set -----------------------------------

// Unified retrieval (both routes, union) followed by knowledge-concept
// filtering; the per-query insight set every search consumes.
inline InsightSet build_insights(const MultimodalQuery& query, const VectorIndex& text_index,
                                 const VectorIndex& hybrid_index, const Corpus& corpus,
                                 const EmbeddingProvider& provider, const EngineConfig& config) {
  const std::vector<CorpusEntry> candidates =
      unified_retrieve(query, text_index, hybrid_index, provider, corpus,
                       static_cast<std::size_t>(config.top_k_retrieve));
  return kc_filter(candidates, query, provider, config.t_r, config.t_kc, config.kc_enabled);
}

// ---- Inference ------------------------------------------------------------------

struct InferResult {
  ReasoningPath path;
  int rounds = 0;            // selection rounds executed
  bool early_stopped = false;  // forced completion fired at early_stop_round
};

// One verified decoding: per round, retrieve the top-B insights for the
// current prefix, sample one candidate step per insight plus a no-insight
// candidate, score each with the step scorer, and append the argmax (ties
// prefer the no-insight branch, then the smallest candidate index). At round
// early_stop_round a non-terminal path is completed to a final answer in that
// round. run_salt separates repeated runs on the same query.
inline InferResult infer(const MultimodalQuery& query, const InsightSet& insights,
                         const GeneratorBackend& generator, const PrmScorer& prm,
                         const EmbeddingProvider& provider, const EngineConfig& config,
                         std::uint64_t run_salt = 0) {
  const std::uint64_t base = mix(mix(config.seed, fnv1a64(query.id)), run_salt);
  InferResult result;
  ReasoningPath path;
  for (int round = 1; round <= config.early_stop_round; ++round) {
    if (path.terminal() || static_cast<int>(path.depth()) >= config.max_depth) break;
    const std::vector<Insight> ranked = active_retrieve(
        insights, query, path, provider, static_cast<std::size_t>(config.beam_b));

    std::vector<ReasoningStep> candidates(ranked.size() + 1);
    for (std::size_t idx = 0; idx <= ranked.size(); ++idx) {
      const Insight* insight = idx < ranked.size() ? &ranked[idx] : nullptr;
      const std::uint64_t seed =
          mix(base, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(idx));
      ReasoningStep step;
      try {
        step = generator.generate_step(query, path, insight, config.temperature, seed);
      } catch (const Error&) {
        throw;
      } catch (const std::exception& ex) {
        throw Error(Errc::generator_failure, ex.what());
      }
      step.insight_id = insight ? std::optional<std::string>(insight->entry.id) : std::nullopt;
      candidates[idx] = std::move(step);
    }

    // Argmax; the no-insight candidate (last) seeds the comparison so an
    // insight-conditioned step must strictly beat it, and earlier candidate
    // indices win ties among insights.
    std::size_t best = candidates.size() - 1;
    double best_score = prm.score(query, path, candidates[best]);
    for (std::size_t idx = 0; idx + 1 < candidates.size(); ++idx) {
      const double s = prm.score(query, path, candidates[idx]);
      if (s > best_score) {
        best = idx;
        best_score = s;
      }
    }
    path = extend_path(path, candidates[best]);
    result.rounds = round;

    if (round == config.early_stop_round && !path.terminal() &&
        static_cast<int>(path.depth()) < config.max_depth) {
      try {
        path = generator.generate_completion(query, path, nullptr, config.temperature,
                                             mix(base, 0xe57ull, static_cast<std::uint64_t>(round)));
      } catch (const Error&) {
        throw;
      } catch (const std::exception& ex) {
        throw Error(Errc::generator_failure, ex.what());
      }
      result.early_stopped = true;
    }
  }
  result.path = std::move(path);
  return result;
}

// n trajectories sampled from the retrieval-augmented expansion space: each
// round retrieves the top-B insights for the current prefix and follows one
// expansion branch — an insight-conditioned step or the no-insight step —
// chosen uniformly by the per-sample seed. No step scorer is involved; this
// is the sampling space itself, the retrieval-on counterpart of beam_sample.
// Sample j is seeded by mix(seed, j) so sets at growing n are nested.
inline std::vector<ReasoningPath> expansion_sample(const MultimodalQuery& query,
                                                   const InsightSet& insights,
                                                   const GeneratorBackend& generator,
                                                   const EmbeddingProvider& provider,
                                                   const EngineConfig& config, int n,
                                                   std::uint64_t seed) {
  if (n < 1) throw Error(Errc::precondition, "expansion_sample: n must be >= 1");
  std::vector<ReasoningPath> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const std::uint64_t base = mix(seed, 0xa5e1ull, static_cast<std::uint64_t>(j));
    ReasoningPath path;
    for (int round = 1; round <= config.max_depth; ++round) {
      if (path.terminal() || static_cast<int>(path.depth()) >= config.max_depth) break;
      const std::vector<Insight> ranked = active_retrieve(
          insights, query, path, provider, static_cast<std::size_t>(config.beam_b));
      const std::size_t branch = static_cast<std::size_t>(
          mix(base, static_cast<std::uint64_t>(round)) % (ranked.size() + 1));
      const Insight* insight = branch < ranked.size() ? &ranked[branch] : nullptr;
      ReasoningStep step;
      try {
        step = generator.generate_step(query, path, insight, config.temperature,
                                       mix(base, static_cast<std::uint64_t>(round), branch));
      } catch (const Error&) {
        throw;
      } catch (const std::exception& ex) {
        throw Error(Errc::generator_failure, ex.what());
      }
      step.insight_id = insight ? std::optional<std::string>(insight->entry.id) : std::nullopt;
      path = extend_path(path, step);
    }
    out.push_back(std::move(path));
  }
  return out;
}

// ---- Metrics --------------------------------------------------------------------

struct QuestionRecord {
  std::string question_id;
  std::string method;
  int n_samples = 0;
  bool correct = false;                       // the method's returned answer
  std::string answer;                         // normalized
  std::vector<std::string> candidate_answers; // normalized, one per sample
  std::vector<bool> candidate_correct;
  std::vector<std::string> candidate_paths;   // full path texts
};

inline json to_json(const QuestionRecord& r) {
  json j;
  j["question_id"] = r.question_id;
  j["method"] = r.method;
  j["n_samples"] = r.n_samples;
  j["correct"] = r.correct;
  j["answer"] = r.answer;
  j["candidate_answers"] = r.candidate_answers;
  j["candidate_correct"] = r.candidate_correct;
  j["candidate_paths"] = r.candidate_paths;
  return j;
}

// Fraction of questions whose candidate set holds at least one correct answer.
inline double metric_pqc(const std::vector<QuestionRecord>& records) {
  if (records.empty()) throw Error(Errc::empty_record_set, "metric_pqc");
  std::size_t hit = 0;
  for (const QuestionRecord& r : records)
    if (std::find(r.candidate_correct.begin(), r.candidate_correct.end(), true) !=
        r.candidate_correct.end())
      ++hit;
  return static_cast<double>(hit) / static_cast<double>(records.size());
}

// Mean pairwise cosine distance between hash embeddings of full path texts.
inline double metric_diversity(const std::vector<std::string>& path_texts,
                               const EmbeddingProvider& provider) {
  if (path_texts.size() < 2) throw Error(Errc::too_few_paths, "metric_diversity");
  std::vector<Embedding> embs;
  embs.reserve(path_texts.size());
  for (const std::string& t : path_texts) embs.push_back(provider.embed_text(t));
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < embs.size(); ++i)
    for (std::size_t j = i + 1; j < embs.size(); ++j) {
      total += 1.0 - cosine(embs[i], embs[j]);
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

inline double metric_diversity(const std::vector<ReasoningPath>& paths,
                               const EmbeddingProvider& provider) {
  std::vector<std::string> texts;
  texts.reserve(paths.size());
  for (const ReasoningPath& p : paths) texts.push_back(path_text(p));
  return metric_diversity(texts, provider);
}

// ---- Parallel driver --------------------------------------------------------------

// Runs fn(i) for i in [0, n) on `workers` threads. Results must be written to
// pre-sized per-index slots, which keeps any assembly order-independent. The
// first exception wins and is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  pool.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- Benchmark ---------------------------------------------------------------------

enum class Method { zero_shot, self_consistency, orm, ar_mcts };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::zero_shot: return "zero_shot";
    case Method::self_consistency: return "self_consistency";
    case Method::orm: return "orm";
    case Method::ar_mcts: return "ar_mcts";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "zero_shot") return Method::zero_shot;
  if (s == "self_consistency") return Method::self_consistency;
  if (s == "orm") return Method::orm;
  if (s == "ar_mcts") return Method::ar_mcts;
  throw Error(Errc::config_error, "unknown method: " + std::string(s));
}

struct ExperimentReport {
  std::vector<QuestionRecord> records;
  json aggregate;

  std::string records_jsonl() const {
    std::string out;
    for (const QuestionRecord& r : records) {
      out += to_json(r).dump();
      out.push_back('\n');
    }
    return out;
  }
  std::string aggregate_json() const { return aggregate.dump(2) + "\n"; }
};

namespace detail {

inline std::string answer_of(const ReasoningPath& path) {
  return path.final_answer.has_value() ? normalize_answer(*path.final_answer) : std::string();
}

inline QuestionRecord make_record(const SyntheticTask& task, Method method,
                                  const std::vector<ReasoningPath>& candidates,
                                  const std::string& answer) {
  const std::string key = normalize_answer(*task.query.answer_key);
  QuestionRecord rec;
  rec.question_id = task.query.id;
  rec.method = method_name(method);
  rec.n_samples = static_cast<int>(candidates.size());
  rec.answer = answer;
  rec.correct = answer == key;
  for (const ReasoningPath& p : candidates) {
    const std::string a = answer_of(p);
    rec.candidate_answers.push_back(a);
    rec.candidate_correct.push_back(a == key);
    rec.candidate_paths.push_back(path_text(p));
  }
  return rec;
}

}  // namespace detail

inline json engine_config_to_json(const EngineConfig& c) {
  json j;
  j["c_explore"] = c.c_explore;
  j["ucb_variant"] = ucb_variant_name(c.ucb_variant);
  j["k_rollouts"] = c.k_rollouts;
  j["beam_b"] = c.beam_b;
  j["max_depth"] = c.max_depth;
  j["early_stop_round"] = c.early_stop_round;
  j["temperature"] = c.temperature;
  j["t_r"] = c.t_r;
  j["t_kc"] = c.t_kc;
  j["pos_value_threshold"] = c.pos_value_threshold;
  j["top_k_retrieve"] = c.top_k_retrieve;
  j["embed_dim"] = c.embed_dim;
  j["seed"] = c.seed;
  j["kc_enabled"] = c.kc_enabled;
  j["rounds"] = c.rounds;
  j["prm_hard"] = c.prm_hard;
  return j;
}

// Every method on every task with shared seeds: candidate sets grow by nested
// seeds, per-task records land in task order regardless of worker count, and
// the aggregate is recomputable from the records. The outcome scorer is
// required only when the orm method is requested.
inline ExperimentReport run_benchmark(const SyntheticSuite& suite,
                                      const std::vector<Method>& methods,
                                      const GeneratorBackend& generator, const PrmScorer& prm,
                                      const ParametricPolicy* orm,
                                      const EmbeddingProvider& provider,
                                      const EngineConfig& config, int n_samples, int workers) {
  if (suite.tasks.empty()) throw Error(Errc::precondition, "run_benchmark: empty suite");
  if (n_samples < 1) throw Error(Errc::precondition, "run_benchmark: n_samples must be >= 1");
  for (Method m : methods)
    if (m == Method::orm && orm == nullptr)
      throw Error(Errc::config_error, "orm method requested without an outcome scorer");

  const Corpus corpus = Corpus::from(suite.entries);
  const VectorIndex text_index = build_text_index(corpus.entries, provider);
  const VectorIndex hybrid_index = build_index(corpus.entries, provider);

  std::vector<std::vector<QuestionRecord>> per_task(suite.tasks.size());
  parallel_for(suite.tasks.size(), workers, [&](std::size_t i) {
    const SyntheticTask& task = suite.tasks[i];
    const std::uint64_t task_seed = mix(config.seed, fnv1a64(task.query.id));

    const bool needs_beam =
        std::find_if(methods.begin(), methods.end(), [](Method m) {
          return m != Method::ar_mcts;
        }) != methods.end();
    std::vector<ReasoningPath> beam;
    if (needs_beam)
      beam = beam_sample(generator, task.query, n_samples, config.temperature, task_seed);

    std::vector<QuestionRecord> recs;
    for (Method m : methods) {
      switch (m) {
        case Method::zero_shot: {
          std::vector<ReasoningPath> one{beam.front()};
          recs.push_back(detail::make_record(task, m, one, detail::answer_of(one.front())));
          break;
        }
        case Method::self_consistency: {
          std::vector<std::string> answers;
          for (const ReasoningPath& p : beam) answers.push_back(detail::answer_of(p));
          recs.push_back(detail::make_record(task, m, beam, self_consistency(answers)));
          break;
        }
        case Method::orm: {
          const ReasoningPath winner = orm_select(beam, *orm, task.query);
          recs.push_back(detail::make_record(task, m, beam, detail::answer_of(winner)));
          break;
        }
        case Method::ar_mcts: {
          const InsightSet insights =
              build_insights(task.query, text_index, hybrid_index, corpus, provider, config);
          std::vector<ReasoningPath> runs;
          runs.reserve(static_cast<std::size_t>(n_samples));
          for (int j = 0; j < n_samples; ++j)
            runs.push_back(infer(task.query, insights, generator, prm, provider, config,
                                 static_cast<std::uint64_t>(j))
                               .path);
          recs.push_back(detail::make_record(task, m, runs, detail::answer_of(runs.front())));
          break;
        }
      }
    }
    per_task[i] = std::move(recs);
  });

  ExperimentReport report;
  for (auto& recs : per_task)
    for (QuestionRecord& r : recs) report.records.push_back(std::move(r));

  json per_method = json::object();
  for (Method m : methods) {
    std::vector<QuestionRecord> subset;
    for (const QuestionRecord& r : report.records)
      if (r.method == method_name(m)) subset.push_back(r);
    std::size_t correct = 0;
    double diversity_sum = 0.0;
    std::size_t diversity_n = 0;
    for (const QuestionRecord& r : subset) {
      if (r.correct) ++correct;
      if (r.candidate_paths.size() >= 2) {
        diversity_sum += metric_diversity(r.candidate_paths, provider);
        ++diversity_n;
      }
    }
    json row;
    row["n_questions"] = subset.size();
    row["accuracy"] = subset.empty() ? 0.0 : static_cast<double>(correct) / subset.size();
    row["pqc"] = metric_pqc(subset);
    row["diversity"] = diversity_n == 0 ? 0.0 : diversity_sum / static_cast<double>(diversity_n);
    per_method[method_name(m)] = row;
  }
  report.aggregate = json{{"config", engine_config_to_json(config)},
                          {"n_samples", n_samples},
                          {"per_method", per_method},
                          {"n_tasks", suite.tasks.size()}};
  return report;
}

// ---- Annotation pipeline -------------------------------------------------------

struct AnnotateResult {
  std::string trees_jsonl;
  std::string pairs_jsonl;
  std::string labels_jsonl;
};

// Full annotation pass over a set of queries: per query, build the insight
// set, run the annotation search, and export the tree plus the step-level
// artifacts. Output order is query order whatever the worker count.
inline AnnotateResult annotate_all(const std::vector<MultimodalQuery>& queries,
                                   const Corpus& corpus, const GeneratorBackend& generator,
                                   const EmbeddingProvider& provider, const EngineConfig& config,
                                   int workers) {
  const VectorIndex text_index = build_text_index(corpus.entries, provider);
  const VectorIndex hybrid_index = build_index(corpus.entries, provider);

  struct PerQuery {
    std::string tree, pairs, labels;
  };
  std::vector<PerQuery> chunks(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t i) {
    const MultimodalQuery& query = queries[i];
    const InsightSet insights =
        build_insights(query, text_index, hybrid_index, corpus, provider, config);
    const SearchTree tree =
        run_annotation(query, insights, generator, provider, config, config.rounds);
    PerQuery out;
    out.tree = serialize_tree(tree);
    for (const PreferencePair& p : extract_pairs(tree, config)) {
      out.pairs += to_json(p).dump();
      out.pairs.push_back('\n');
    }
    for (const StepAnnotation& a : extract_point_labels(tree, config)) {
      out.labels += to_json(a).dump();
      out.labels.push_back('\n');
    }
    chunks[i] = std::move(out);
  });

  AnnotateResult result;
  for (const PerQuery& c : chunks) {
    result.trees_jsonl += c.tree;
    result.pairs_jsonl += c.pairs;
    result.labels_jsonl += c.labels;
  }
  return result;
}

}  // namespace armcts
