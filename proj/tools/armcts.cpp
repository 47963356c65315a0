// armcts command line: synthetic suite generation, corpus ingestion and
// indexing, knowledge-filtered retrieval reports, search-tree annotation,
// step-scorer training, verified inference, benchmarking, and contamination
// screening. Every subcommand accepts --config (key = value file) plus
// repeatable --set key=value overrides; endpoint credentials can also come
// from ARMCTS_CHAT_API_KEY / ARMCTS_EMBED_API_KEY.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "armcts/armcts.hpp"

namespace {

using armcts::json;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key = value configuration file");
  cmd->add_option("--set", opts.sets, "inline config override, key=value (repeatable)");
}

armcts::AppConfig resolve_config(const CommonOpts& opts) {
  armcts::AppConfig config;
  if (!opts.config_path.empty())
    armcts::apply_config(armcts::parse_config_file(opts.config_path), config);
  for (const std::string& kv : opts.sets)
    armcts::apply_config(armcts::parse_config_text(kv), config);
  armcts::apply_env_overrides(config);
  armcts::validate(config.engine);
  return config;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw armcts::Error(armcts::Errc::file_not_found, "cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw armcts::Error(armcts::Errc::file_not_found, "write failed: " + path);
}

// Empty or "-" targets stdout.
void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-")
    std::cout << content;
  else
    write_file(path, content);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw armcts::Error(armcts::Errc::file_not_found, path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& ex) {
    throw armcts::Error(armcts::Errc::precondition, path + ": " + ex.what());
  }
  return j;
}

template <typename T, typename ParseFn>
std::vector<T> load_jsonl(const std::string& path, ParseFn parse) {
  std::ifstream in(path);
  if (!in) throw armcts::Error(armcts::Errc::file_not_found, path);
  auto parsed = armcts::parse_jsonl_stream<T>(in, parse);
  if (parsed.items.empty())
    throw armcts::Error(armcts::Errc::all_lines_rejected, path + " yielded no usable records");
  return std::move(parsed.items);
}

std::unique_ptr<armcts::EmbeddingProvider> make_provider(const std::string& kind,
                                                         const armcts::AppConfig& config) {
  if (kind == "hash") return std::make_unique<armcts::HashEmbedder>(config.engine.embed_dim);
  if (kind == "remote") return std::make_unique<armcts::RemoteEmbedder>(config.embed);
  throw armcts::Error(armcts::Errc::config_error, "unknown embedder: " + kind);
}

// The mock backend replays a generated suite, so it keeps the suite alive
// next to the generator; the remote backend talks to a chat endpoint.
struct Backend {
  armcts::SyntheticSuite suite;
  std::unique_ptr<armcts::GeneratorBackend> generator;
  bool has_suite = false;
};

Backend make_backend(const std::string& kind, const std::string& tasks_path,
                     const std::vector<armcts::CorpusEntry>& entries,
                     const armcts::AppConfig& config) {
  Backend b;
  if (kind == "mock") {
    if (tasks_path.empty())
      throw armcts::Error(armcts::Errc::config_error, "mock backend requires --tasks");
    b.suite = armcts::suite_from_json(load_json_file(tasks_path), entries);
    b.generator = std::make_unique<armcts::MockGenerator>(b.suite);
    b.has_suite = true;
  } else if (kind == "remote") {
    b.generator = std::make_unique<armcts::RemoteGenerator>(config.chat);
  } else {
    throw armcts::Error(armcts::Errc::config_error, "unknown backend: " + kind);
  }
  return b;
}

std::string jsonl_of_entries(const std::vector<armcts::CorpusEntry>& entries) {
  std::string out;
  for (const armcts::CorpusEntry& e : entries) {
    out += armcts::to_json(e).dump();
    out.push_back('\n');
  }
  return out;
}

// ---- gen-suite -----------------------------------------------------------------

struct GenSuiteOpts {
  CommonOpts common;
  armcts::SuiteParams params;
  std::string out_corpus, out_queries, out_tasks;
};

void run_gen_suite(const GenSuiteOpts& o) {
  const armcts::SyntheticSuite suite = armcts::gen_synthetic_suite(o.params);
  write_file(o.out_corpus, jsonl_of_entries(suite.entries));
  std::string queries;
  for (const armcts::SyntheticTask& t : suite.tasks) {
    queries += armcts::to_json(t.query).dump();
    queries.push_back('\n');
  }
  write_file(o.out_queries, queries);
  write_file(o.out_tasks, armcts::suite_tasks_to_json(suite).dump(2) + "\n");
  std::cout << json{{"tasks", suite.tasks.size()}, {"entries", suite.entries.size()}}.dump()
            << "\n";
}

// ---- ingest --------------------------------------------------------------------

struct IngestOpts {
  CommonOpts common;
  std::string corpus_path, out_path;
  std::size_t chunk_size = 0;  // 0 = no chunking
};

void run_ingest(const IngestOpts& o) {
  armcts::IngestResult result = armcts::ingest_jsonl(o.corpus_path);
  std::vector<armcts::CorpusEntry> entries = std::move(result.entries);
  if (o.chunk_size > 0) {
    std::vector<armcts::CorpusEntry> chunked;
    for (const armcts::CorpusEntry& e : entries) {
      const std::vector<std::string> pieces = armcts::chunk_text(e.text, o.chunk_size);
      if (pieces.size() <= 1) {
        chunked.push_back(e);
        continue;
      }
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        armcts::CorpusEntry piece = e;
        piece.id = e.id + "#" + std::to_string(i);
        piece.text = pieces[i];
        chunked.push_back(std::move(piece));
      }
    }
    entries = std::move(chunked);
  }
  if (!o.out_path.empty()) emit(o.out_path, jsonl_of_entries(entries));

  json rejects = json::array();
  for (const armcts::RejectRecord& r : result.rejects)
    rejects.push_back(json{{"line", r.line}, {"reason", r.reason}});
  std::cout << json{{"accepted", entries.size()}, {"rejects", rejects}}.dump() << "\n";
}

// ---- index ---------------------------------------------------------------------

struct IndexOpts {
  CommonOpts common;
  std::string corpus_path, out_path, embedder = "hash";
  bool text_only = false;
};

void run_index(const IndexOpts& o) {
  const armcts::AppConfig config = resolve_config(o.common);
  const armcts::Corpus corpus = armcts::Corpus::from(armcts::ingest_jsonl(o.corpus_path).entries);
  const auto provider = make_provider(o.embedder, config);
  const armcts::VectorIndex index = o.text_only
                                        ? armcts::build_text_index(corpus.entries, *provider)
                                        : armcts::build_index(corpus.entries, *provider);
  emit(o.out_path, armcts::to_json(index).dump() + "\n");
  if (!o.out_path.empty() && o.out_path != "-")
    std::cout << json{{"entries", index.entries.size()}, {"dim", index.dim}}.dump() << "\n";
}

// ---- retrieve ------------------------------------------------------------------

struct RetrieveOpts {
  CommonOpts common;
  std::string query_path, corpus_path, out_path, embedder = "hash";
  int k = 0;
  double t_r = 0.0, t_kc = 0.0;
  bool k_set = false, t_r_set = false, t_kc_set = false, no_kc = false;
};

void run_retrieve(const RetrieveOpts& o) {
  armcts::AppConfig config = resolve_config(o.common);
  armcts::EngineConfig& e = config.engine;
  if (o.k_set) e.top_k_retrieve = o.k;
  if (o.t_r_set) e.t_r = o.t_r;
  if (o.t_kc_set) e.t_kc = o.t_kc;
  if (o.no_kc) e.kc_enabled = false;
  armcts::validate(e);

  const std::vector<armcts::MultimodalQuery> queries = armcts::load_queries_jsonl(o.query_path);
  const armcts::Corpus corpus = armcts::Corpus::from(armcts::ingest_jsonl(o.corpus_path).entries);
  const auto provider = make_provider(o.embedder, config);
  const armcts::VectorIndex text_index = armcts::build_text_index(corpus.entries, *provider);
  const armcts::VectorIndex hybrid_index = armcts::build_index(corpus.entries, *provider);

  std::string report;
  for (const armcts::MultimodalQuery& query : queries) {
    const std::vector<armcts::CorpusEntry> candidates =
        armcts::unified_retrieve(query, text_index, hybrid_index, *provider, corpus,
                                 static_cast<std::size_t>(e.top_k_retrieve));
    for (const armcts::KcCandidate& c :
         armcts::kc_candidates(candidates, query, *provider, e.t_r, e.t_kc, e.kc_enabled)) {
      report += json{{"query_id", query.id},
                     {"id", c.insight.entry.id},
                     {"sim_query", c.insight.sim_query},
                     {"sim_kc", c.insight.sim_kc},
                     {"kept", c.kept}}
                    .dump();
      report.push_back('\n');
    }
  }
  emit(o.out_path, report);
}

// ---- annotate ------------------------------------------------------------------

struct AnnotateOpts {
  CommonOpts common;
  std::string query_path, corpus_path, tasks_path, backend = "mock", embedder = "hash";
  std::string out_trees, out_pairs, out_labels;
  int workers = 1;
};

void run_annotate(const AnnotateOpts& o) {
  const armcts::AppConfig config = resolve_config(o.common);
  const std::vector<armcts::MultimodalQuery> queries = armcts::load_queries_jsonl(o.query_path);
  const armcts::Corpus corpus = armcts::Corpus::from(armcts::ingest_jsonl(o.corpus_path).entries);
  const Backend backend = make_backend(o.backend, o.tasks_path, corpus.entries, config);
  const auto provider = make_provider(o.embedder, config);

  const armcts::AnnotateResult result = armcts::annotate_all(
      queries, corpus, *backend.generator, *provider, config.engine, o.workers);
  write_file(o.out_trees, result.trees_jsonl);
  write_file(o.out_pairs, result.pairs_jsonl);
  write_file(o.out_labels, result.labels_jsonl);

  const auto lines = [](const std::string& s) {
    return std::count(s.begin(), s.end(), '\n');
  };
  std::cout << json{{"queries", queries.size()},
                    {"pairs", lines(result.pairs_jsonl)},
                    {"labels", lines(result.labels_jsonl)}}
                   .dump()
            << "\n";
}

// ---- train-prm -----------------------------------------------------------------

struct TrainOpts {
  CommonOpts common;
  std::string pairs_path, labels_path, out_path, log_path;
  armcts::TrainConfig train;
};

void run_train(const TrainOpts& o) {
  const std::vector<armcts::PreferencePair> pairs =
      load_jsonl<armcts::PreferencePair>(o.pairs_path, armcts::pair_from_json);
  const std::vector<armcts::StepAnnotation> labels =
      load_jsonl<armcts::StepAnnotation>(o.labels_path, armcts::annotation_from_json);

  const armcts::TrainResult result = armcts::train_curriculum(pairs, labels, o.train);
  emit(o.out_path, armcts::to_json(result.scorer).dump(2) + "\n");
  if (!o.log_path.empty()) write_file(o.log_path, armcts::train_log_csv(result.log));

  double sdpo_final = 0.0, pft_final = 0.0;
  for (const armcts::TrainLogRow& r : result.log)
    (r.stage == "sdpo" ? sdpo_final : pft_final) = r.loss;
  std::cout << json{{"pairs", pairs.size()},
                    {"labels", labels.size()},
                    {"sdpo_final_loss", sdpo_final},
                    {"pft_final_loss", pft_final}}
                   .dump()
            << "\n";
}

// ---- infer ---------------------------------------------------------------------

struct InferOpts {
  CommonOpts common;
  std::string query_path, corpus_path, tasks_path, scorer_path;
  std::string backend = "mock", embedder = "hash", out_path;
  std::uint64_t run_salt = 0;
};

void run_infer(const InferOpts& o) {
  const armcts::AppConfig config = resolve_config(o.common);
  const std::vector<armcts::MultimodalQuery> queries = armcts::load_queries_jsonl(o.query_path);
  const armcts::Corpus corpus = armcts::Corpus::from(armcts::ingest_jsonl(o.corpus_path).entries);
  const Backend backend = make_backend(o.backend, o.tasks_path, corpus.entries, config);
  const auto provider = make_provider(o.embedder, config);

  std::unique_ptr<armcts::PrmScorer> prm;
  if (!o.scorer_path.empty())
    prm = std::make_unique<armcts::PolicyPrm>(armcts::policy_from_json(load_json_file(o.scorer_path)),
                                              config.engine.prm_hard);
  else if (backend.has_suite)
    prm = std::make_unique<armcts::OraclePrm>(backend.suite);
  else
    throw armcts::Error(armcts::Errc::config_error, "remote backend requires --scorer");

  const armcts::VectorIndex text_index = armcts::build_text_index(corpus.entries, *provider);
  const armcts::VectorIndex hybrid_index = armcts::build_index(corpus.entries, *provider);

  std::string report;
  for (const armcts::MultimodalQuery& query : queries) {
    const armcts::InsightSet insights =
        armcts::build_insights(query, text_index, hybrid_index, corpus, *provider, config.engine);
    const armcts::InferResult result = armcts::infer(
        query, insights, *backend.generator, *prm, *provider, config.engine, o.run_salt);
    const std::optional<std::string>& raw = result.path.final_answer;
    json row{{"query_id", query.id},
             {"answer", raw.has_value() ? json(armcts::normalize_answer(*raw)) : json(nullptr)},
             {"rounds", result.rounds},
             {"early_stopped", result.early_stopped},
             {"path", armcts::to_json(result.path)}};
    row["correct"] = query.answer_key.has_value() && raw.has_value()
                         ? json(armcts::normalize_answer(*raw) ==
                                armcts::normalize_answer(*query.answer_key))
                         : json(nullptr);
    report += row.dump();
    report.push_back('\n');
  }
  emit(o.out_path, report);
}

// ---- bench ---------------------------------------------------------------------

struct BenchOpts {
  CommonOpts common;
  std::string tasks_path, corpus_path, scorer_path, embedder = "hash";
  std::string methods = "zero_shot,self_consistency,orm,ar_mcts";
  std::string out_records, out_aggregate;
  int n_samples = 4;
  int workers = 1;
};

void run_bench(const BenchOpts& o) {
  const armcts::AppConfig config = resolve_config(o.common);
  const std::vector<armcts::CorpusEntry> entries = armcts::ingest_jsonl(o.corpus_path).entries;
  const armcts::SyntheticSuite suite =
      armcts::suite_from_json(load_json_file(o.tasks_path), entries);
  const armcts::MockGenerator generator(suite);
  const auto provider = make_provider(o.embedder, config);

  std::vector<armcts::Method> methods;
  std::stringstream ss(o.methods);
  for (std::string part; std::getline(ss, part, ',');) {
    const std::string name = armcts::trim(part);
    if (!name.empty()) methods.push_back(armcts::parse_method(name));
  }
  if (methods.empty())
    throw armcts::Error(armcts::Errc::config_error, "no methods requested");

  std::unique_ptr<armcts::PrmScorer> prm;
  if (!o.scorer_path.empty())
    prm = std::make_unique<armcts::PolicyPrm>(armcts::policy_from_json(load_json_file(o.scorer_path)),
                                              config.engine.prm_hard);
  else
    prm = std::make_unique<armcts::OraclePrm>(suite);
  const armcts::ParametricPolicy orm = armcts::make_oracle_orm(suite);

  const armcts::ExperimentReport report = armcts::run_benchmark(
      suite, methods, generator, *prm, &orm, *provider, config.engine, o.n_samples, o.workers);
  write_file(o.out_records, report.records_jsonl());
  emit(o.out_aggregate, report.aggregate_json());
}

// ---- contaminate-check ---------------------------------------------------------

struct ContaminateOpts {
  CommonOpts common;
  std::string corpus_path, query_path, out_path;
  std::size_t ngram = 13;
};

void run_contaminate(const ContaminateOpts& o) {
  const std::vector<armcts::CorpusEntry> entries = armcts::ingest_jsonl(o.corpus_path).entries;
  const std::vector<armcts::MultimodalQuery> queries = armcts::load_queries_jsonl(o.query_path);
  const armcts::ContaminationReport report =
      armcts::contamination_report(entries, queries, o.ngram);
  json j{{"ngram", o.ngram},
         {"overall", report.overall},
         {"by_source", report.by_source},
         {"contaminated_ids", report.contaminated_ids}};
  emit(o.out_path, j.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retrieval-augmented tree-search reasoning toolkit"};
  app.require_subcommand(1);

  GenSuiteOpts gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-suite", "generate a synthetic task suite");
  add_common(gen_cmd, gen.common);
  gen_cmd->add_option("--count", gen.params.count, "number of tasks");
  gen_cmd->add_option("--depth-min", gen.params.depth_min, "minimum task depth");
  gen_cmd->add_option("--depth-max", gen.params.depth_max, "maximum task depth");
  gen_cmd->add_option("--seed", gen.params.seed, "suite seed");
  gen_cmd->add_option("--p-hi", gen.params.p_hi, "step success probability with the right card");
  gen_cmd->add_option("--p-lo", gen.params.p_lo, "step success probability without it");
  gen_cmd->add_option("--distractors", gen.params.distractors_per_task, "noise entries per task");
  gen_cmd->add_option("--out-corpus", gen.out_corpus, "corpus JSONL output")->required();
  gen_cmd->add_option("--out-queries", gen.out_queries, "query JSONL output")->required();
  gen_cmd->add_option("--out-tasks", gen.out_tasks, "task suite JSON output")->required();
  gen_cmd->callback([&] { run_gen_suite(gen); });

  IngestOpts ingest;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "parse a corpus JSONL with a rejects report");
  add_common(ingest_cmd, ingest.common);
  ingest_cmd->add_option("--corpus", ingest.corpus_path, "corpus JSONL input")->required();
  ingest_cmd->add_option("--out", ingest.out_path, "normalized corpus JSONL output");
  ingest_cmd->add_option("--chunk-size", ingest.chunk_size, "split texts into chunks of this many characters");
  ingest_cmd->callback([&] { run_ingest(ingest); });

  IndexOpts index;
  CLI::App* index_cmd = app.add_subcommand("index", "embed a corpus into a vector index");
  add_common(index_cmd, index.common);
  index_cmd->add_option("--corpus", index.corpus_path, "corpus JSONL input")->required();
  index_cmd->add_option("--out", index.out_path, "index JSON output")->required();
  index_cmd->add_option("--embedder", index.embedder, "hash|remote");
  index_cmd->add_flag("--text-only", index.text_only, "ignore image references");
  index_cmd->callback([&] { run_index(index); });

  RetrieveOpts retrieve;
  CLI::App* retrieve_cmd =
      app.add_subcommand("retrieve", "per-query candidate report with similarities and kept flags");
  add_common(retrieve_cmd, retrieve.common);
  retrieve_cmd->add_option("--query-file", retrieve.query_path, "query JSONL input")->required();
  retrieve_cmd->add_option("--corpus", retrieve.corpus_path, "corpus JSONL input")->required();
  CLI::Option* k_opt = retrieve_cmd->add_option("--k", retrieve.k, "retrieval candidates per route");
  CLI::Option* tr_opt = retrieve_cmd->add_option("--t-r", retrieve.t_r, "query similarity threshold");
  CLI::Option* tkc_opt = retrieve_cmd->add_option("--t-kc", retrieve.t_kc, "concept similarity threshold");
  retrieve_cmd->add_flag("--no-kc", retrieve.no_kc, "disable the concept filter");
  retrieve_cmd->add_option("--embedder", retrieve.embedder, "hash|remote");
  retrieve_cmd->add_option("--out", retrieve.out_path, "report JSONL output (default stdout)");
  retrieve_cmd->callback([&] {
    retrieve.k_set = k_opt->count() > 0;
    retrieve.t_r_set = tr_opt->count() > 0;
    retrieve.t_kc_set = tkc_opt->count() > 0;
    run_retrieve(retrieve);
  });

  AnnotateOpts annotate;
  CLI::App* annotate_cmd =
      app.add_subcommand("annotate", "run annotation search and emit trees, pairs, and labels");
  add_common(annotate_cmd, annotate.common);
  annotate_cmd->add_option("--query-file", annotate.query_path, "query JSONL input")->required();
  annotate_cmd->add_option("--corpus", annotate.corpus_path, "corpus JSONL input")->required();
  annotate_cmd->add_option("--tasks", annotate.tasks_path, "task suite JSON (mock backend)");
  annotate_cmd->add_option("--backend", annotate.backend, "mock|remote");
  annotate_cmd->add_option("--embedder", annotate.embedder, "hash|remote");
  annotate_cmd->add_option("--out-trees", annotate.out_trees, "tree JSONL output")->required();
  annotate_cmd->add_option("--out-pairs", annotate.out_pairs, "preference pair JSONL output")->required();
  annotate_cmd->add_option("--out-labels", annotate.out_labels, "point label JSONL output")->required();
  annotate_cmd->add_option("--workers", annotate.workers, "parallel workers");
  annotate_cmd->callback([&] { run_annotate(annotate); });

  TrainOpts train;
  CLI::App* train_cmd = app.add_subcommand("train-prm", "two-stage step-scorer training");
  add_common(train_cmd, train.common);
  train_cmd->add_option("--pairs", train.pairs_path, "preference pair JSONL input")->required();
  train_cmd->add_option("--labels", train.labels_path, "point label JSONL input")->required();
  train_cmd->add_option("--out", train.out_path, "scorer JSON output")->required();
  train_cmd->add_option("--log", train.log_path, "training log CSV output");
  train_cmd->add_option("--beta", train.train.sdpo.beta, "preference-stage beta");
  train_cmd->add_option("--sdpo-lr", train.train.sdpo.learning_rate, "preference-stage learning rate");
  train_cmd->add_option("--sdpo-epochs", train.train.sdpo.epochs, "preference-stage epochs");
  train_cmd->add_option("--pft-lr", train.train.pft_learning_rate, "point-stage learning rate");
  train_cmd->add_option("--pft-epochs", train.train.pft_epochs, "point-stage epochs");
  train_cmd->add_option("--feature-dim", train.train.feature_dim, "hashed feature dimension");
  train_cmd->callback([&] { run_train(train); });

  InferOpts infer;
  CLI::App* infer_cmd = app.add_subcommand("infer", "verified step-by-step decoding per query");
  add_common(infer_cmd, infer.common);
  infer_cmd->add_option("--query-file", infer.query_path, "query JSONL input")->required();
  infer_cmd->add_option("--corpus", infer.corpus_path, "corpus JSONL input")->required();
  infer_cmd->add_option("--tasks", infer.tasks_path, "task suite JSON (mock backend)");
  infer_cmd->add_option("--scorer", infer.scorer_path, "trained scorer JSON (default: suite oracle)");
  infer_cmd->add_option("--backend", infer.backend, "mock|remote");
  infer_cmd->add_option("--embedder", infer.embedder, "hash|remote");
  infer_cmd->add_option("--run-salt", infer.run_salt, "distinguishes repeated runs");
  infer_cmd->add_option("--out", infer.out_path, "result JSONL output (default stdout)");
  infer_cmd->callback([&] { run_infer(infer); });

  BenchOpts bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "benchmark methods on a synthetic suite");
  add_common(bench_cmd, bench.common);
  bench_cmd->add_option("--tasks", bench.tasks_path, "task suite JSON")->required();
  bench_cmd->add_option("--corpus", bench.corpus_path, "corpus JSONL input")->required();
  bench_cmd->add_option("--methods", bench.methods, "comma list: zero_shot,self_consistency,orm,ar_mcts");
  bench_cmd->add_option("--n-samples", bench.n_samples, "candidate paths per method");
  bench_cmd->add_option("--scorer", bench.scorer_path, "trained scorer JSON (default: suite oracle)");
  bench_cmd->add_option("--embedder", bench.embedder, "hash|remote");
  bench_cmd->add_option("--workers", bench.workers, "parallel workers");
  bench_cmd->add_option("--out-records", bench.out_records, "per-question JSONL output")->required();
  bench_cmd->add_option("--out-aggregate", bench.out_aggregate, "aggregate JSON output (default stdout)");
  bench_cmd->callback([&] { run_bench(bench); });

  ContaminateOpts contaminate;
  CLI::App* contaminate_cmd =
      app.add_subcommand("contaminate-check", "n-gram overlap between corpus and testset");
  add_common(contaminate_cmd, contaminate.common);
  contaminate_cmd->add_option("--corpus", contaminate.corpus_path, "corpus JSONL input")->required();
  contaminate_cmd->add_option("--query-file", contaminate.query_path, "testset query JSONL")->required();
  contaminate_cmd->add_option("--n", contaminate.ngram, "n-gram length");
  contaminate_cmd->add_option("--out", contaminate.out_path, "report JSON output (default stdout)");
  contaminate_cmd->callback([&] { run_contaminate(contaminate); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
