#pragma once

// Desk-scale process reward model: a linear-softmax policy over a finite step
// vocabulary with a pluggable featurizer, the step-wise preference loss
// (stage 1), the point-wise cross-entropy loss (stage 2), a two-stage
// curriculum trainer with backtracking gradient descent, PRM scoring, and the
// selection baselines (self-consistency, outcome-reward selection, beam
// sampling).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "armcts/common.hpp"
#include "armcts/core.hpp"
#include "armcts/embedding.hpp"
#include "armcts/generator.hpp"
#include "armcts/mcts.hpp"

namespace armcts {

// Maps a (query handle, reasoning prefix) to a fixed-length feature vector.
// The query is identified by id; featurizers needing more can close over a
// query table.
class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual std::vector<double> features(const std::string& query_id,
                                       const ReasoningPath& prefix) const = 0;
  virtual int dim() const = 0;
};

// Reference featurizer: sign-hash embedding of "query_id + prefix step texts".
class HashFeaturizer final : public Featurizer {
 public:
  explicit HashFeaturizer(int dim) : dim_(dim) {
    if (dim < 2) throw Error(Errc::precondition, "HashFeaturizer: dim must be >= 2");
  }
  std::vector<double> features(const std::string& query_id,
                               const ReasoningPath& prefix) const override {
    std::string text = query_id;
    const std::string steps = path_text(prefix);
    if (!steps.empty()) {
      text.push_back(' ');
      text += steps;
    }
    return hash_embed_text(text, dim_);
  }
  int dim() const override { return dim_; }

 private:
  int dim_;
};

// Linear-softmax policy/scorer. weights is feature_dim x vocab, row-major by
// feature. The same object serves as policy (log-softmax over the vocabulary)
// and as scorer (sigmoid of one step's logit).
struct ParametricPolicy {
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> vocab_index;
  std::vector<double> weights;  // [f * vocab.size() + v]
  std::shared_ptr<const Featurizer> featurizer;

  int feature_dim() const { return featurizer ? featurizer->dim() : 0; }
  std::size_t vocab_size() const { return vocab.size(); }
};

inline ParametricPolicy make_policy(std::vector<std::string> vocab,
                                    std::shared_ptr<const Featurizer> featurizer) {
  ParametricPolicy p;
  p.vocab = std::move(vocab);
  for (std::size_t i = 0; i < p.vocab.size(); ++i)
    p.vocab_index.emplace(p.vocab[i], static_cast<int>(i));
  p.featurizer = std::move(featurizer);
  p.weights.assign(static_cast<std::size_t>(p.featurizer->dim()) * p.vocab.size(), 0.0);
  return p;
}

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -ln sigmoid(x) = softplus(-x), computed without overflow.
inline double neg_log_sigmoid(double x) {
  if (x < -40.0) return -x;
  return std::log1p(std::exp(-x));
}

inline std::vector<double> logits(const ParametricPolicy& p, const std::vector<double>& phi) {
  const std::size_t v = p.vocab.size();
  std::vector<double> z(v, 0.0);
  for (std::size_t f = 0; f < phi.size(); ++f) {
    const double x = phi[f];
    if (x == 0.0) continue;
    const double* row = p.weights.data() + f * v;
    for (std::size_t j = 0; j < v; ++j) z[j] += x * row[j];
  }
  return z;
}

inline double log_sum_exp(const std::vector<double>& z) {
  double m = z[0];
  for (double x : z) m = std::max(m, x);
  double s = 0.0;
  for (double x : z) s += std::exp(x - m);
  return m + std::log(s);
}

inline int vocab_index_or_throw(const ParametricPolicy& p, const std::string& step_text) {
  auto it = p.vocab_index.find(step_text);
  if (it == p.vocab_index.end()) throw Error(Errc::unknown_step, step_text);
  return it->second;
}

}  // namespace detail

// log softmax(weights . features) at the step's vocabulary index.
inline double policy_logprob(const ParametricPolicy& policy, const std::string& query_id,
                             const ReasoningPath& prefix, const ReasoningStep& step) {
  const int idx = detail::vocab_index_or_throw(policy, step.text);
  const std::vector<double> phi = policy.featurizer->features(query_id, prefix);
  const std::vector<double> z = detail::logits(policy, phi);
  return z[static_cast<std::size_t>(idx)] - detail::log_sum_exp(z);
}

struct DpoConfig {
  double beta = 0.3;
  double learning_rate = 1.0;
  int epochs = 100;
};

// Mean over pairs of -ln sigmoid(beta * [(log pi_theta(y+) - log pi_ref(y+))
// - (log pi_theta(y-) - log pi_ref(y-))]); the standard preference-ratio
// objective against a frozen reference.
inline double sdpo_loss(const ParametricPolicy& theta, const ParametricPolicy& ref,
                        const std::vector<PreferencePair>& pairs, double beta) {
  if (pairs.empty()) throw Error(Errc::empty_batch, "sdpo_loss");
  double total = 0.0;
  for (const PreferencePair& p : pairs) {
    const double h = beta * ((policy_logprob(theta, p.query_id, p.prefix, p.preferred) -
                              policy_logprob(ref, p.query_id, p.prefix, p.preferred)) -
                             (policy_logprob(theta, p.query_id, p.prefix, p.dispreferred) -
                              policy_logprob(ref, p.query_id, p.prefix, p.dispreferred)));
    total += detail::neg_log_sigmoid(h);
  }
  return total / static_cast<double>(pairs.size());
}

// Analytic gradient of sdpo_loss with respect to theta's weights. Because the
// preferred and dispreferred step share a prefix, the softmax normalizer
// cancels and the gradient touches only the two step columns:
// d/dW[f][y+] = (sigmoid(h) - 1) * beta * phi[f] (and the negation at y-).
inline std::vector<double> sdpo_grad(const ParametricPolicy& theta, const ParametricPolicy& ref,
                                     const std::vector<PreferencePair>& pairs, double beta) {
  if (pairs.empty()) throw Error(Errc::empty_batch, "sdpo_grad");
  std::vector<double> grad(theta.weights.size(), 0.0);
  const std::size_t v = theta.vocab.size();
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  for (const PreferencePair& p : pairs) {
    const int pos = detail::vocab_index_or_throw(theta, p.preferred.text);
    const int neg = detail::vocab_index_or_throw(theta, p.dispreferred.text);
    const double h = beta * ((policy_logprob(theta, p.query_id, p.prefix, p.preferred) -
                              policy_logprob(ref, p.query_id, p.prefix, p.preferred)) -
                             (policy_logprob(theta, p.query_id, p.prefix, p.dispreferred) -
                              policy_logprob(ref, p.query_id, p.prefix, p.dispreferred)));
    const double g = (detail::sigmoid(h) - 1.0) * beta * inv_n;
    const std::vector<double> phi = theta.featurizer->features(p.query_id, p.prefix);
    for (std::size_t f = 0; f < phi.size(); ++f) {
      if (phi[f] == 0.0) continue;
      grad[f * v + static_cast<std::size_t>(pos)] += g * phi[f];
      grad[f * v + static_cast<std::size_t>(neg)] -= g * phi[f];
    }
  }
  return grad;
}

namespace detail {

template <typename LossFn>
ParametricPolicy descend_once(const ParametricPolicy& policy, const std::vector<double>& grad,
                              double learning_rate, LossFn loss_of) {
  for (double g : grad)
    if (!std::isfinite(g)) throw Error(Errc::non_finite_gradient, "gradient is not finite");
  const double base = loss_of(policy);
  double lr = learning_rate;
  // Backtracking halving: accept the first candidate that does not increase
  // the batch loss; after 20 halvings keep the policy unchanged.
  for (int attempt = 0; attempt <= 20; ++attempt) {
    ParametricPolicy candidate = policy;
    for (std::size_t i = 0; i < candidate.weights.size(); ++i)
      candidate.weights[i] -= lr * grad[i];
    if (loss_of(candidate) <= base) return candidate;
    lr *= 0.5;
  }
  return policy;
}

}  // namespace detail

// One gradient-descent step on sdpo_loss; the reference stays untouched.
inline ParametricPolicy sdpo_step(const ParametricPolicy& theta, const ParametricPolicy& ref,
                                  const std::vector<PreferencePair>& pairs,
                                  const DpoConfig& config) {
  if (pairs.empty()) throw Error(Errc::empty_batch, "sdpo_step");
  const std::vector<double> grad = sdpo_grad(theta, ref, pairs, config.beta);
  return detail::descend_once(theta, grad, config.learning_rate, [&](const ParametricPolicy& p) {
    return sdpo_loss(p, ref, pairs, config.beta);
  });
}

inline constexpr double kScoreClamp = 1e-12;

struct PrmScore {
  double value = 0.5;  // strictly inside (0, 1)
};

// Sigmoid of the step's logit under the scorer; steps outside the vocabulary
// score 0.5 (zero logit). The hard variant snaps to the clamp bounds around
// a 0.5 threshold.
inline PrmScore prm_score(const ParametricPolicy& scorer, const MultimodalQuery& query,
                          const ReasoningPath& prefix, const ReasoningStep& step,
                          bool hard = false) {
  double z = 0.0;
  auto it = scorer.vocab_index.find(step.text);
  if (it != scorer.vocab_index.end()) {
    const std::vector<double> phi = scorer.featurizer->features(query.id, prefix);
    const std::size_t v = scorer.vocab.size();
    for (std::size_t f = 0; f < phi.size(); ++f)
      z += phi[f] * scorer.weights[f * v + static_cast<std::size_t>(it->second)];
  }
  double r = detail::sigmoid(z);
  r = std::clamp(r, kScoreClamp, 1.0 - kScoreClamp);
  if (hard) r = r > 0.5 ? 1.0 - kScoreClamp : kScoreClamp;
  return {r};
}

// Negated point-wise log-likelihood, summed over the batch:
// -sum[y ln r + (1-y) ln(1-r)] with r clamped away from 0 and 1.
inline double pft_loss(const ParametricPolicy& scorer,
                       const std::vector<StepAnnotation>& annotations) {
  if (annotations.empty()) throw Error(Errc::empty_batch, "pft_loss");
  double total = 0.0;
  for (const StepAnnotation& a : annotations) {
    const int idx = detail::vocab_index_or_throw(scorer, a.step.text);
    const std::vector<double> phi = scorer.featurizer->features(a.query_id, a.prefix);
    const std::size_t v = scorer.vocab.size();
    double z = 0.0;
    for (std::size_t f = 0; f < phi.size(); ++f)
      z += phi[f] * scorer.weights[f * v + static_cast<std::size_t>(idx)];
    const double r = std::clamp(detail::sigmoid(z), kScoreClamp, 1.0 - kScoreClamp);
    total -= a.label == 1 ? std::log(r) : std::log(1.0 - r);
  }
  return total;
}

// Gradient of pft_loss: d/dz = (sigmoid(z) - label) on the step's column.
inline std::vector<double> pft_grad(const ParametricPolicy& scorer,
                                    const std::vector<StepAnnotation>& annotations) {
  if (annotations.empty()) throw Error(Errc::empty_batch, "pft_grad");
  std::vector<double> grad(scorer.weights.size(), 0.0);
  const std::size_t v = scorer.vocab.size();
  for (const StepAnnotation& a : annotations) {
    const int idx = detail::vocab_index_or_throw(scorer, a.step.text);
    const std::vector<double> phi = scorer.featurizer->features(a.query_id, a.prefix);
    double z = 0.0;
    for (std::size_t f = 0; f < phi.size(); ++f)
      z += phi[f] * scorer.weights[f * v + static_cast<std::size_t>(idx)];
    const double g = detail::sigmoid(z) - static_cast<double>(a.label);
    for (std::size_t f = 0; f < phi.size(); ++f) {
      if (phi[f] == 0.0) continue;
      grad[f * v + static_cast<std::size_t>(idx)] += g * phi[f];
    }
  }
  return grad;
}

// One backtracking gradient-descent step on pft_loss.
inline ParametricPolicy pft_step(const ParametricPolicy& scorer,
                                 const std::vector<StepAnnotation>& annotations,
                                 double learning_rate) {
  if (annotations.empty()) throw Error(Errc::empty_batch, "pft_step");
  const std::vector<double> grad = pft_grad(scorer, annotations);
  return detail::descend_once(scorer, grad, learning_rate, [&](const ParametricPolicy& p) {
    return pft_loss(p, annotations);
  });
}

struct TrainConfig {
  DpoConfig sdpo;                  // stage 1
  double pft_learning_rate = 1.0;  // stage 2
  int pft_epochs = 100;
  int feature_dim = 64;            // used when no featurizer is supplied
};

struct TrainLogRow {
  int step = 0;
  std::string stage;  // "sdpo" or "pft"
  double loss = 0.0;
};

struct TrainResult {
  ParametricPolicy scorer;   // stage-2 output
  ParametricPolicy stage1;   // the preference-aligned intermediate
  std::vector<TrainLogRow> log;
};

inline std::string train_log_csv(const std::vector<TrainLogRow>& rows) {
  std::string out = "step,stage,loss\n";
  for (const TrainLogRow& r : rows) {
    json loss = r.loss;  // shortest round-trip formatting
    out += std::to_string(r.step) + "," + r.stage + "," + loss.dump() + "\n";
  }
  return out;
}

// Vocabulary = sorted union of step texts across both training sets.
inline std::vector<std::string> build_vocab(const std::vector<PreferencePair>& pairs,
                                            const std::vector<StepAnnotation>& annotations) {
  std::set<std::string> steps;
  for (const PreferencePair& p : pairs) {
    steps.insert(p.preferred.text);
    steps.insert(p.dispreferred.text);
  }
  for (const StepAnnotation& a : annotations) steps.insert(a.step.text);
  return {steps.begin(), steps.end()};
}

// Two-stage curriculum: preference alignment from zero weights against a
// frozen zero-weight reference, then point-wise fine-tuning initialized from
// the stage-1 weights. Fully deterministic (full-batch descent, no RNG).
inline TrainResult train_curriculum(const std::vector<PreferencePair>& pairs,
                                    const std::vector<StepAnnotation>& annotations,
                                    const TrainConfig& config,
                                    std::shared_ptr<const Featurizer> featurizer = nullptr) {
  if (pairs.empty()) throw Error(Errc::empty_batch, "train_curriculum: no pairs");
  if (annotations.empty()) throw Error(Errc::empty_batch, "train_curriculum: no annotations");
  if (!featurizer) featurizer = std::make_shared<HashFeaturizer>(config.feature_dim);

  TrainResult result;
  ParametricPolicy theta = make_policy(build_vocab(pairs, annotations), featurizer);
  const ParametricPolicy ref = theta;  // frozen at initialization

  result.log.push_back({0, "sdpo", sdpo_loss(theta, ref, pairs, config.sdpo.beta)});
  for (int epoch = 1; epoch <= config.sdpo.epochs; ++epoch) {
    theta = sdpo_step(theta, ref, pairs, config.sdpo);
    result.log.push_back({epoch, "sdpo", sdpo_loss(theta, ref, pairs, config.sdpo.beta)});
  }
  result.stage1 = theta;

  result.log.push_back({0, "pft", pft_loss(theta, annotations)});
  for (int epoch = 1; epoch <= config.pft_epochs; ++epoch) {
    theta = pft_step(theta, annotations, config.pft_learning_rate);
    result.log.push_back({epoch, "pft", pft_loss(theta, annotations)});
  }
  result.scorer = theta;
  return result;
}

// ---- Scorer contract for inference -------------------------------------------

class PrmScorer {
 public:
  virtual ~PrmScorer() = default;
  virtual double score(const MultimodalQuery& query, const ReasoningPath& prefix,
                       const ReasoningStep& step) const = 0;
};

class PolicyPrm final : public PrmScorer {
 public:
  PolicyPrm(ParametricPolicy scorer, bool hard = false)
      : scorer_(std::move(scorer)), hard_(hard) {}
  double score(const MultimodalQuery& query, const ReasoningPath& prefix,
               const ReasoningStep& step) const override {
    return prm_score(scorer_, query, prefix, step, hard_).value;
  }

 private:
  ParametricPolicy scorer_;
  bool hard_;
};

// ---- Baselines ----------------------------------------------------------------

// Majority vote over normalized answers; ties go to the earliest first
// occurrence. Returns the normalized winner.
inline std::string self_consistency(const std::vector<std::string>& answers) {
  if (answers.empty()) throw Error(Errc::empty_answer_set, "self_consistency");
  std::vector<std::string> order;  // first-occurrence order
  std::unordered_map<std::string, int> counts;
  for (const std::string& raw : answers) {
    const std::string norm = normalize_answer(raw);
    if (counts.emplace(norm, 0).second) order.push_back(norm);
    ++counts[norm];
  }
  std::string best = order.front();
  for (const std::string& a : order)
    if (counts[a] > counts[best]) best = a;
  return best;
}

// Outcome-reward score of a whole trajectory: sigmoid of the first-column
// logit over features of (query, full path). Outcome scorers are built as
// single-column policies.
inline double orm_score(const ParametricPolicy& orm, const MultimodalQuery& query,
                        const ReasoningPath& path) {
  const std::vector<double> phi = orm.featurizer->features(query.id, path);
  const std::size_t v = orm.vocab.size();
  if (v == 0) throw Error(Errc::precondition, "orm_score: empty vocabulary");
  double z = 0.0;
  for (std::size_t f = 0; f < phi.size(); ++f) z += phi[f] * orm.weights[f * v];
  return detail::sigmoid(z);
}

// Argmax of orm_score over terminal paths, ties to the first.
inline ReasoningPath orm_select(const std::vector<ReasoningPath>& paths,
                                const ParametricPolicy& orm, const MultimodalQuery& query) {
  if (paths.empty()) throw Error(Errc::empty_path_set, "orm_select");
  for (const ReasoningPath& p : paths)
    if (!p.terminal()) throw Error(Errc::non_terminal_path, "orm_select requires terminal paths");
  std::size_t best = 0;
  double best_score = orm_score(orm, query, paths[0]);
  for (std::size_t i = 1; i < paths.size(); ++i) {
    const double s = orm_score(orm, query, paths[i]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return paths[best];
}

// n independent no-retrieval trajectories; the baseline sampling space.
// Sample j is seeded by mix(seed, j) so sets at growing n are nested.
inline std::vector<ReasoningPath> beam_sample(const GeneratorBackend& generator,
                                              const MultimodalQuery& query, int n,
                                              double temperature, std::uint64_t seed) {
  if (!(temperature > 0.0)) throw Error(Errc::precondition, "beam_sample: temperature must be > 0");
  if (n < 1) throw Error(Errc::precondition, "beam_sample: n must be >= 1");
  std::vector<ReasoningPath> out;
  out.reserve(static_cast<std::size_t>(n));
  ReasoningPath empty;
  for (int j = 0; j < n; ++j) {
    try {
      out.push_back(generator.generate_completion(query, empty, nullptr, temperature,
                                                  mix(seed, 0xbea3ull, static_cast<std::uint64_t>(j))));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      throw Error(Errc::generator_failure, ex.what());
    }
  }
  return out;
}

// ---- Serialization ------------------------------------------------------------

inline json to_json(const ParametricPolicy& p) {
  json j;
  j["feature_dim"] = p.feature_dim();
  j["vocab"] = p.vocab;
  j["weights"] = p.weights;
  return j;
}

inline ParametricPolicy policy_from_json(const json& j) {
  const int dim = j.at("feature_dim").get<int>();
  ParametricPolicy p = make_policy(j.at("vocab").get<std::vector<std::string>>(),
                                   std::make_shared<HashFeaturizer>(dim));
  std::vector<double> weights = j.at("weights").get<std::vector<double>>();
  if (weights.size() != p.weights.size())
    throw Error(Errc::dim_mismatch, "stored weights size mismatch");
  p.weights = std::move(weights);
  return p;
}

}  // namespace armcts
