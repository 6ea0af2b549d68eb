#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "peaky/automaton.hpp"
#include "peaky/errors.hpp"
#include "peaky/models.hpp"
#include "peaky/signals.hpp"
#include "peaky/topology.hpp"
#include "peaky/util.hpp"

namespace peaky {

enum class LossKind { kCtc, kHybrid, kGenerative };

/// Occupancy q_t(s): the fraction of accepted path mass passing through
/// label s at frame t. Columns follow the topology alphabet.
struct SoftAlignment {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> q;  // T x |labels|
};

// Prior estimation modes for the ratio loss.
struct SoftmaxPrior {};                                 // prior = mean_t p_t, differentiated through
struct StopGradPrior {};                                // same prior, held constant in the gradient
struct LearnedPrior { std::vector<double> logits; };    // separate softmax parameters, trained jointly
struct EmaPrior { double decay = 0.99; std::vector<double> prior; };  // running average, held constant

using PriorMode = std::variant<SoftmaxPrior, StopGradPrior, LearnedPrior, EmaPrior>;

namespace detail {

/// Forward/backward sums over the automaton in natural-log space.
/// log_scores[t][s] is the per-frame log score of alphabet label s; for the
/// plain full-sum loss that is log p_t(s), for the ratio loss
/// log p_t(s) - log prior(s), for the generative loss log p(x_t | s).
struct PathSum {
  double log_total = kNegInf;
  std::vector<std::vector<double>> occupancy;  // T x |alphabet|, empty unless requested
};

inline PathSum path_sum(const AlignmentAutomaton& fsa,
                        const std::vector<std::vector<double>>& log_scores,
                        bool want_occupancy) {
  const int T = static_cast<int>(log_scores.size());
  if (!fsa.feasible(T))
    throw NoAlignmentError("path_sum: no alignment of length " + std::to_string(T) + " for '" +
                           fsa.topology().spec_string() + "'");
  const int Q = fsa.num_states();

  std::vector<std::vector<double>> alpha(T + 1, std::vector<double>(Q, kNegInf));
  for (int q : fsa.start_states()) alpha[1][q] = log_scores[0][fsa.state(q).label];
  for (int t = 1; t < T; ++t)
    for (int q = 0; q < Q; ++q) {
      if (alpha[t][q] == kNegInf) continue;
      for (int to : fsa.state(q).succ) {
        const double v = alpha[t][q] + log_scores[t][fsa.state(to).label];
        alpha[t + 1][to] = log_add(alpha[t + 1][to], v);
      }
    }

  PathSum result;
  for (int q = 0; q < Q; ++q)
    if (fsa.state(q).accepting) result.log_total = log_add(result.log_total, alpha[T][q]);
  if (!want_occupancy) return result;

  std::vector<std::vector<double>> beta(T + 1, std::vector<double>(Q, kNegInf));
  for (int q = 0; q < Q; ++q)
    if (fsa.state(q).accepting) beta[T][q] = 0.0;
  for (int t = T - 1; t >= 1; --t)
    for (int q = 0; q < Q; ++q)
      for (int to : fsa.state(q).succ) {
        if (beta[t + 1][to] == kNegInf) continue;
        const double v = beta[t + 1][to] + log_scores[t][fsa.state(to).label];
        beta[t][q] = log_add(beta[t][q], v);
      }

  result.occupancy.assign(T, std::vector<double>(fsa.num_labels(), 0.0));
  if (result.log_total == kNegInf) return result;  // caller decides how to report
  for (int t = 1; t <= T; ++t) {
    std::vector<double> mass(fsa.num_labels(), kNegInf);
    for (int q = 0; q < Q; ++q) {
      if (alpha[t][q] == kNegInf || beta[t][q] == kNegInf) continue;
      const int s = fsa.state(q).label;
      mass[s] = log_add(mass[s], alpha[t][q] + beta[t][q]);
    }
    for (int s = 0; s < fsa.num_labels(); ++s)
      result.occupancy[t - 1][s] = mass[s] == kNegInf ? 0.0 : std::exp(mass[s] - result.log_total);
  }
  return result;
}

/// Maps topology alphabet labels onto posterior-table columns by name.
inline std::vector<int> alphabet_columns(const LabelTopology& topo, const PosteriorTable& post) {
  std::vector<int> cols(topo.num_labels());
  for (int s = 0; s < topo.num_labels(); ++s) {
    cols[s] = post.label_index(topo.alphabet()[s]);
    if (cols[s] < 0)
      throw std::invalid_argument("posterior table has no column for topology label '" +
                                  topo.alphabet()[s] + "'");
  }
  return cols;
}

inline std::vector<std::vector<double>> posterior_log_scores(const LabelTopology& topo,
                                                             const PosteriorTable& post) {
  const auto cols = alphabet_columns(topo, post);
  std::vector<std::vector<double>> scores(post.T(), std::vector<double>(topo.num_labels()));
  for (int t = 0; t < post.T(); ++t)
    for (int s = 0; s < topo.num_labels(); ++s) scores[t][s] = std::log(post.probs[t][cols[s]]);
  return scores;
}

inline std::vector<std::vector<double>> ratio_log_scores(const LabelTopology& topo,
                                                         const PosteriorTable& post,
                                                         const std::vector<double>& prior) {
  if (prior.size() != post.labels.size())
    throw std::invalid_argument("ratio_log_scores: prior size does not match posterior labels");
  const auto cols = alphabet_columns(topo, post);
  for (int s = 0; s < topo.num_labels(); ++s)
    if (!(prior[cols[s]] > 0.0))
      throw ZeroPriorError("hybrid loss: zero prior mass on reachable label '" +
                           topo.alphabet()[s] + "'");
  std::vector<std::vector<double>> scores(post.T(), std::vector<double>(topo.num_labels()));
  for (int t = 0; t < post.T(); ++t)
    for (int s = 0; s < topo.num_labels(); ++s)
      scores[t][s] = std::log(post.probs[t][cols[s]]) - std::log(prior[cols[s]]);
  return scores;
}

inline std::vector<std::vector<double>> emission_log_scores(const LabelTopology& topo,
                                                            const EmissionTable& emis,
                                                            const InputSequence& x) {
  std::vector<int> rows(topo.num_labels());
  for (int s = 0; s < topo.num_labels(); ++s) {
    rows[s] = -1;
    for (std::size_t i = 0; i < emis.labels.size(); ++i)
      if (emis.labels[i] == topo.alphabet()[s]) rows[s] = static_cast<int>(i);
    if (rows[s] < 0)
      throw std::invalid_argument("emission table has no row for topology label '" +
                                  topo.alphabet()[s] + "'");
  }
  std::vector<std::vector<double>> scores(x.T(), std::vector<double>(topo.num_labels()));
  for (int t = 0; t < x.T(); ++t) {
    const int sym = emis.symbol_index(x.frame_symbol[t]);
    if (sym < 0)
      throw std::invalid_argument("emission table has no column for symbol '" + x.frame_symbol[t] + "'");
    for (int s = 0; s < topo.num_labels(); ++s)
      scores[t][s] = std::log(emis.probs[rows[s]][sym]);
  }
  return scores;
}

}  // namespace detail

/// log sum over accepted paths of prod_t p_t(s_t). -inf when every path has
/// zero probability; a structurally impossible (topology, T) pair throws.
inline double full_sum_log_prob(const LabelTopology& topo, const PosteriorTable& post) {
  const AlignmentAutomaton fsa(topo);
  return detail::path_sum(fsa, detail::posterior_log_scores(topo, post), false).log_total;
}

inline double ctc_loss(const LabelTopology& topo, const PosteriorTable& post) {
  return -full_sum_log_prob(topo, post);
}

inline SoftAlignment soft_alignment(const LabelTopology& topo, const PosteriorTable& post) {
  const AlignmentAutomaton fsa(topo);
  auto sum = detail::path_sum(fsa, detail::posterior_log_scores(topo, post), true);
  if (sum.log_total == kNegInf)
    throw ZeroPathMassError("soft_alignment: total path mass is zero");
  return SoftAlignment{topo.alphabet(), std::move(sum.occupancy)};
}

/// Time-average of the posterior rows, over the table's own labels.
inline std::vector<double> softmax_prior(const PosteriorTable& post) {
  if (post.T() == 0) throw std::invalid_argument("softmax_prior: empty posterior table");
  std::vector<double> prior(post.labels.size(), 0.0);
  for (const auto& row : post.probs)
    for (std::size_t s = 0; s < prior.size(); ++s) prior[s] += row[s];
  for (double& v : prior) v /= post.T();
  return prior;
}

/// -log sum over paths of prod_t p_t(s_t)/prior(s_t). The summand is not a
/// probability, so the value may be negative.
inline double hybrid_loss(const LabelTopology& topo, const PosteriorTable& post,
                          const std::vector<double>& prior) {
  const AlignmentAutomaton fsa(topo);
  return -detail::path_sum(fsa, detail::ratio_log_scores(topo, post, prior), false).log_total;
}

inline double generative_loss(const LabelTopology& topo, const EmissionTable& emis,
                              const InputSequence& x) {
  const AlignmentAutomaton fsa(topo);
  return -detail::path_sum(fsa, detail::emission_log_scores(topo, emis, x), false).log_total;
}

/// Occupancies under emission scores (same ratio structure as soft_alignment).
inline SoftAlignment generative_soft_alignment(const LabelTopology& topo, const EmissionTable& emis,
                                               const InputSequence& x) {
  const AlignmentAutomaton fsa(topo);
  auto sum = detail::path_sum(fsa, detail::emission_log_scores(topo, emis, x), true);
  if (sum.log_total == kNegInf)
    throw ZeroPathMassError("generative_soft_alignment: total path mass is zero");
  return SoftAlignment{topo.alphabet(), std::move(sum.occupancy)};
}

/// Current prior value for a mode, over the posterior table's labels.
/// An EMA prior that has not been initialized yet reads as uniform.
inline std::vector<double> prior_distribution(const PriorMode& mode, const PosteriorTable& post) {
  if (std::holds_alternative<SoftmaxPrior>(mode) || std::holds_alternative<StopGradPrior>(mode))
    return softmax_prior(post);
  if (const auto* learned = std::get_if<LearnedPrior>(&mode)) {
    if (learned->logits.size() != post.labels.size())
      throw std::invalid_argument("learned prior has wrong dimension");
    return softmax(learned->logits);
  }
  const auto& ema = std::get<EmaPrior>(mode);
  if (ema.prior.empty())
    return std::vector<double>(post.labels.size(), 1.0 / post.labels.size());
  if (ema.prior.size() != post.labels.size())
    throw std::invalid_argument("ema prior has wrong dimension");
  return ema.prior;
}

struct ModelGradient {
  ModelSpec params;
  std::optional<std::vector<double>> prior_logits;  // only for LearnedPrior
};

namespace detail {

/// Occupancy remapped from alphabet order onto posterior-table columns;
/// labels the topology cannot reach get zero occupancy.
inline std::vector<std::vector<double>> occupancy_on_columns(
    const LabelTopology& topo, const PosteriorTable& post,
    const std::vector<std::vector<double>>& occupancy) {
  const auto cols = alphabet_columns(topo, post);
  std::vector<std::vector<double>> q(post.T(), std::vector<double>(post.labels.size(), 0.0));
  for (int t = 0; t < post.T(); ++t)
    for (int s = 0; s < topo.num_labels(); ++s) q[t][cols[s]] = occupancy[t][s];
  return q;
}

/// Chains per-frame logit gradients into the parameters of a
/// discriminative model variant.
inline ModelSpec chain_logit_gradient(const ModelSpec& model, const InputSequence& x,
                                      const PosteriorTable& post,
                                      const std::vector<std::vector<double>>& logit_grad) {
  const int T = post.T();
  if (const auto* m = std::get_if<BiasModel>(&model)) {
    BiasModel g = *m;
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
    for (int t = 0; t < T; ++t)
      for (std::size_t s = 0; s < g.bias.size(); ++s) g.bias[s] += logit_grad[t][s];
    return g;
  }
  if (const auto* m = std::get_if<FfnnModel>(&model)) {
    FfnnModel g = *m;
    for (auto& row : g.weights) std::fill(row.begin(), row.end(), 0.0);
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
    for (int t = 0; t < T; ++t)
      for (std::size_t d = 0; d < g.weights.size(); ++d) {
        const double xv = x.frames[t][d];
        if (xv == 0.0) continue;
        for (std::size_t s = 0; s < g.labels.size(); ++s) g.weights[d][s] += xv * logit_grad[t][s];
      }
    if (m->with_bias)
      for (int t = 0; t < T; ++t)
        for (std::size_t s = 0; s < g.labels.size(); ++s) g.bias[s] += logit_grad[t][s];
    return g;
  }
  if (const auto* m = std::get_if<MemoryModel>(&model)) {
    MemoryModel g = *m;
    g.memory = logit_grad;
    return g;
  }
  if (const auto* m = std::get_if<TwoParamModel>(&model)) {
    TwoParamModel g = *m;
    g.theta_label = 0.0;
    g.theta_blank = 0.0;
    const int cl = post.label_index(m->label);
    const int cb = post.label_index(m->blank);
    for (int t = 0; t < T; ++t) {
      if (x.frame_symbol[t] == m->label)
        g.theta_label += logit_grad[t][cl] - logit_grad[t][cb];
      else
        g.theta_blank += logit_grad[t][cb] - logit_grad[t][cl];
    }
    return g;
  }
  throw std::invalid_argument("chain_logit_gradient: unsupported model variant");
}

}  // namespace detail

/// Analytic gradient of the selected loss with respect to the model
/// parameters, assembled from the occupancy q. For softmax outputs the
/// per-frame logit gradient is p_t - q_t; the softmax-prior mode adds the
/// term from differentiating through the prior, the stop-grad and EMA modes
/// hold the prior constant, and the learned prior also yields a gradient
/// for its own logits.
inline ModelGradient model_gradient(const ModelSpec& model, LossKind kind,
                                    const LabelTopology& topo, const InputSequence& x,
                                    const std::optional<PriorMode>& prior_mode = std::nullopt) {
  const AlignmentAutomaton fsa(topo);

  if (kind == LossKind::kGenerative) {
    const auto* m = std::get_if<GenerativeModel>(&model);
    if (!m) throw std::invalid_argument("model_gradient: generative loss needs a generative model");
    const EmissionTable emis = emissions(*m);
    auto sum = detail::path_sum(fsa, detail::emission_log_scores(topo, emis, x), true);
    if (sum.log_total == kNegInf) throw ZeroPathMassError("model_gradient: zero path mass");

    // E[s][x]: occupancy aggregated per input symbol;
    // emission-logit gradient: Q(s) * p(x|s) - E[s][x].
    const int rl = 0, rb = 1;  // emissions() rows: (label, blank)
    double e[2][2] = {{0, 0}, {0, 0}};
    const int sl = topo.label_index(m->label), sb = topo.label_index(m->blank);
    if (sl < 0 || sb < 0)
      throw std::invalid_argument("model_gradient: topology does not use the model's labels");
    for (int t = 0; t < x.T(); ++t) {
      const int col = x.frame_symbol[t] == m->label ? 0 : 1;
      e[rl][col] += sum.occupancy[t][sl];
      e[rb][col] += sum.occupancy[t][sb];
    }
    const double q_label = e[rl][0] + e[rl][1];
    const double q_blank = e[rb][0] + e[rb][1];
    GenerativeModel g = *m;
    const double gl0 = q_label * emis.probs[rl][0] - e[rl][0];
    const double gl1 = q_label * emis.probs[rl][1] - e[rl][1];
    const double gb0 = q_blank * emis.probs[rb][0] - e[rb][0];
    const double gb1 = q_blank * emis.probs[rb][1] - e[rb][1];
    g.theta_label = gl0 - gl1;  // d logits / d theta_label = (+1, -1)
    g.theta_blank = gb1 - gb0;
    return ModelGradient{g, std::nullopt};
  }

  if (is_generative(model))
    throw std::invalid_argument("model_gradient: generative model only pairs with the generative loss");
  const PosteriorTable post = posteriors(model, x);
  const int T = post.T();
  const std::size_t S = post.labels.size();

  if (kind == LossKind::kCtc) {
    auto sum = detail::path_sum(fsa, detail::posterior_log_scores(topo, post), true);
    if (sum.log_total == kNegInf) throw ZeroPathMassError("model_gradient: zero path mass");
    auto q = detail::occupancy_on_columns(topo, post, sum.occupancy);
    std::vector<std::vector<double>> g(T, std::vector<double>(S));
    for (int t = 0; t < T; ++t)
      for (std::size_t s = 0; s < S; ++s) g[t][s] = post.probs[t][s] - q[t][s];
    return ModelGradient{detail::chain_logit_gradient(model, x, post, g), std::nullopt};
  }

  if (!prior_mode) throw std::invalid_argument("model_gradient: hybrid loss needs a prior mode");
  const std::vector<double> prior = prior_distribution(*prior_mode, post);
  auto sum = detail::path_sum(fsa, detail::ratio_log_scores(topo, post, prior), true);
  if (sum.log_total == kNegInf) throw ZeroPathMassError("model_gradient: zero path mass");
  auto q = detail::occupancy_on_columns(topo, post, sum.occupancy);

  std::vector<std::vector<double>> g(T, std::vector<double>(S));
  for (int t = 0; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) g[t][s] = post.probs[t][s] - q[t][s];

  std::vector<double> total_q(S, 0.0);
  for (int t = 0; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) total_q[s] += q[t][s];

  if (std::holds_alternative<SoftmaxPrior>(*prior_mode)) {
    // d prior / d logits contributes p_t ⊙ (r - <p_t, r>), r = Q / (T * prior).
    std::vector<double> r(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
      if (prior[s] > 0.0) r[s] = total_q[s] / (T * prior[s]);
    for (int t = 0; t < T; ++t) {
      double pr = 0.0;
      for (std::size_t s = 0; s < S; ++s) pr += post.probs[t][s] * r[s];
      for (std::size_t s = 0; s < S; ++s) g[t][s] += post.probs[t][s] * (r[s] - pr);
    }
  }

  ModelGradient out{detail::chain_logit_gradient(model, x, post, g), std::nullopt};
  if (std::holds_alternative<LearnedPrior>(*prior_mode)) {
    std::vector<double> pg(S);
    for (std::size_t s = 0; s < S; ++s) pg[s] = total_q[s] - T * prior[s];
    out.prior_logits = std::move(pg);
  }
  return out;
}

/// CSV export, header `t,label,q`, t 1-based.
inline void write_soft_alignment_csv(const SoftAlignment& sa, std::ostream& os) {
  os << "t,label,q\n";
  for (std::size_t t = 0; t < sa.q.size(); ++t)
    for (std::size_t s = 0; s < sa.labels.size(); ++s)
      os << (t + 1) << ',' << sa.labels[s] << ',' << format_double(sa.q[t][s]) << '\n';
}

}  // namespace peaky
