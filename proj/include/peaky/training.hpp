#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "peaky/analysis.hpp"
#include "peaky/counting.hpp"
#include "peaky/losses.hpp"
#include "peaky/models.hpp"
#include "peaky/signals.hpp"
#include "peaky/topology.hpp"
#include "peaky/util.hpp"

namespace peaky {

struct TrainConfig {
  double learning_rate = 0.1;
  int max_steps = 50000;
  double stop_delta = 1e-10;               // stop when |loss change| drops below
  double convergence_loss_threshold = 1.0; // first step with loss below counts as converged
  unsigned seed = 0;                       // reserved; all shipped runs are deterministic
  int realign_every = 0;                   // >0: two-phase mode, re-estimate prior and
                                           // soft alignment every k steps, hold both fixed
                                           // in between (hybrid loss only)

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
    if (max_steps < 1) throw std::invalid_argument("train: max_steps must be >= 1");
  }
};

enum class Termination { kMaxSteps, kLossPlateau, kDiverged };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kMaxSteps: return "max_steps";
    case Termination::kLossPlateau: return "loss_plateau";
    case Termination::kDiverged: return "diverged";
  }
  return "?";
}

struct ExperimentResult {
  std::vector<double> loss_curve;
  ModelSpec final_model;
  PosteriorTable final_posteriors;
  PeakinessReport peakiness;
  int sequence_error = 1;
  std::optional<int> convergence_step;
  double mean_q_dominant = 0.0;
  Termination termination = Termination::kMaxSteps;
};

namespace detail {

inline double parameter_magnitude(const ModelSpec& model) {
  double hi = 0.0;
  ModelSpec copy = model;
  for_each_parameter(copy, [&](double& v) { hi = std::max(hi, std::abs(v)); });
  return hi;
}

/// For the generative model the label "posteriors" reported and decoded are
/// the row-normalized emission scores p(x_t|s); per-frame normalization
/// rescales every path by the same constant, so Viterbi order and
/// occupancies are unchanged.
inline PosteriorTable reporting_posteriors(const ModelSpec& model, const InputSequence& x) {
  if (const auto* m = std::get_if<GenerativeModel>(&model)) {
    const EmissionTable emis = emissions(*m);
    PosteriorTable table;
    table.labels = emis.labels;
    table.probs.reserve(x.T());
    for (int t = 0; t < x.T(); ++t) {
      const int sym = emis.symbol_index(x.frame_symbol[t]);
      if (sym < 0)
        throw std::invalid_argument("train: emission table has no column for symbol '" +
                                    x.frame_symbol[t] + "'");
      std::vector<double> row(emis.labels.size());
      double z = 0.0;
      for (std::size_t s = 0; s < row.size(); ++s) z += row[s] = emis.probs[s][sym];
      for (double& v : row) v /= z;
      table.probs.push_back(std::move(row));
    }
    return table;
  }
  return posteriors(model, x);
}

inline double loss_value(const ModelSpec& model, LossKind kind, const LabelTopology& topo,
                         const InputSequence& x, const std::optional<PriorMode>& prior_mode) {
  if (kind == LossKind::kGenerative)
    return generative_loss(topo, emissions(std::get<GenerativeModel>(model)), x);
  const PosteriorTable post = posteriors(model, x);
  if (kind == LossKind::kCtc) return ctc_loss(topo, post);
  if (!prior_mode) throw std::invalid_argument("train: hybrid loss needs a prior mode");
  return hybrid_loss(topo, post, prior_distribution(*prior_mode, post));
}

/// Gradient of the frozen-alignment cross entropy -sum_t,s q_t(s) log p_t(s);
/// the per-frame logit gradient is again p_t - q_t with q held fixed.
inline ModelSpec frozen_alignment_gradient(const ModelSpec& model, const InputSequence& x,
                                           const std::vector<std::vector<double>>& q_fixed) {
  const PosteriorTable post = posteriors(model, x);
  std::vector<std::vector<double>> g(post.T(), std::vector<double>(post.labels.size()));
  for (int t = 0; t < post.T(); ++t)
    for (std::size_t s = 0; s < post.labels.size(); ++s)
      g[t][s] = post.probs[t][s] - q_fixed[t][s];
  return chain_logit_gradient(model, x, post, g);
}

}  // namespace detail

/// Plain full-batch gradient descent from the given model. Deterministic:
/// the same inputs and config produce a bitwise-identical loss curve.
inline ExperimentResult train(ModelSpec model, LossKind kind, std::optional<PriorMode> prior_mode,
                              const LabelTopology& topo, const InputSequence& x,
                              const std::vector<std::string>& target, const TrainConfig& config) {
  config.validate();
  if (kind == LossKind::kGenerative && !is_generative(model))
    throw std::invalid_argument("train: generative loss needs a generative model");
  if (kind != LossKind::kGenerative && is_generative(model))
    throw std::invalid_argument("train: generative model only trains with the generative loss");
  if (kind == LossKind::kHybrid && !prior_mode)
    throw std::invalid_argument("train: hybrid loss needs a prior mode");
  if (kind != LossKind::kHybrid && prior_mode)
    throw std::invalid_argument("train: prior modes only apply to the hybrid loss");

  constexpr double kParamGuard = 1e6;
  ExperimentResult result;
  result.termination = Termination::kMaxSteps;

  // Two-phase state: prior and occupancy held fixed between re-estimations.
  const bool two_phase = kind == LossKind::kHybrid && config.realign_every > 0;
  std::vector<std::vector<double>> frozen_q;

  double prev_loss = std::numeric_limits<double>::infinity();
  for (int step = 0; step < config.max_steps; ++step) {
    // A prior that starves a reachable label or posteriors that zero out
    // every path are degenerate runs (the EMA prior is known to be able to
    // get there), not usage errors: report them as divergence.
    try {
      if (prior_mode) {
        if (auto* ema = std::get_if<EmaPrior>(&*prior_mode)) {
          const std::vector<double> current = softmax_prior(posteriors(model, x));
          if (ema->prior.empty()) ema->prior.assign(current.size(), 1.0 / current.size());
          for (std::size_t s = 0; s < current.size(); ++s)
            ema->prior[s] = ema->decay * ema->prior[s] + (1.0 - ema->decay) * current[s];
        }
      }

      const double loss = detail::loss_value(model, kind, topo, x, prior_mode);
      result.loss_curve.push_back(loss);
      if (!result.convergence_step && loss < config.convergence_loss_threshold)
        result.convergence_step = step;
      if (!std::isfinite(loss)) {
        result.termination = Termination::kDiverged;
        break;
      }
      if (std::abs(prev_loss - loss) < config.stop_delta) {
        result.termination = Termination::kLossPlateau;
        break;
      }
      prev_loss = loss;

      if (two_phase) {
        if (step % config.realign_every == 0) {
          const PosteriorTable post = posteriors(model, x);
          const std::vector<double> prior = prior_distribution(*prior_mode, post);
          const AlignmentAutomaton fsa(topo);
          auto sum = detail::path_sum(fsa, detail::ratio_log_scores(topo, post, prior), true);
          if (sum.log_total == kNegInf) throw ZeroPathMassError("train: zero path mass");
          frozen_q = detail::occupancy_on_columns(topo, post, sum.occupancy);
        }
        model = apply_gradient_step(model, detail::frozen_alignment_gradient(model, x, frozen_q),
                                    config.learning_rate);
      } else {
        ModelGradient grad = model_gradient(model, kind, topo, x, prior_mode);
        model = apply_gradient_step(model, grad.params, config.learning_rate);
        if (grad.prior_logits) {
          auto& learned = std::get<LearnedPrior>(*prior_mode);
          for (std::size_t s = 0; s < learned.logits.size(); ++s)
            learned.logits[s] -= config.learning_rate * (*grad.prior_logits)[s];
        }
      }
    } catch (const ZeroPriorError&) {
      result.termination = Termination::kDiverged;
      break;
    } catch (const ZeroPathMassError&) {
      result.termination = Termination::kDiverged;
      break;
    }
    if (detail::parameter_magnitude(model) > kParamGuard) {
      result.termination = Termination::kDiverged;
      break;
    }
  }

  result.final_model = model;
  result.final_posteriors = detail::reporting_posteriors(model, x);
  result.peakiness = peakiness_report(topo, result.final_posteriors);

  const std::string blank = topo.alphabet().front();
  result.sequence_error = sequence_error(greedy_decode(result.final_posteriors, blank), target);

  if (result.peakiness.dominant) {
    try {
      const SoftAlignment sa = soft_alignment(topo, result.final_posteriors);
      const int dom = topo.label_index(*result.peakiness.dominant);
      double mean = 0.0;
      for (const auto& row : sa.q) mean += row[dom];
      result.mean_q_dominant = mean / sa.q.size();
    } catch (const ZeroPathMassError&) {
      result.mean_q_dominant = 0.0;  // degenerate final model
    }
  }
  return result;
}

enum class RatioMode { kUniformExact, kMemoryProxy };

struct RatioRow {
  int T = 0;
  double mean_q_blank = 0.0;
  std::optional<int> convergence_step;
  bool peaky = false;  // not part of the CSV; kept for analysis
};

/// Frames-per-label sweep for a fixed target under the blank topology.
/// kUniformExact evaluates mean q(blank) = C(blank,T) / (T*C(T)) exactly
/// from the count table; kMemoryProxy trains a memory model on the scaled
/// five-segment input and reports its final mean q(blank) and the first
/// step with loss below the configured threshold.
inline std::vector<RatioRow> ratio_sweep(const std::vector<std::string>& target,
                                         const std::vector<int>& T_list, RatioMode mode,
                                         const TrainConfig& config = {}) {
  const std::string blank = "B";
  const LabelTopology topo = ctc_topology(target, blank);
  for (int T : T_list)
    if (T < topo.min_frames())
      throw std::invalid_argument("ratio_sweep: T=" + std::to_string(T) +
                                  " below minimum alignment length " +
                                  std::to_string(topo.min_frames()));
  if (mode == RatioMode::kMemoryProxy && target != std::vector<std::string>{"a", "b", "c"})
    throw std::invalid_argument("ratio_sweep: the memory proxy uses the scaled (a,b,c) input");

  std::vector<RatioRow> rows(T_list.size());
  parallel_for(T_list.size(), [&](std::size_t i) {
    const int T = T_list[i];
    RatioRow row;
    row.T = T;
    if (mode == RatioMode::kUniformExact) {
      const CountTable table = count_alignments(topo, T);
      row.mean_q_blank = to_double(label_mass_fraction(table, topo.label_index(blank)));
    } else {
      const InputSequence x = scaled_ping_input(T);
      ExperimentResult r = train(uniform_memory(T, topo.alphabet()), LossKind::kCtc, std::nullopt,
                                 topo, x, target, config);
      double mean = 0.0;
      const SoftAlignment sa = soft_alignment(topo, r.final_posteriors);
      for (const auto& qrow : sa.q) mean += qrow[topo.label_index(blank)];
      row.mean_q_blank = mean / sa.q.size();
      row.convergence_step = r.convergence_step;
      row.peaky = r.peakiness.is_peaky_behavior;
    }
    rows[i] = std::move(row);
  });
  return rows;
}

/// CSV export, header `T,mean_q_blank,convergence_step`; the step field is
/// empty when the run never crossed the threshold (or no run happened).
inline void write_ratio_csv(const std::vector<RatioRow>& rows, std::ostream& os) {
  os << "T,mean_q_blank,convergence_step\n";
  for (const auto& row : rows) {
    os << row.T << ',' << format_double(row.mean_q_blank) << ',';
    if (row.convergence_step) os << *row.convergence_step;
    os << '\n';
  }
}

}  // namespace peaky
