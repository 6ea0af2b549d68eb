#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "peaky/analysis.hpp"
#include "peaky/bignum.hpp"
#include "peaky/counting.hpp"
#include "peaky/enumerate.hpp"
#include "peaky/losses.hpp"
#include "peaky/models.hpp"
#include "peaky/oracle.hpp"
#include "peaky/signals.hpp"
#include "peaky/topology.hpp"

// Named verification suites, exposed by the CLI and reused by the
// acceptance tests. Every check compares an implementation path against
// either a closed form or a brute-force oracle.
namespace peaky::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline CheckResult check(const std::string& name, bool pass, const std::string& detail = "") {
  return CheckResult{name, pass, detail};
}

/// Exact evaluation of 2*ceil(T/2 - sqrt(T+1)/2 - 1/2): the smallest integer
/// m with 2m >= T - 1 - sqrt(T+1), found without floating point.
inline int dominant_frame_closed_form(int T) {
  int m = 0;
  while (true) {
    const long long rest = static_cast<long long>(T) - 1 - 2LL * m;
    if (rest <= 0 || rest * rest <= static_cast<long long>(T) + 1) return 2 * m;
    ++m;
  }
}

inline PosteriorTable random_posteriors(std::mt19937_64& rng, int T,
                                        std::vector<std::string> labels) {
  std::uniform_real_distribution<double> logit(-2.0, 2.0);
  PosteriorTable post;
  post.labels = std::move(labels);
  for (int t = 0; t < T; ++t) {
    std::vector<double> logits(post.labels.size());
    for (double& v : logits) v = logit(rng);
    post.probs.push_back(softmax(logits));
  }
  return post;
}

inline void randomize_parameters(ModelSpec& model, std::mt19937_64& rng, double scale = 1.5) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for_each_parameter(model, [&](double& v) { v = dist(rng); });
}

}  // namespace detail

/// Closed-form checks for the single-label blank topology "B* a+ B*":
/// totals, per-frame and per-label counts, the dominant label and its mass
/// fraction, and the dominant-frame-count formula. All comparisons exact.
inline std::vector<CheckResult> verify_closed_form_counts(int Tmax = 200) {
  std::vector<CheckResult> results;
  const LabelTopology topo = parse_topology("B* a+ B*");
  const int a = topo.label_index("a"), blank = topo.label_index("B");

  bool counts_ok = true, frames_ok = true, mass_ok = true, dominant_ok = true;
  std::string counts_detail, frames_detail, mass_detail, dominant_detail;
  for (int T = 1; T <= Tmax; ++T) {
    const CountTable table = count_alignments(topo, T);
    const BigInt bigT = T;
    const BigInt total = bigT * (bigT + 1) / 2;
    const BigInt label_a = bigT * (bigT * bigT + 3 * bigT + 2) / 6;
    const BigInt label_B = bigT * (bigT * bigT - 1) / 3;
    bool ok = table.total == total && table.per_label[a] == label_a && table.per_label[blank] == label_B;
    for (int t = 1; t <= T && ok; ++t) {
      const BigInt bt = t;
      const BigInt frame_a = bt * (bigT - bt + 1);
      const BigInt frame_B = bigT * (bigT + 1) / 2 - bigT * bt + bt * bt - bt;
      ok = table.per_frame[t - 1][a] == frame_a && table.per_frame[t - 1][blank] == frame_B;
    }
    if (!ok && counts_ok) {
      counts_ok = false;
      counts_detail = "first mismatch at T=" + std::to_string(T);
    }

    // Mass fraction of the dominant label: 2(T-1)/(3T), exact rationals.
    if (label_mass_fraction(table, blank) != BigRat(2 * (bigT - 1), 3 * bigT) && mass_ok) {
      mass_ok = false;
      mass_detail = "first mismatch at T=" + std::to_string(T);
    }

    if (T >= 5) {
      const auto dom = dominant_label(topo, T);
      if ((!dom || *dom != "B") && dominant_ok) {
        dominant_ok = false;
        dominant_detail = "expected dominant B at T=" + std::to_string(T);
      }
      if (dominant_frame_count(topo, "B", T) != detail::dominant_frame_closed_form(T) && frames_ok) {
        frames_ok = false;
        frames_detail = "first mismatch at T=" + std::to_string(T);
      }
    }
  }
  results.push_back(detail::check("closed-form counts, T=1.." + std::to_string(Tmax), counts_ok, counts_detail));
  results.push_back(detail::check("dominant label is B for T>=5", dominant_ok, dominant_detail));
  results.push_back(detail::check("dominant mass fraction = 2(T-1)/(3T)", mass_ok, mass_detail));
  results.push_back(detail::check("dominant frame count closed form, T=5.." + std::to_string(Tmax),
                                  frames_ok, frames_detail));
  results.push_back(detail::check("frame-count ratio 50% at T=8",
                                  dominant_frame_count(topo, "B", 8) == 4));
  results.push_back(detail::check("frame-count ratio 75% at T=24",
                                  dominant_frame_count(topo, "B", 24) == 18));
  return results;
}

/// Conditioned count-delta tables for the blank-padded two-symbol input
/// against their piecewise closed forms.
inline std::vector<CheckResult> verify_delta_tables(int n_lo = 4, int n_hi = 8) {
  std::vector<CheckResult> results;
  for (int n = n_lo; n <= n_hi; ++n) {
    const BigInt bn = n;
    {
      const auto delta = blank_count_delta_table(n, CountConditioning::kLabelFrames);
      bool ok = true;
      std::string detail_msg;
      for (int c = 0; c <= 2 * n; ++c) {
        BigInt expected;
        if (c == 0)
          expected = 0;
        else if (c == 2 * n)
          expected = 4 * bn * (bn * bn - 1) / 3;
        else
          expected = 2 * bn * (c + bn);
        if (delta[c] != expected) {
          ok = false;
          detail_msg = "c=" + std::to_string(c) + ": got " + delta[c].str() + ", want " + expected.str();
          break;
        }
      }
      results.push_back(detail::check("label-frame count deltas, n=" + std::to_string(n), ok, detail_msg));
    }
    {
      const auto delta = blank_count_delta_table(n, CountConditioning::kBlankFrames);
      bool ok = true;
      std::string detail_msg;
      BigInt sum = 0;
      for (int c = 0; c <= 2 * n; ++c) {
        BigInt expected;
        if (c == 2 * n)
          expected = 2 * bn * (2 * bn * bn - 3 * bn - 2) / 3;
        else if (c == 2 * n - 1)
          expected = 4 * bn * (bn - 1);
        else if (c >= n)
          expected = 2 * bn * (3 * c - 4 * bn + 1);
        else if (c == n - 1)
          expected = -2 * bn * bn;
        else
          expected = -2 * bn * (c + 1);
        sum += delta[c];
        if (delta[c] != expected) {
          ok = false;
          detail_msg = "c=" + std::to_string(c) + ": got " + delta[c].str() + ", want " + expected.str();
          break;
        }
      }
      results.push_back(detail::check("blank-frame count deltas, n=" + std::to_string(n), ok, detail_msg));
      const BigInt want_sum = 4 * bn * (bn * bn - 3 * bn - 1) / 3;
      results.push_back(detail::check("blank-frame delta sum, n=" + std::to_string(n), sum == want_sum,
                                      sum == want_sum ? "" : "got " + sum.str()));
    }
  }
  return results;
}

/// DP counts, losses, occupancies and Viterbi scores against brute-force
/// enumeration, on several topologies including an ambiguous one.
inline std::vector<CheckResult> verify_oracle(int Tmax = 12, unsigned seed = 20210501) {
  std::vector<CheckResult> results;
  std::mt19937_64 rng(seed);

  const std::vector<std::pair<std::string, LabelTopology>> topologies = {
      {"B* a+ B*", parse_topology("B* a+ B*")},
      {"ctc(abc)", ctc_topology({"a", "b", "c"}, "B")},
      {"hmm(abc)", hmm_topology({"a", "b", "c"}, "B")},
      {"a+ B* a+", parse_topology("a+ B* a+")},
  };
  for (const auto& [name, topo] : topologies) {
    bool ok = true;
    std::string detail_msg;
    for (int T = std::max(1, topo.min_frames()); T <= Tmax && ok; ++T) {
      const CountTable dp = count_alignments(topo, T);
      const CountTable bf = oracle::brute_force_counts(topo, T);
      ok = dp.total == bf.total && dp.per_frame == bf.per_frame && dp.per_label == bf.per_label;
      if (!ok) detail_msg = "mismatch at T=" + std::to_string(T);
    }
    results.push_back(detail::check("counts vs enumeration, " + name, ok, detail_msg));
  }

  // Losses and occupancies on random posteriors.
  for (const auto& [name, topo] : topologies) {
    const int T = std::min(Tmax, 10);
    bool ok = true;
    std::string detail_msg;
    for (int draw = 0; draw < 20 && ok; ++draw) {
      const PosteriorTable post = detail::random_posteriors(rng, T, topo.alphabet());
      const auto score = oracle::posterior_score(topo, post);
      const double bf_log = std::log(oracle::brute_force_total(topo, T, score));
      const double dp_log = full_sum_log_prob(topo, post);
      if (std::abs(bf_log - dp_log) > 1e-10) {
        ok = false;
        detail_msg = "loss mismatch " + format_double(std::abs(bf_log - dp_log));
        break;
      }
      const auto bf_q = oracle::brute_force_occupancy(topo, T, score);
      const SoftAlignment sa = soft_alignment(topo, post);
      for (int t = 0; t < T && ok; ++t)
        for (int s = 0; s < topo.num_labels(); ++s)
          if (std::abs(bf_q[t][s] - sa.q[t][s]) > 1e-10) {
            ok = false;
            detail_msg = "occupancy mismatch at t=" + std::to_string(t);
            break;
          }
      const ViterbiResult vit = viterbi(topo, post);
      const auto stats = oracle::brute_force_viterbi_stats(topo, post, topo.alphabet().front(),
                                                           kScoreTieTolerance);
      if (std::abs(vit.log_score - stats.best_score) > 1e-10) {
        ok = false;
        detail_msg = "viterbi score mismatch";
      }
    }
    results.push_back(detail::check("loss/occupancy/viterbi vs enumeration, " + name, ok, detail_msg));
  }

  // Hybrid loss and its occupancy with a random positive prior against a
  // rescored enumeration.
  {
    const LabelTopology topo = ctc_topology({"a", "b"}, "B");
    const int T = std::min(Tmax, 9);
    std::uniform_real_distribution<double> unit(0.2, 1.0);
    bool ok = true;
    std::string detail_msg;
    for (int draw = 0; draw < 20 && ok; ++draw) {
      const PosteriorTable post = detail::random_posteriors(rng, T, topo.alphabet());
      std::vector<double> prior(post.labels.size());
      double z = 0.0;
      for (double& v : prior) z += v = unit(rng);
      for (double& v : prior) v /= z;
      const auto score = [&](int t, int s) { return post.probs[t][s] / prior[s]; };
      const double bf = -std::log(oracle::brute_force_total(topo, T, score));
      const double got = hybrid_loss(topo, post, prior);
      if (std::abs(bf - got) > 1e-10) {
        ok = false;
        detail_msg = "loss mismatch " + format_double(std::abs(bf - got));
        break;
      }
      const AlignmentAutomaton fsa(topo);
      const auto sum =
          peaky::detail::path_sum(fsa, peaky::detail::ratio_log_scores(topo, post, prior), true);
      const auto bf_q = oracle::brute_force_occupancy(topo, T, score);
      for (int t = 0; t < T && ok; ++t)
        for (int s = 0; s < topo.num_labels(); ++s)
          if (std::abs(bf_q[t][s] - sum.occupancy[t][s]) > 1e-10) {
            ok = false;
            detail_msg = "occupancy mismatch at t=" + std::to_string(t);
          }
    }
    results.push_back(detail::check("hybrid loss/occupancy vs enumeration, ctc(ab)", ok, detail_msg));
  }

  // Generative loss and occupancy against enumeration.
  {
    const LabelTopology topo = parse_topology("B* a+ B*");
    const int n = 3;  // T = 12
    const InputSequence x = single_label_input(n);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    bool ok = true;
    std::string detail_msg;
    for (int draw = 0; draw < 20 && ok; ++draw) {
      const GenerativeModel model{dist(rng), dist(rng)};
      const EmissionTable emis = emissions(model);
      const auto score = oracle::emission_score(topo, emis, x);
      const double bf = -std::log(oracle::brute_force_total(topo, x.T(), score));
      const double got = generative_loss(topo, emis, x);
      if (std::abs(bf - got) > 1e-10) {
        ok = false;
        detail_msg = "loss mismatch";
        break;
      }
      const auto bf_q = oracle::brute_force_occupancy(topo, x.T(), score);
      const SoftAlignment sa = generative_soft_alignment(topo, emis, x);
      for (int t = 0; t < x.T() && ok; ++t)
        for (int s = 0; s < topo.num_labels(); ++s)
          if (std::abs(bf_q[t][s] - sa.q[t][s]) > 1e-10) {
            ok = false;
            detail_msg = "occupancy mismatch at t=" + std::to_string(t);
          }
    }
    results.push_back(detail::check("generative loss/occupancy vs enumeration", ok, detail_msg));
  }
  return results;
}

/// Analytic gradients vs central finite differences (step 1e-5) across
/// random parameter draws, for every model/loss pairing.
inline std::vector<CheckResult> verify_gradcheck(int draws = 100, unsigned seed = 7041) {
  std::vector<CheckResult> results;
  std::mt19937_64 rng(seed);
  const double kTol = 1e-6;

  const LabelTopology topo = parse_topology("B* a+ B*");
  const InputSequence x = single_label_input(2);  // T = 8
  const std::vector<std::string> labels = {"a", "B"};

  struct Pairing {
    std::string name;
    ModelSpec prototype;
    LossKind kind;
    std::optional<PriorMode> mode;
  };
  std::vector<Pairing> pairings;
  pairings.push_back({"bias x ctc", uniform_bias(labels), LossKind::kCtc, std::nullopt});
  pairings.push_back({"bias x hybrid(softmax)", uniform_bias(labels), LossKind::kHybrid, PriorMode{SoftmaxPrior{}}});
  pairings.push_back({"ffnn x ctc", uniform_ffnn(2, labels), LossKind::kCtc, std::nullopt});
  pairings.push_back({"ffnn+bias x ctc", uniform_ffnn(2, labels, true), LossKind::kCtc, std::nullopt});
  pairings.push_back({"ffnn x hybrid(softmax)", uniform_ffnn(2, labels), LossKind::kHybrid, PriorMode{SoftmaxPrior{}}});
  pairings.push_back({"ffnn x hybrid(stop-grad)", uniform_ffnn(2, labels), LossKind::kHybrid, PriorMode{StopGradPrior{}}});
  pairings.push_back({"ffnn x hybrid(learned)", uniform_ffnn(2, labels), LossKind::kHybrid,
                      PriorMode{LearnedPrior{{0.0, 0.0}}}});
  pairings.push_back({"ffnn x hybrid(ema)", uniform_ffnn(2, labels), LossKind::kHybrid,
                      PriorMode{EmaPrior{0.99, {0.5, 0.5}}}});
  pairings.push_back({"memory x ctc", uniform_memory(x.T(), labels), LossKind::kCtc, std::nullopt});
  pairings.push_back({"memory x hybrid(softmax)", uniform_memory(x.T(), labels), LossKind::kHybrid,
                      PriorMode{SoftmaxPrior{}}});
  pairings.push_back({"two_param x ctc", TwoParamModel{}, LossKind::kCtc, std::nullopt});
  pairings.push_back({"two_param x hybrid(softmax)", TwoParamModel{}, LossKind::kHybrid,
                      PriorMode{SoftmaxPrior{}}});
  pairings.push_back({"two_param x hybrid(stop-grad)", TwoParamModel{}, LossKind::kHybrid,
                      PriorMode{StopGradPrior{}}});
  pairings.push_back({"generative x generative", GenerativeModel{}, LossKind::kGenerative, std::nullopt});

  std::uniform_real_distribution<double> prior_logit(-0.7, 0.7);
  for (const auto& pairing : pairings) {
    double worst = 0.0;
    for (int draw = 0; draw < draws; ++draw) {
      ModelSpec model = pairing.prototype;
      detail::randomize_parameters(model, rng);
      std::optional<PriorMode> mode = pairing.mode;
      if (mode) {
        if (auto* learned = std::get_if<LearnedPrior>(&*mode))
          for (double& v : learned->logits) v = prior_logit(rng);
        if (auto* ema = std::get_if<EmaPrior>(&*mode)) {
          std::vector<double> logits(labels.size());
          for (double& v : logits) v = prior_logit(rng);
          ema->prior = softmax(logits);
        }
      }

      // The finite-difference closure mirrors the differentiation
      // semantics: the softmax prior is recomputed from the perturbed
      // model, stop-grad/EMA priors are held at their current value, the
      // learned prior is a function of its own logits only.
      std::vector<double> fixed_prior;
      if (mode && !std::holds_alternative<SoftmaxPrior>(*mode))
        fixed_prior = prior_distribution(*mode, posteriors(model, x));
      auto loss_at = [&](const ModelSpec& m) {
        if (pairing.kind == LossKind::kGenerative)
          return generative_loss(topo, emissions(std::get<GenerativeModel>(m)), x);
        const PosteriorTable post = posteriors(m, x);
        if (pairing.kind == LossKind::kCtc) return ctc_loss(topo, post);
        const std::vector<double> prior =
            std::holds_alternative<SoftmaxPrior>(*mode) ? softmax_prior(post) : fixed_prior;
        return hybrid_loss(topo, post, prior);
      };

      const ModelGradient grad = model_gradient(model, pairing.kind, topo, x, mode);
      const std::vector<double> analytic = flatten_parameters(grad.params);
      const std::vector<double> fd = oracle::central_difference_gradient(model, loss_at);
      worst = std::max(worst, oracle::max_relative_error(analytic, fd));

      if (grad.prior_logits) {
        // Gradient for the learned prior's own logits, model held fixed.
        const auto& learned = std::get<LearnedPrior>(*mode);
        const PosteriorTable post = posteriors(model, x);
        std::vector<double> fd_prior(learned.logits.size());
        const double h = 1e-5;
        for (std::size_t i = 0; i < learned.logits.size(); ++i) {
          auto plus = learned.logits, minus = learned.logits;
          plus[i] += h;
          minus[i] -= h;
          fd_prior[i] =
              (hybrid_loss(topo, post, softmax(plus)) - hybrid_loss(topo, post, softmax(minus))) /
              (2 * h);
        }
        worst = std::max(worst, oracle::max_relative_error(*grad.prior_logits, fd_prior));
      }
    }
    results.push_back(detail::check("gradcheck " + pairing.name + " (" + std::to_string(draws) + " draws)",
                                    worst <= kTol, "max relative error " + format_double(worst, "%.3g")));
  }
  return results;
}

/// Occupancy-ratio identities at the uniform initialization of the
/// two-scalar models on the blank-padded input, against their closed forms.
inline std::vector<CheckResult> verify_generative_ratios(int n = 4) {
  std::vector<CheckResult> results;
  const LabelTopology topo = parse_topology("B* a+ B*");
  const InputSequence x = single_label_input(n);
  const double nn = n;

  // Generative model at the uniform point (all emissions 1/2).
  const SoftAlignment q = generative_soft_alignment(topo, emissions(GenerativeModel{}), x);
  const int blank = topo.label_index("B"), label = topo.label_index("a");
  double qB_on_B = 0.0, qB = 0.0, qa_on_a = 0.0, qa = 0.0;
  for (int t = 0; t < x.T(); ++t) {
    qB += q.q[t][blank];
    qa += q.q[t][label];
    if (x.frame_symbol[t] == "B") qB_on_B += q.q[t][blank];
    if (x.frame_symbol[t] == "a") qa_on_a += q.q[t][label];
  }
  const double want_blank = (19 * nn * nn - 1) / (32 * nn * nn - 2);
  const double want_label = (11 * nn * nn + 6 * nn + 1) / (16 * nn * nn + 12 * nn + 2);
  results.push_back(detail::check(
      "generative blank ratio, n=" + std::to_string(n), std::abs(qB_on_B / qB - want_blank) <= 1e-9,
      format_double(qB_on_B / qB) + " vs " + format_double(want_blank)));
  results.push_back(detail::check(
      "generative label ratio, n=" + std::to_string(n), std::abs(qa_on_a / qa - want_label) <= 1e-9,
      format_double(qa_on_a / qa) + " vs " + format_double(want_label)));

  // Discriminative counterpart: occupancy means under uniform posteriors.
  PosteriorTable post;
  post.labels = topo.alphabet();
  post.probs.assign(x.T(), std::vector<double>(post.labels.size(), 0.5));
  const SoftAlignment sq = soft_alignment(topo, post);
  double mean_B = 0.0, mean_a = 0.0;
  for (int t = 0; t < x.T(); ++t) {
    if (x.frame_symbol[t] == "B") mean_B += sq.q[t][blank];
    if (x.frame_symbol[t] == "a") mean_a += sq.q[t][blank];
  }
  mean_B /= 2.0 * n;
  mean_a /= 2.0 * n;
  const double want_mean_B = (19 * nn * nn - 1) / (6 * nn * (4 * nn + 1));
  const double want_mean_a = (13 * nn * nn - 1) / (6 * nn * (4 * nn + 1));
  results.push_back(detail::check(
      "uniform-posterior blank occupancy on blank frames, n=" + std::to_string(n),
      std::abs(mean_B - want_mean_B) <= 1e-9,
      format_double(mean_B) + " vs " + format_double(want_mean_B)));
  results.push_back(detail::check(
      "uniform-posterior blank occupancy on label frames, n=" + std::to_string(n),
      std::abs(mean_a - want_mean_a) <= 1e-9,
      format_double(mean_a) + " vs " + format_double(want_mean_a)));
  return results;
}

}  // namespace peaky::verify
