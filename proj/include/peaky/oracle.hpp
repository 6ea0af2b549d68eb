#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "peaky/counting.hpp"
#include "peaky/enumerate.hpp"
#include "peaky/models.hpp"
#include "peaky/signals.hpp"
#include "peaky/topology.hpp"
#include "peaky/util.hpp"

// Brute-force reference implementations. Everything here works by explicit
// enumeration or finite differences in linear space, deliberately sharing no
// code with the forward-backward / DP paths it is used to check.
namespace peaky::oracle {

/// prod_t score(t, s_t) summed over all enumerated alignments.
inline double brute_force_total(const LabelTopology& topo, int T,
                                const std::function<double(int, int)>& score) {
  long double total = 0.0L;
  for (const Alignment& a : enumerate_alignments(topo, T, T)) {
    long double p = 1.0L;
    for (int t = 0; t < T; ++t) p *= score(t, topo.label_index(a[t]));
    total += p;
  }
  return static_cast<double>(total);
}

/// Occupancies by direct tallying over enumerated alignments.
inline std::vector<std::vector<double>> brute_force_occupancy(
    const LabelTopology& topo, int T, const std::function<double(int, int)>& score) {
  std::vector<std::vector<long double>> mass(T, std::vector<long double>(topo.num_labels(), 0.0L));
  long double total = 0.0L;
  for (const Alignment& a : enumerate_alignments(topo, T, T)) {
    long double p = 1.0L;
    for (int t = 0; t < T; ++t) p *= score(t, topo.label_index(a[t]));
    total += p;
    for (int t = 0; t < T; ++t) mass[t][topo.label_index(a[t])] += p;
  }
  std::vector<std::vector<double>> q(T, std::vector<double>(topo.num_labels(), 0.0));
  if (total > 0.0L)
    for (int t = 0; t < T; ++t)
      for (int s = 0; s < topo.num_labels(); ++s)
        q[t][s] = static_cast<double>(mass[t][s] / total);
  return q;
}

inline std::function<double(int, int)> posterior_score(const LabelTopology& topo,
                                                       const PosteriorTable& post) {
  std::vector<int> cols(topo.num_labels());
  for (int s = 0; s < topo.num_labels(); ++s) cols[s] = post.label_index(topo.alphabet()[s]);
  return [&post, cols](int t, int s) { return post.probs[t][cols[s]]; };
}

inline std::function<double(int, int)> emission_score(const LabelTopology& topo,
                                                      const EmissionTable& emis,
                                                      const InputSequence& x) {
  std::vector<int> rows(topo.num_labels());
  for (int s = 0; s < topo.num_labels(); ++s) {
    rows[s] = -1;
    for (std::size_t i = 0; i < emis.labels.size(); ++i)
      if (emis.labels[i] == topo.alphabet()[s]) rows[s] = static_cast<int>(i);
  }
  return [&emis, &x, rows](int t, int s) {
    return emis.probs[rows[s]][emis.symbol_index(x.frame_symbol[t])];
  };
}

/// Per-frame counts tallied directly from the enumeration.
inline CountTable brute_force_counts(const LabelTopology& topo, int T) {
  CountTable table;
  table.labels = topo.alphabet();
  table.per_frame.assign(T, std::vector<BigInt>(topo.num_labels(), 0));
  table.per_label.assign(topo.num_labels(), 0);
  for (const Alignment& a : enumerate_alignments(topo, T, T)) {
    table.total += 1;
    for (int t = 0; t < T; ++t) {
      const int s = topo.label_index(a[t]);
      table.per_frame[t][s] += 1;
      table.per_label[s] += 1;
    }
  }
  return table;
}

/// Max product score and, among score-maximal alignments (ties within tol),
/// the min and max counts of the dominant label.
struct BruteViterbiStats {
  double best_score = -1.0;
  int min_dominant_count = 0;
  int max_dominant_count_among_best = 0;
};

inline BruteViterbiStats brute_force_viterbi_stats(const LabelTopology& topo,
                                                   const PosteriorTable& post,
                                                   const std::string& dominant,
                                                   double tie_tolerance) {
  const auto score = posterior_score(topo, post);
  const int T = post.T();
  struct Entry { double logp; int dom_count; };
  std::vector<Entry> entries;
  double best = -std::numeric_limits<double>::infinity();
  for (const Alignment& a : enumerate_alignments(topo, T, T)) {
    double logp = 0.0;
    int dom = 0;
    for (int t = 0; t < T; ++t) {
      logp += std::log(score(t, topo.label_index(a[t])));
      dom += a[t] == dominant ? 1 : 0;
    }
    entries.push_back({logp, dom});
    best = std::max(best, logp);
  }
  BruteViterbiStats stats;
  stats.best_score = best;
  stats.min_dominant_count = T + 1;
  for (const auto& e : entries) {
    if (e.logp < best - tie_tolerance) continue;
    stats.min_dominant_count = std::min(stats.min_dominant_count, e.dom_count);
    stats.max_dominant_count_among_best = std::max(stats.max_dominant_count_among_best, e.dom_count);
  }
  return stats;
}

/// Central-difference gradient of an arbitrary scalar function of the model
/// parameters, one coordinate at a time.
inline std::vector<double> central_difference_gradient(
    const ModelSpec& model, const std::function<double(const ModelSpec&)>& f, double step = 1e-5) {
  const std::vector<double> base = flatten_parameters(model);
  std::vector<double> grad(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    ModelSpec plus = model, minus = model;
    std::size_t k = 0;
    for_each_parameter(plus, [&](double& v) { if (k++ == i) v += step; });
    k = 0;
    for_each_parameter(minus, [&](double& v) { if (k++ == i) v -= step; });
    grad[i] = (f(plus) - f(minus)) / (2.0 * step);
  }
  return grad;
}

/// Worst per-coordinate relative error. The denominator floor keeps
/// finite-difference roundoff (~1e-10 absolute) from dominating where the
/// true gradient is zero; real defects show up at the gradient's own scale.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-2});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace peaky::oracle
