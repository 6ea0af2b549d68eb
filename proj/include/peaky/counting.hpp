#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "peaky/automaton.hpp"
#include "peaky/bignum.hpp"
#include "peaky/errors.hpp"
#include "peaky/topology.hpp"
#include "peaky/util.hpp"

namespace peaky {

/// Exact alignment counts for one topology and length T.
///   total          = |A_T|
///   per_frame[t][s] = #alignments with label s at frame t (t is 0-based here)
///   per_label[s]    = sum_t per_frame[t][s]
/// Row sums of per_frame equal total; counts grow combinatorially, hence
/// arbitrary precision.
struct CountTable {
  BigInt total;
  std::vector<std::vector<BigInt>> per_frame;
  std::vector<BigInt> per_label;
  std::vector<std::string> labels;
};

namespace detail {

/// Forward prefix counts F[t][q] (t = 1..T), F[t] indexed by automaton state.
inline std::vector<std::vector<BigInt>> forward_counts(const AlignmentAutomaton& fsa, int T) {
  std::vector<std::vector<BigInt>> f(static_cast<std::size_t>(T) + 1,
                                     std::vector<BigInt>(fsa.num_states(), 0));
  for (int q : fsa.start_states()) f[1][q] = 1;
  for (int t = 1; t < T; ++t)
    for (int q = 0; q < fsa.num_states(); ++q) {
      if (f[t][q] == 0) continue;
      for (int to : fsa.state(q).succ) f[t + 1][to] += f[t][q];
    }
  return f;
}

/// Backward suffix counts B[t][q]: alignments of frames t+1..T starting
/// after state q, ending accepted.
inline std::vector<std::vector<BigInt>> backward_counts(const AlignmentAutomaton& fsa, int T) {
  std::vector<std::vector<BigInt>> b(static_cast<std::size_t>(T) + 1,
                                     std::vector<BigInt>(fsa.num_states(), 0));
  for (int q = 0; q < fsa.num_states(); ++q)
    if (fsa.state(q).accepting) b[T][q] = 1;
  for (int t = T - 1; t >= 1; --t)
    for (int q = 0; q < fsa.num_states(); ++q)
      for (int to : fsa.state(q).succ)
        if (b[t + 1][to] != 0) b[t][q] += b[t + 1][to];
  return b;
}

}  // namespace detail

inline CountTable count_alignments(const LabelTopology& topo, int T) {
  if (T < 1) throw std::invalid_argument("count_alignments: T must be >= 1");
  AlignmentAutomaton fsa(topo);
  if (!fsa.feasible(T))
    throw NoAlignmentError("count_alignments: no alignment of length " + std::to_string(T) +
                           " for '" + topo.spec_string() + "'");
  const auto f = detail::forward_counts(fsa, T);
  const auto b = detail::backward_counts(fsa, T);

  CountTable table;
  table.labels = topo.alphabet();
  table.per_frame.assign(T, std::vector<BigInt>(topo.num_labels(), 0));
  table.per_label.assign(topo.num_labels(), 0);
  for (int q = 0; q < fsa.num_states(); ++q)
    if (fsa.state(q).accepting) table.total += f[T][q];
  if (table.total == 0)
    throw NoAlignmentError("count_alignments: no alignment of length " + std::to_string(T));
  for (int t = 1; t <= T; ++t)
    for (int q = 0; q < fsa.num_states(); ++q) {
      if (f[t][q] == 0 || b[t][q] == 0) continue;
      table.per_frame[t - 1][fsa.state(q).label] += f[t][q] * b[t][q];
    }
  for (int s = 0; s < topo.num_labels(); ++s)
    for (int t = 0; t < T; ++t) table.per_label[s] += table.per_frame[t][s];
  return table;
}

/// The label with the strictly largest total count, absent on ties.
inline std::optional<std::string> dominant_label(const LabelTopology& topo, int T) {
  const CountTable table = count_alignments(topo, T);
  int best = 0;
  for (int s = 1; s < topo.num_labels(); ++s)
    if (table.per_label[s] > table.per_label[best]) best = s;
  for (int s = 0; s < topo.num_labels(); ++s)
    if (s != best && table.per_label[s] == table.per_label[best]) return std::nullopt;
  return table.labels[best];
}

/// Number of frames where label strictly out-counts every other label.
inline int dominant_frame_count(const LabelTopology& topo, const std::string& label, int T) {
  const int s = topo.label_index(label);
  if (s < 0) throw std::invalid_argument("dominant_frame_count: unknown label '" + label + "'");
  const CountTable table = count_alignments(topo, T);
  int frames = 0;
  for (int t = 0; t < T; ++t) {
    bool strict = true;
    for (int other = 0; other < topo.num_labels() && strict; ++other)
      if (other != s) strict = table.per_frame[t][s] > table.per_frame[t][other];
    frames += strict ? 1 : 0;
  }
  return frames;
}

/// Max over alignments of the per-alignment count of `label`, by a
/// max-count DP rather than enumeration.
inline int max_label_count(const LabelTopology& topo, const std::string& label, int T) {
  const int s = topo.label_index(label);
  if (s < 0) throw std::invalid_argument("max_label_count: unknown label '" + label + "'");
  AlignmentAutomaton fsa(topo);
  if (!fsa.feasible(T))
    throw NoAlignmentError("max_label_count: no alignment of length " + std::to_string(T));
  constexpr int kUnset = -1;
  std::vector<int> cur(fsa.num_states(), kUnset), next;
  for (int q : fsa.start_states()) cur[q] = fsa.state(q).label == s ? 1 : 0;
  for (int t = 1; t < T; ++t) {
    next.assign(fsa.num_states(), kUnset);
    for (int q = 0; q < fsa.num_states(); ++q) {
      if (cur[q] == kUnset) continue;
      for (int to : fsa.state(q).succ) {
        const int v = cur[q] + (fsa.state(to).label == s ? 1 : 0);
        if (v > next[to]) next[to] = v;
      }
    }
    cur.swap(next);
  }
  int best = kUnset;
  for (int q = 0; q < fsa.num_states(); ++q)
    if (fsa.state(q).accepting && cur[q] > best) best = cur[q];
  if (best == kUnset) throw NoAlignmentError("max_label_count: no alignment of length " + std::to_string(T));
  return best;
}

/// Mass fraction of one label across all alignments: per_label / (T * total),
/// as an exact rational.
inline BigRat label_mass_fraction(const CountTable& table, int label_idx) {
  BigInt denom = table.total * static_cast<int>(table.per_frame.size());
  return BigRat(table.per_label[label_idx], denom);
}

/// Which frame class the conditioning count runs over, for the
/// blank-padded two-symbol input (B^n a^{2n} B^n against "B* a+ B*"):
/// kLabelFrames conditions on how many middle (a-input) frames emit blank,
/// kBlankFrames on how many outer (B-input) frames emit blank.
enum class CountConditioning { kLabelFrames, kBlankFrames };

/// For each conditioning value c in 0..2n, the difference
///   #(t, alignment) pairs emitting blank  -  #pairs emitting the label
/// where t ranges over the frame class *opposite* the conditioning class
/// and alignments are restricted to conditioning count exactly c.
inline std::vector<BigInt> blank_count_delta_table(int n, CountConditioning cond) {
  if (n < 1) throw std::invalid_argument("blank_count_delta_table: n must be >= 1");
  const LabelTopology topo = parse_topology("B* a+ B*");
  const AlignmentAutomaton fsa(topo);
  const int T = 4 * n;
  const int blank = topo.label_index("B");
  const int label = topo.label_index("a");
  const int cmax = 2 * n;

  // Frame classes, 1-based t: middle 2n frames carry the label input.
  auto is_label_frame = [&](int t) { return t > n && t <= 3 * n; };
  auto in_cond_class = [&](int t) {
    return cond == CountConditioning::kLabelFrames ? is_label_frame(t) : !is_label_frame(t);
  };

  // f[t][q][c]: prefixes of length t ending in q whose conditioning count
  // (blank emitted on conditioning-class frames, frame t included) is c.
  auto zeros = [&] {
    return std::vector<std::vector<BigInt>>(fsa.num_states(),
                                            std::vector<BigInt>(cmax + 1, 0));
  };
  std::vector<std::vector<std::vector<BigInt>>> f(T + 1, zeros()), b(T + 1, zeros());

  for (int q : fsa.start_states()) {
    const int c = (in_cond_class(1) && fsa.state(q).label == blank) ? 1 : 0;
    f[1][q][c] = 1;
  }
  for (int t = 1; t < T; ++t)
    for (int q = 0; q < fsa.num_states(); ++q)
      for (int c = 0; c <= cmax; ++c) {
        if (f[t][q][c] == 0) continue;
        for (int to : fsa.state(q).succ) {
          const int dc = (in_cond_class(t + 1) && fsa.state(to).label == blank) ? 1 : 0;
          f[t + 1][to][c + dc] += f[t][q][c];
        }
      }
  for (int q = 0; q < fsa.num_states(); ++q)
    if (fsa.state(q).accepting) b[T][q][0] = 1;
  for (int t = T - 1; t >= 1; --t)
    for (int q = 0; q < fsa.num_states(); ++q)
      for (int to : fsa.state(q).succ) {
        const int dc = (in_cond_class(t + 1) && fsa.state(to).label == blank) ? 1 : 0;
        for (int c = 0; c + dc <= cmax; ++c)
          if (b[t + 1][to][c] != 0) b[t][q][c + dc] += b[t + 1][to][c];
      }

  std::vector<BigInt> delta(cmax + 1, 0);
  for (int t = 1; t <= T; ++t) {
    if (in_cond_class(t)) continue;  // tally runs over the opposite class
    for (int q = 0; q < fsa.num_states(); ++q) {
      const int sign = fsa.state(q).label == blank ? 1 : (fsa.state(q).label == label ? -1 : 0);
      if (sign == 0) continue;
      for (int c1 = 0; c1 <= cmax; ++c1) {
        if (f[t][q][c1] == 0) continue;
        for (int c2 = 0; c1 + c2 <= cmax; ++c2) {
          if (b[t][q][c2] == 0) continue;
          delta[c1 + c2] += sign * f[t][q][c1] * b[t][q][c2];
        }
      }
    }
  }
  return delta;
}

/// CSV export, header `t,label,count`, t 1-based, labels in alphabet order.
inline void write_count_csv(const CountTable& table, std::ostream& os) {
  os << "t,label,count\n";
  for (std::size_t t = 0; t < table.per_frame.size(); ++t)
    for (std::size_t s = 0; s < table.labels.size(); ++s)
      os << (t + 1) << ',' << table.labels[s] << ',' << table.per_frame[t][s] << '\n';
}

}  // namespace peaky
