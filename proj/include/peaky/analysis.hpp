#pragma once

#include <algorithm>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "peaky/automaton.hpp"
#include "peaky/counting.hpp"
#include "peaky/enumerate.hpp"
#include "peaky/errors.hpp"
#include "peaky/losses.hpp"
#include "peaky/models.hpp"
#include "peaky/topology.hpp"
#include "peaky/util.hpp"

namespace peaky {

/// Log scores within this of the maximum count as tied when deciding what
/// "all best-scoring alignments" means.
inline constexpr double kScoreTieTolerance = 1e-12;

struct ViterbiResult {
  Alignment alignment;
  double log_score = kNegInf;
};

namespace detail {

/// Best completion score from each state after each frame:
/// best_suffix[t][q] = max over suffixes t+1..T starting from q.
inline std::vector<std::vector<double>> viterbi_suffix_scores(
    const AlignmentAutomaton& fsa, const std::vector<std::vector<double>>& log_scores) {
  const int T = static_cast<int>(log_scores.size());
  const int Q = fsa.num_states();
  std::vector<std::vector<double>> w(T + 1, std::vector<double>(Q, kNegInf));
  for (int q = 0; q < Q; ++q)
    if (fsa.state(q).accepting) w[T][q] = 0.0;
  for (int t = T - 1; t >= 1; --t)
    for (int q = 0; q < Q; ++q)
      for (int to : fsa.state(q).succ) {
        if (w[t + 1][to] == kNegInf) continue;
        w[t][q] = std::max(w[t][q], w[t + 1][to] + log_scores[t][fsa.state(to).label]);
      }
  return w;
}

}  // namespace detail

/// Max-product alignment. Ties are broken by forward reconstruction:
/// prefer staying in the current item, then the earlier item index.
inline ViterbiResult viterbi(const LabelTopology& topo, const PosteriorTable& post) {
  const AlignmentAutomaton fsa(topo);
  const auto scores = detail::posterior_log_scores(topo, post);
  const int T = post.T();
  if (!fsa.feasible(T))
    throw NoAlignmentError("viterbi: no alignment of length " + std::to_string(T));
  const auto w = detail::viterbi_suffix_scores(fsa, scores);

  // Candidates are filtered on structural feasibility so that an all-zero
  // probability table still yields a valid alignment (with score -inf).
  auto pick = [&](const std::vector<int>& candidates, auto&& value, int stay_state,
                  int frames_left) {
    double best = kNegInf;
    for (int q : candidates)
      if (fsa.state(q).min_suffix <= frames_left) best = std::max(best, static_cast<double>(value(q)));
    int chosen = -1;
    for (int q : candidates) {
      if (fsa.state(q).min_suffix > frames_left) continue;
      if (best != kNegInf && value(q) < best - kScoreTieTolerance) continue;
      if (chosen < 0) { chosen = q; continue; }
      const bool q_stays = q == stay_state, c_stays = chosen == stay_state;
      if (q_stays != c_stays) {
        if (q_stays) chosen = q;
        continue;
      }
      if (fsa.state(q).min_item < fsa.state(chosen).min_item) chosen = q;
    }
    return std::pair<int, double>(chosen, best);
  };

  auto [state, total] = pick(fsa.start_states(),
                             [&](int q) { return scores[0][fsa.state(q).label] + w[1][q]; }, -1,
                             T - 1);

  ViterbiResult result;
  result.log_score = total;
  std::vector<int> path;
  path.reserve(T);
  path.push_back(state);
  for (int t = 1; t < T; ++t) {
    const int q = path.back();
    auto [next, unused] = pick(fsa.state(q).succ,
                               [&](int to) { return scores[t][fsa.state(to).label] + w[t + 1][to]; },
                               q, T - t - 1);
    path.push_back(next);
  }
  result.alignment.resize(T);
  for (int t = 0; t < T; ++t) result.alignment[t] = topo.alphabet()[fsa.state(path[t]).label];
  return result;
}

/// Whether the alignment attains the maximum possible count of `dominant`
/// over all alignments of the same length. (The all-comers strict
/// inequality is unsatisfiable whenever several alignments reach the
/// maximum, so "attains the maximum" is the workable reading.)
inline bool is_peaky_alignment(const LabelTopology& topo, const Alignment& alignment,
                               const std::string& dominant) {
  const int have = static_cast<int>(std::count(alignment.begin(), alignment.end(), dominant));
  return have == max_label_count(topo, dominant, static_cast<int>(alignment.size()));
}

struct PeakinessReport {
  std::optional<std::string> dominant;
  double viterbi_score = kNegInf;
  Alignment viterbi_alignment;
  int min_dominant_count_among_viterbi = 0;
  int max_dominant_count = 0;
  bool is_peaky_behavior = false;
};

/// Decides "every best-scoring alignment is peaky" exactly, without
/// enumerating ties: a lexicographic DP maximizes the log score and, among
/// score ties (within kScoreTieTolerance), minimizes the dominant-label
/// count. The model shows peaky behavior iff even that minimum equals the
/// maximum attainable dominant count.
inline PeakinessReport peakiness_report(const LabelTopology& topo, const PosteriorTable& post) {
  PeakinessReport report;
  const int T = post.T();
  report.dominant = dominant_label(topo, T);
  const ViterbiResult vit = viterbi(topo, post);
  report.viterbi_score = vit.log_score;
  report.viterbi_alignment = vit.alignment;
  if (!report.dominant) return report;

  const int dom = topo.label_index(*report.dominant);
  report.max_dominant_count = max_label_count(topo, *report.dominant, T);

  const AlignmentAutomaton fsa(topo);
  const auto scores = detail::posterior_log_scores(topo, post);
  const int Q = fsa.num_states();
  std::vector<double> score(Q, kNegInf), next_score;
  std::vector<int> count(Q, 0), next_count;
  for (int q : fsa.start_states()) {
    score[q] = scores[0][fsa.state(q).label];
    count[q] = fsa.state(q).label == dom ? 1 : 0;
  }
  for (int t = 1; t < T; ++t) {
    next_score.assign(Q, kNegInf);
    next_count.assign(Q, 0);
    for (int q = 0; q < Q; ++q) {
      if (score[q] == kNegInf) continue;
      for (int to : fsa.state(q).succ) {
        const double v = score[q] + scores[t][fsa.state(to).label];
        const int c = count[q] + (fsa.state(to).label == dom ? 1 : 0);
        if (v > next_score[to] + kScoreTieTolerance) {
          next_score[to] = v;
          next_count[to] = c;
        } else if (v >= next_score[to] - kScoreTieTolerance) {
          next_score[to] = std::max(next_score[to], v);
          next_count[to] = std::min(next_count[to], c);
        }
      }
    }
    score.swap(next_score);
    count.swap(next_count);
  }
  double best = kNegInf;
  for (int q = 0; q < Q; ++q)
    if (fsa.state(q).accepting) best = std::max(best, score[q]);
  int min_count = report.max_dominant_count;
  for (int q = 0; q < Q; ++q)
    if (fsa.state(q).accepting && score[q] >= best - kScoreTieTolerance)
      min_count = std::min(min_count, count[q]);
  report.min_dominant_count_among_viterbi = min_count;
  report.is_peaky_behavior =
      best != kNegInf && min_count == report.max_dominant_count;
  return report;
}

/// Per-frame argmax (ties to the lowest label index), collapse adjacent
/// repeats, drop the blank label.
inline std::vector<std::string> greedy_decode(const PosteriorTable& post, const std::string& blank) {
  std::vector<std::string> out;
  std::string last;
  for (const auto& row : post.probs) {
    std::size_t arg = 0;
    for (std::size_t s = 1; s < row.size(); ++s)
      if (row[s] > row[arg]) arg = s;
    const std::string& label = post.labels[arg];
    if (label != last) {
      if (label != blank) out.push_back(label);
      last = label;
    }
  }
  return out;
}

/// 0 iff decoded equals target exactly, else 1.
inline int sequence_error(const std::vector<std::string>& decoded,
                          const std::vector<std::string>& target) {
  return decoded == target ? 0 : 1;
}

/// Fraction of frames where the two alignments disagree.
inline double frame_error(const Alignment& hyp, const Alignment& ref) {
  if (hyp.size() != ref.size())
    throw std::invalid_argument("frame_error: alignments have different lengths");
  if (hyp.empty()) return 0.0;
  int wrong = 0;
  for (std::size_t t = 0; t < hyp.size(); ++t) wrong += hyp[t] != ref[t] ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(hyp.size());
}

inline void write_peakiness_report(const PeakinessReport& report, std::ostream& os) {
  os << "dominant " << (report.dominant ? *report.dominant : std::string("none")) << '\n';
  os << "viterbi_score " << format_double(report.viterbi_score) << '\n';
  os << "viterbi_alignment";
  for (const auto& l : report.viterbi_alignment) os << ' ' << l;
  os << '\n';
  os << "min_dominant_count_among_viterbi " << report.min_dominant_count_among_viterbi << '\n';
  os << "max_dominant_count " << report.max_dominant_count << '\n';
  os << "is_peaky_behavior " << (report.is_peaky_behavior ? 1 : 0) << '\n';
}

/// CSV export, header `t,label`, t 1-based.
inline void write_alignment_csv(const Alignment& alignment, std::ostream& os) {
  os << "t,label\n";
  for (std::size_t t = 0; t < alignment.size(); ++t) os << (t + 1) << ',' << alignment[t] << '\n';
}

}  // namespace peaky
