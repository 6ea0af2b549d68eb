#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "peaky/automaton.hpp"
#include "peaky/topology.hpp"

namespace peaky {

/// An alignment is a length-T sequence of label ids accepted by the topology.
using Alignment = std::vector<std::string>;

inline constexpr int kDefaultEnumerationCap = 14;

/// Brute-force oracle: all accepted length-T label sequences, in
/// lexicographic order, without duplicates. The DFS runs on the
/// deterministic automaton, so each alignment is produced exactly once;
/// min_suffix prunes dead prefixes, keeping the walk proportional to the
/// output size.
inline std::vector<Alignment> enumerate_alignments(const LabelTopology& topo, int T,
                                                   int cap = kDefaultEnumerationCap) {
  if (T < 1) throw std::invalid_argument("enumerate_alignments: T must be >= 1");
  if (T > cap)
    throw std::invalid_argument("enumerate_alignments: T=" + std::to_string(T) +
                                " above enumeration cap " + std::to_string(cap));
  const AlignmentAutomaton fsa(topo);
  const auto& alphabet = topo.alphabet();

  auto by_label = [&](int lhs, int rhs) {
    return alphabet[fsa.state(lhs).label] < alphabet[fsa.state(rhs).label];
  };

  std::vector<Alignment> out;
  std::vector<int> path;
  path.reserve(T);

  auto dfs = [&](auto&& self, int q, int depth) -> void {
    if (fsa.state(q).min_suffix > T - depth) return;
    path.push_back(fsa.state(q).label);
    if (depth == T) {
      if (fsa.state(q).accepting) {
        Alignment a(T);
        for (int t = 0; t < T; ++t) a[t] = alphabet[path[t]];
        out.push_back(std::move(a));
      }
    } else {
      std::vector<int> succ = fsa.state(q).succ;
      std::sort(succ.begin(), succ.end(), by_label);
      for (int to : succ) self(self, to, depth + 1);
    }
    path.pop_back();
  };

  std::vector<int> starts = fsa.start_states();
  std::sort(starts.begin(), starts.end(), by_label);
  for (int q : starts) dfs(dfs, q, 1);
  return out;
}

}  // namespace peaky
