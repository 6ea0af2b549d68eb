#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <vector>

#include "peaky/topology.hpp"

namespace peaky {

/// Frame-synchronous automaton over a topology's alignments.
///
/// Construction is in two steps. First an item automaton: one state per
/// item, star items skippable, epsilon skips resolved into direct
/// transitions (self-loop unless the item is quantified exactly-one).
/// That automaton can be ambiguous for topologies like "a+ B* a+", where
/// one label sequence has several item paths and a counting DP would
/// overcount. A subset construction on top makes the automaton
/// deterministic over label sequences, so every accepted alignment has
/// exactly one state path. For blank-separated and silence topologies the
/// subsets stay singletons.
class AlignmentAutomaton {
 public:
  struct State {
    int label = -1;             // alphabet index emitted while in this state
    std::uint64_t items = 0;    // item subset, bit i = item i
    int min_item = 0;           // smallest member item; used for tie-breaking
    bool accepting = false;
    std::vector<int> succ;      // successors, ascending state id
    std::vector<int> pred;      // predecessors, ascending state id
    int min_suffix = 0;         // fewest frames from here to acceptance
  };

  explicit AlignmentAutomaton(const LabelTopology& topo) : topo_(&topo) {
    const auto& items = topo.items();
    const int m = static_cast<int>(items.size());
    if (m > 63) throw std::invalid_argument("automaton: too many topology items");
    num_labels_ = topo.num_labels();

    auto star = [&](int i) { return items[i].quant == Quantifier::kStar; };
    auto label_of = [&](int i) { return topo.label_index(items[i].label); };

    // Item-level successor masks on a given read label.
    auto item_succ_mask = [&](int i, int label) {
      std::uint64_t mask = 0;
      if (label_of(i) == label && items[i].quant != Quantifier::kOne) mask |= 1ull << i;
      for (int j = i + 1; j < m; ++j) {
        if (label_of(j) == label) mask |= 1ull << j;
        if (!star(j)) break;  // items beyond a mandatory one are unreachable by a skip
      }
      return mask;
    };

    std::map<std::uint64_t, int> id_of;
    std::deque<int> queue;
    auto intern = [&](std::uint64_t mask, int label) {
      auto it = id_of.find(mask);
      if (it != id_of.end()) return it->second;
      State s;
      s.label = label;
      s.items = mask;
      while (!((mask >> s.min_item) & 1)) ++s.min_item;
      for (int i = 0; i < m && !s.accepting; ++i) {
        if (!((mask >> i) & 1)) continue;
        bool tail_optional = true;
        for (int j = i + 1; j < m; ++j) tail_optional = tail_optional && star(j);
        s.accepting = tail_optional;
      }
      const int id = static_cast<int>(states_.size());
      states_.push_back(std::move(s));
      id_of.emplace(mask, id);
      queue.push_back(id);
      return id;
    };

    // Start states: for each label, the items reachable before any
    // mandatory item has consumed a frame.
    for (int label = 0; label < num_labels_; ++label) {
      std::uint64_t mask = 0;
      for (int i = 0; i < m; ++i) {
        if (label_of(i) == label) mask |= 1ull << i;
        if (!star(i)) break;
      }
      if (mask) start_.push_back(intern(mask, label));
    }

    while (!queue.empty()) {
      const int id = queue.front();
      queue.pop_front();
      const std::uint64_t members = states_[id].items;
      for (int label = 0; label < num_labels_; ++label) {
        std::uint64_t mask = 0;
        for (int i = 0; i < m; ++i)
          if ((members >> i) & 1) mask |= item_succ_mask(i, label);
        if (!mask) continue;
        const int to = intern(mask, label);  // may reallocate states_
        states_[id].succ.push_back(to);
      }
    }
    for (std::size_t q = 0; q < states_.size(); ++q)
      for (int to : states_[q].succ) states_[to].pred.push_back(static_cast<int>(q));

    // min_suffix by BFS from the accepting set over reversed edges.
    constexpr int kUnreached = 1 << 29;
    for (auto& s : states_) s.min_suffix = s.accepting ? 0 : kUnreached;
    std::deque<int> bfs;
    for (std::size_t q = 0; q < states_.size(); ++q)
      if (states_[q].accepting) bfs.push_back(static_cast<int>(q));
    while (!bfs.empty()) {
      const int q = bfs.front();
      bfs.pop_front();
      for (int p : states_[q].pred) {
        if (states_[p].min_suffix > states_[q].min_suffix + 1) {
          states_[p].min_suffix = states_[q].min_suffix + 1;
          bfs.push_back(p);
        }
      }
    }

    min_frames_ = topo.min_frames();
    for (const auto& it : items)
      elastic_ = elastic_ || it.quant != Quantifier::kOne;
  }

  const LabelTopology& topology() const { return *topo_; }
  int num_states() const { return static_cast<int>(states_.size()); }
  const State& state(int q) const { return states_[q]; }
  const std::vector<int>& start_states() const { return start_; }
  int num_labels() const { return num_labels_; }
  int min_frames() const { return min_frames_; }

  /// Whether any alignment of exactly T frames exists. Only all-exactly-one
  /// topologies pin the length; any plus/star item absorbs extra frames.
  bool feasible(int T) const {
    if (T < 1 || T < min_frames_) return false;
    return T == min_frames_ || elastic_;
  }

 private:
  const LabelTopology* topo_;
  std::vector<State> states_;
  std::vector<int> start_;
  int num_labels_ = 0;
  int min_frames_ = 0;
  bool elastic_ = false;
};

}  // namespace peaky
