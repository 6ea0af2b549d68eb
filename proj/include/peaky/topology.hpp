#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace peaky {

enum class Quantifier { kOne, kPlus, kStar };

struct TopologyItem {
  std::string label;
  Quantifier quant = Quantifier::kOne;
};

/// A label topology given as an ordered list of quantified labels,
/// e.g. "B* a+ B*". An alignment of length T is any length-T label
/// sequence matching the items left to right.
///
/// Adjacent items must carry distinct labels; this keeps the mapping from
/// an alignment back to the target sequence unique.
class LabelTopology {
 public:
  explicit LabelTopology(std::vector<TopologyItem> items) : items_(std::move(items)) {
    if (items_.empty()) throw std::invalid_argument("topology: no items");
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].label.empty()) throw std::invalid_argument("topology: empty label");
      if (i > 0 && items_[i].label == items_[i - 1].label)
        throw std::invalid_argument("topology: adjacent items share label '" + items_[i].label + "'");
      if (label_index(items_[i].label) < 0) alphabet_.push_back(items_[i].label);
    }
  }

  const std::vector<TopologyItem>& items() const { return items_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  int num_labels() const { return static_cast<int>(alphabet_.size()); }

  int label_index(const std::string& label) const {
    auto it = std::find(alphabet_.begin(), alphabet_.end(), label);
    return it == alphabet_.end() ? -1 : static_cast<int>(it - alphabet_.begin());
  }

  /// Frames consumed by the shortest accepted alignment (each non-star item
  /// needs at least one frame).
  int min_frames() const {
    int n = 0;
    for (const auto& it : items_)
      if (it.quant != Quantifier::kStar) ++n;
    return n;
  }

  std::string spec_string() const {
    std::string out;
    for (const auto& it : items_) {
      if (!out.empty()) out += ' ';
      out += it.label;
      if (it.quant == Quantifier::kPlus) out += '+';
      if (it.quant == Quantifier::kStar) out += '*';
    }
    return out;
  }

 private:
  std::vector<TopologyItem> items_;
  std::vector<std::string> alphabet_;
};

/// Parses whitespace-separated tokens `label`, `label+` or `label*`.
inline LabelTopology parse_topology(std::string_view spec) {
  std::vector<TopologyItem> items;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    while (pos < spec.size() && std::isspace(static_cast<unsigned char>(spec[pos]))) ++pos;
    if (pos >= spec.size()) break;
    std::size_t end = pos;
    while (end < spec.size() && !std::isspace(static_cast<unsigned char>(spec[end]))) ++end;
    std::string token(spec.substr(pos, end - pos));
    pos = end;

    Quantifier quant = Quantifier::kOne;
    if (token.back() == '+') {
      quant = Quantifier::kPlus;
      token.pop_back();
    } else if (token.back() == '*') {
      quant = Quantifier::kStar;
      token.pop_back();
    }
    if (token.empty()) throw std::invalid_argument("topology: malformed token in '" + std::string(spec) + "'");
    if (token.find_first_of("+*") != std::string::npos)
      throw std::invalid_argument("topology: malformed token '" + token + "'");
    items.push_back({std::move(token), quant});
  }
  if (items.empty()) throw std::invalid_argument("topology: empty spec");
  return LabelTopology(std::move(items));
}

/// Blank-separated topology: blank* around and between all target labels.
/// A repeated target label makes the separating blank mandatory, otherwise
/// the two runs would merge.
inline LabelTopology ctc_topology(const std::vector<std::string>& targets, const std::string& blank) {
  if (targets.empty()) throw std::invalid_argument("ctc_topology: empty target sequence");
  std::vector<TopologyItem> items;
  items.push_back({blank, Quantifier::kStar});
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == blank)
      throw std::invalid_argument("ctc_topology: blank '" + blank + "' appears in targets");
    if (i > 0) {
      const bool mandatory = targets[i] == targets[i - 1];
      items.push_back({blank, mandatory ? Quantifier::kPlus : Quantifier::kStar});
    }
    items.push_back({targets[i], Quantifier::kPlus});
  }
  items.push_back({blank, Quantifier::kStar});
  return LabelTopology(std::move(items));
}

/// Silence only at both ends; target labels must all be consumed in order.
inline LabelTopology hmm_topology(const std::vector<std::string>& targets, const std::string& silence) {
  if (targets.empty()) throw std::invalid_argument("hmm_topology: empty target sequence");
  for (std::size_t i = 1; i < targets.size(); ++i)
    if (targets[i] == targets[i - 1])
      throw std::invalid_argument("hmm_topology: adjacent equal target labels '" + targets[i] + "'");
  std::vector<TopologyItem> items;
  items.push_back({silence, Quantifier::kStar});
  for (const auto& t : targets) items.push_back({t, Quantifier::kPlus});
  items.push_back({silence, Quantifier::kStar});
  return LabelTopology(std::move(items));
}

}  // namespace peaky
