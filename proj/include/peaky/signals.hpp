#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "peaky/util.hpp"

namespace peaky {

/// Synthetic one-hot input: frames[t] is a one-hot row, frame_symbol[t]
/// names which symbol is hot.
struct InputSequence {
  std::vector<std::vector<double>> frames;
  std::vector<std::string> frame_symbol;

  int T() const { return static_cast<int>(frames.size()); }
  int dim() const { return frames.empty() ? 0 : static_cast<int>(frames.front().size()); }
};

struct BlockSpec {
  std::string symbol;
  int repeat = 1;
};

inline InputSequence block_input(const std::vector<BlockSpec>& blocks, int dim,
                                 const std::map<std::string, int>& hot_index) {
  if (dim < 1) throw std::invalid_argument("block_input: dim must be >= 1");
  InputSequence x;
  for (const auto& block : blocks) {
    if (block.repeat < 1)
      throw std::invalid_argument("block_input: repeat must be >= 1 for symbol '" + block.symbol + "'");
    auto it = hot_index.find(block.symbol);
    if (it == hot_index.end())
      throw std::invalid_argument("block_input: no hot index for symbol '" + block.symbol + "'");
    if (it->second < 0 || it->second >= dim)
      throw std::invalid_argument("block_input: hot index out of range for '" + block.symbol + "'");
    std::vector<double> row(dim, 0.0);
    row[it->second] = 1.0;
    for (int r = 0; r < block.repeat; ++r) {
      x.frames.push_back(row);
      x.frame_symbol.push_back(block.symbol);
    }
  }
  return x;
}

/// The blank-padded single-label input: B^n a^{2n} B^n, dim 2,
/// x_a = (1,0), x_B = (0,1). T = 4n.
inline InputSequence single_label_input(int n) {
  if (n < 1) throw std::invalid_argument("single_label_input: n must be >= 1");
  return block_input({{"B", n}, {"a", 2 * n}, {"B", n}},
                     2, {{"a", 0}, {"B", 1}});
}

/// The five-segment word input (B a b c B), proportions
/// (0.2, 0.1, 0.3, 0.2, 0.2), rescaled to T frames. Segment lengths are
/// round(T*w) clamped to at least 1; the last segment absorbs the rounding
/// residue.
inline InputSequence scaled_ping_input(int T) {
  if (T < 5) throw std::invalid_argument("scaled_ping_input: T must be >= 5");
  static const double kWeights[4] = {0.2, 0.1, 0.3, 0.2};
  static const char* kSymbols[5] = {"B", "a", "b", "c", "B"};
  std::vector<BlockSpec> blocks;
  int used = 0;
  for (int seg = 0; seg < 4; ++seg) {
    int len = static_cast<int>(std::lround(T * kWeights[seg]));
    len = std::max(len, 1);
    blocks.push_back({kSymbols[seg], len});
    used += len;
  }
  const int last = T - used;
  if (last < 1)
    throw std::invalid_argument("scaled_ping_input: T=" + std::to_string(T) +
                                " too small for 5 nonempty segments");
  blocks.push_back({kSymbols[4], last});
  return block_input(blocks, 4, {{"a", 0}, {"b", 1}, {"c", 2}, {"B", 3}});
}

/// CSV export, header `t,symbol,x_0,...,x_{D-1}`, t 1-based.
inline void write_input_csv(const InputSequence& x, std::ostream& os) {
  os << "t,symbol";
  for (int d = 0; d < x.dim(); ++d) os << ",x_" << d;
  os << '\n';
  for (int t = 0; t < x.T(); ++t) {
    os << (t + 1) << ',' << x.frame_symbol[t];
    for (double v : x.frames[t]) os << ',' << format_double(v);
    os << '\n';
  }
}

}  // namespace peaky
