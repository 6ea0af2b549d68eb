#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "peaky/losses.hpp"
#include "peaky/models.hpp"
#include "peaky/signals.hpp"
#include "peaky/topology.hpp"
#include "peaky/training.hpp"
#include "peaky/util.hpp"

namespace peaky {

/// Loss families over the two-scalar parameterization.
enum class LandscapeKind { kCtc, kHybridSoftmaxPrior, kHybridStopGradPrior, kGenerative };

inline const char* landscape_kind_name(LandscapeKind kind) {
  switch (kind) {
    case LandscapeKind::kCtc: return "ctc";
    case LandscapeKind::kHybridSoftmaxPrior: return "hybrid_softmax_prior";
    case LandscapeKind::kHybridStopGradPrior: return "hybrid_stop_grad_prior";
    case LandscapeKind::kGenerative: return "generative";
  }
  return "?";
}

/// Square axis grid: theta in {min, min+step, ..., max} on both axes.
struct GridSpec {
  double min = -6.0;
  double max = 6.0;
  double step = 0.1;

  int samples_per_axis() const {
    if (!(step > 0.0) || !(max > min)) throw std::invalid_argument("grid: need max > min, step > 0");
    return static_cast<int>(std::lround((max - min) / step)) + 1;
  }
  double value(int i) const { return min + i * step; }
};

struct GridCell {
  double theta_a = 0.0;   // first scalar: label-frame logit scale
  double theta_B = 0.0;   // second scalar: blank-frame logit scale
  double loss = 0.0;
  double grad_a = 0.0;
  double grad_B = 0.0;
  bool finite = true;
};

struct GridSweep {
  GridSpec grid;
  std::vector<GridCell> cells;  // row-major: theta_B outer, theta_a inner
  int nonfinite_cells = 0;
};

namespace detail {

inline ModelSpec two_scalar_model(LandscapeKind kind, double theta_a, double theta_B) {
  if (kind == LandscapeKind::kGenerative) return GenerativeModel{theta_a, theta_B};
  return TwoParamModel{theta_a, theta_B};
}

inline LossKind loss_kind_of(LandscapeKind kind) {
  switch (kind) {
    case LandscapeKind::kCtc: return LossKind::kCtc;
    case LandscapeKind::kGenerative: return LossKind::kGenerative;
    default: return LossKind::kHybrid;
  }
}

inline std::optional<PriorMode> prior_mode_of(LandscapeKind kind) {
  if (kind == LandscapeKind::kHybridSoftmaxPrior) return PriorMode{SoftmaxPrior{}};
  if (kind == LandscapeKind::kHybridStopGradPrior) return PriorMode{StopGradPrior{}};
  return std::nullopt;
}

struct PointEval {
  double loss;
  double grad_a;
  double grad_B;
};

inline PointEval evaluate_point(LandscapeKind kind, const LabelTopology& topo,
                                const InputSequence& x, double theta_a, double theta_B) {
  const ModelSpec model = two_scalar_model(kind, theta_a, theta_B);
  const std::optional<PriorMode> mode = prior_mode_of(kind);
  const double loss = loss_value(model, loss_kind_of(kind), topo, x, mode);
  const ModelGradient grad = model_gradient(model, loss_kind_of(kind), topo, x, mode);
  const std::vector<double> g = flatten_parameters(grad.params);
  return PointEval{loss, g[0], g[1]};
}

}  // namespace detail

/// Loss and analytic gradient at every grid point. Non-finite cells are
/// recorded and flagged, not fatal.
inline GridSweep sweep(LandscapeKind kind, const LabelTopology& topo, const InputSequence& x,
                       const GridSpec& grid) {
  const int n = grid.samples_per_axis();
  GridSweep out;
  out.grid = grid;
  out.cells.assign(static_cast<std::size_t>(n) * n, GridCell{});
  parallel_for(out.cells.size(), [&](std::size_t idx) {
    const int row = static_cast<int>(idx) / n;  // theta_B index
    const int col = static_cast<int>(idx) % n;  // theta_a index
    GridCell cell;
    cell.theta_a = grid.value(col);
    cell.theta_B = grid.value(row);
    const auto eval = detail::evaluate_point(kind, topo, x, cell.theta_a, cell.theta_B);
    cell.loss = eval.loss;
    cell.grad_a = eval.grad_a;
    cell.grad_B = eval.grad_B;
    cell.finite = std::isfinite(cell.loss) && std::isfinite(cell.grad_a) && std::isfinite(cell.grad_B);
    out.cells[idx] = cell;
  });
  for (const auto& cell : out.cells) out.nonfinite_cells += cell.finite ? 0 : 1;
  return out;
}

enum class TerminalRegion { kPeaky, kOptimal, kOther };

inline const char* terminal_region_name(TerminalRegion r) {
  switch (r) {
    case TerminalRegion::kPeaky: return "peaky";
    case TerminalRegion::kOptimal: return "optimal";
    case TerminalRegion::kOther: return "other";
  }
  return "?";
}

struct Trajectory {
  std::vector<std::pair<double, double>> points;  // (theta_a, theta_B) per step
  TerminalRegion terminal = TerminalRegion::kOther;
};

/// Explicit Euler descent from `start`; the terminal region is classified
/// by the final parameter signs: (theta_a<0, theta_B>0) is the peaky basin,
/// both positive is the optimum direction.
inline Trajectory follow_gradient(LandscapeKind kind, const LabelTopology& topo,
                                  const InputSequence& x, std::pair<double, double> start,
                                  double learning_rate, int steps) {
  Trajectory traj;
  double a = start.first, b = start.second;
  traj.points.emplace_back(a, b);
  for (int i = 0; i < steps; ++i) {
    const auto eval = detail::evaluate_point(kind, topo, x, a, b);
    if (!std::isfinite(eval.grad_a) || !std::isfinite(eval.grad_B)) break;
    a -= learning_rate * eval.grad_a;
    b -= learning_rate * eval.grad_B;
    traj.points.emplace_back(a, b);
  }
  if (a < 0.0 && b > 0.0)
    traj.terminal = TerminalRegion::kPeaky;
  else if (a > 0.0 && b > 0.0)
    traj.terminal = TerminalRegion::kOptimal;
  return traj;
}

/// CSV export, header `theta_a,theta_B,loss,grad_a,grad_B`, 6 significant
/// digits, row-major over the grid.
inline void write_landscape_csv(const GridSweep& sweep, std::ostream& os) {
  os << "theta_a,theta_B,loss,grad_a,grad_B\n";
  for (const auto& c : sweep.cells)
    os << format_double(c.theta_a, "%.6g") << ',' << format_double(c.theta_B, "%.6g") << ','
       << format_double(c.loss, "%.6g") << ',' << format_double(c.grad_a, "%.6g") << ','
       << format_double(c.grad_B, "%.6g") << '\n';
}

/// Loss heatmap (darker = lower) with a subsampled negative-gradient arrow
/// field, as a standalone SVG.
inline void write_landscape_svg(const GridSweep& sweep, std::ostream& os) {
  const int n = sweep.grid.samples_per_axis();
  const double cell_px = std::max(1.0, 600.0 / n);
  const double size = n * cell_px;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : sweep.cells)
    if (c.finite) {
      lo = std::min(lo, c.loss);
      hi = std::max(hi, c.loss);
    }
  if (!(hi > lo)) hi = lo + 1.0;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(size, "%.6g")
     << "\" height=\"" << format_double(size, "%.6g") << "\">\n";
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      const auto& c = sweep.cells[static_cast<std::size_t>(row) * n + col];
      // y axis points up: larger theta_B near the top.
      const double px = col * cell_px;
      const double py = (n - 1 - row) * cell_px;
      int shade = 255;
      if (c.finite) shade = static_cast<int>(std::lround(255.0 * (c.loss - lo) / (hi - lo)));
      os << "<rect x=\"" << format_double(px, "%.6g") << "\" y=\"" << format_double(py, "%.6g")
         << "\" width=\"" << format_double(cell_px, "%.6g") << "\" height=\""
         << format_double(cell_px, "%.6g") << "\" fill=\"rgb(" << shade << ',' << shade << ','
         << shade << ")\"/>\n";
    }

  const int stride = std::max(1, n / 24);
  for (int row = 0; row < n; row += stride)
    for (int col = 0; col < n; col += stride) {
      const auto& c = sweep.cells[static_cast<std::size_t>(row) * n + col];
      if (!c.finite) continue;
      const double norm = std::hypot(c.grad_a, c.grad_B);
      if (norm == 0.0) continue;
      const double scale = 0.8 * stride * cell_px / norm;
      const double x0 = col * cell_px + cell_px / 2;
      const double y0 = (n - 1 - row) * cell_px + cell_px / 2;
      const double x1 = x0 - c.grad_a * scale;       // negative gradient
      const double y1 = y0 + c.grad_B * scale;       // svg y grows downward
      os << "<line x1=\"" << format_double(x0, "%.6g") << "\" y1=\"" << format_double(y0, "%.6g")
         << "\" x2=\"" << format_double(x1, "%.6g") << "\" y2=\"" << format_double(y1, "%.6g")
         << "\" stroke=\"rgb(200,60,40)\" stroke-width=\"1\"/>\n";
      os << "<circle cx=\"" << format_double(x1, "%.6g") << "\" cy=\"" << format_double(y1, "%.6g")
         << "\" r=\"1.5\" fill=\"rgb(200,60,40)\"/>\n";
    }
  os << "</svg>\n";
}

}  // namespace peaky
