#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "peaky/landscape.hpp"
#include "test_helpers.hpp"

using namespace peaky;

namespace {

const LabelTopology kSingle = parse_topology("B* a+ B*");
const InputSequence kInputN4 = single_label_input(4);

const GridCell& cell_at(const GridSweep& s, int col, int row) {
  return s.cells[static_cast<std::size_t>(row) * s.grid.samples_per_axis() + col];
}

}  // namespace

TEST_CASE("sweep covers the grid row-major with finite values") {
  const GridSpec grid{-1.0, 1.0, 0.5};
  const GridSweep s = sweep(LandscapeKind::kCtc, kSingle, kInputN4, grid);
  REQUIRE(grid.samples_per_axis() == 5);
  REQUIRE(s.cells.size() == 25);
  CHECK(s.nonfinite_cells == 0);
  CHECK(cell_at(s, 0, 0).theta_a == -1.0);
  CHECK(cell_at(s, 0, 0).theta_B == -1.0);
  CHECK(cell_at(s, 4, 2).theta_a == 1.0);
  CHECK(cell_at(s, 4, 2).theta_B == 0.0);
}

TEST_CASE("recorded gradients are consistent with recorded losses") {
  // Central differences of the recorded loss across neighboring cells, on a
  // fine grid where the h^2 truncation sits below the tolerance. The
  // stop-grad map is excluded here: its recorded gradient is by definition
  // not the derivative of the recorded loss (the prior term is dropped).
  const GridSpec grid{-0.1, 0.1, 0.002};
  const int n = grid.samples_per_axis();
  for (const auto kind : {LandscapeKind::kCtc, LandscapeKind::kHybridSoftmaxPrior,
                          LandscapeKind::kGenerative}) {
    const GridSweep s = sweep(kind, kSingle, kInputN4, grid);
    double worst = 0.0;
    for (int row = 1; row + 1 < n; ++row)
      for (int col = 1; col + 1 < n; ++col) {
        const auto& c = cell_at(s, col, row);
        const double fd_a =
            (cell_at(s, col + 1, row).loss - cell_at(s, col - 1, row).loss) / (2 * grid.step);
        const double fd_B =
            (cell_at(s, col, row + 1).loss - cell_at(s, col, row - 1).loss) / (2 * grid.step);
        worst = std::max(worst, std::abs(fd_a - c.grad_a) / std::max({std::abs(fd_a), std::abs(c.grad_a), 1.0}));
        worst = std::max(worst, std::abs(fd_B - c.grad_B) / std::max({std::abs(fd_B), std::abs(c.grad_B), 1.0}));
      }
    INFO(landscape_kind_name(kind));
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("stop-grad map gradients differentiate the frozen-prior loss") {
  // The recorded stop-grad gradient must match finite differences of the
  // ratio loss with the prior pinned to each cell's own estimate.
  const GridSpec grid{-0.4, 0.4, 0.1};
  const GridSweep s = sweep(LandscapeKind::kHybridStopGradPrior, kSingle, kInputN4, grid);
  const double h = 1e-5;
  double worst = 0.0;
  for (const auto& c : s.cells) {
    const std::vector<double> prior =
        softmax_prior(posteriors(TwoParamModel{c.theta_a, c.theta_B}, kInputN4));
    auto frozen_loss = [&](double ta, double tb) {
      return hybrid_loss(kSingle, posteriors(TwoParamModel{ta, tb}, kInputN4), prior);
    };
    const double fd_a = (frozen_loss(c.theta_a + h, c.theta_B) -
                         frozen_loss(c.theta_a - h, c.theta_B)) / (2 * h);
    const double fd_B = (frozen_loss(c.theta_a, c.theta_B + h) -
                         frozen_loss(c.theta_a, c.theta_B - h)) / (2 * h);
    worst = std::max(worst, std::abs(fd_a - c.grad_a) / std::max({std::abs(fd_a), std::abs(c.grad_a), 1.0}));
    worst = std::max(worst, std::abs(fd_B - c.grad_B) / std::max({std::abs(fd_B), std::abs(c.grad_B), 1.0}));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("origin gradients point where the basin structure says") {
  auto origin = [&](LandscapeKind kind) {
    const GridSpec grid{-0.5, 0.5, 0.5};
    const GridSweep s = sweep(kind, kSingle, kInputN4, grid);
    return cell_at(s, 1, 1);  // (0, 0)
  };

  const GridCell ctc = origin(LandscapeKind::kCtc);
  CHECK(ctc.grad_a > 0.0);  // descent decreases theta_a
  CHECK(ctc.grad_B < 0.0);  // descent increases theta_B

  const GridCell hybrid = origin(LandscapeKind::kHybridSoftmaxPrior);
  CHECK(hybrid.grad_a < 0.0);  // descent increases both
  CHECK(hybrid.grad_B < 0.0);

  const GridCell generative = origin(LandscapeKind::kGenerative);
  CHECK(generative.grad_a < 0.0);
  CHECK(generative.grad_B < 0.0);
}

TEST_CASE("half-line gradients keep descent inside the trapped quadrant") {
  const GridSweep s = sweep(LandscapeKind::kCtc, kSingle, kInputN4, GridSpec{-6.0, 6.0, 0.1});
  int on_a_axis = 0, on_B_axis = 0;
  for (const auto& c : s.cells) {
    if (std::abs(c.theta_a) < 1e-9 && c.theta_B > 1e-9) {
      ++on_a_axis;
      CHECK(c.grad_a > 0.0);
    }
    if (std::abs(c.theta_B) < 1e-9 && c.theta_a < -1e-9) {
      ++on_B_axis;
      CHECK(c.grad_B < 0.0);
    }
  }
  CHECK(on_a_axis == 60);
  CHECK(on_B_axis == 60);
}

TEST_CASE("origin trajectories per loss") {
  auto terminal = [&](LandscapeKind kind) {
    return follow_gradient(kind, kSingle, kInputN4, {0.0, 0.0}, 0.05, 4000).terminal;
  };
  CHECK(terminal(LandscapeKind::kCtc) == TerminalRegion::kPeaky);
  CHECK(terminal(LandscapeKind::kHybridSoftmaxPrior) == TerminalRegion::kOptimal);
  CHECK(terminal(LandscapeKind::kHybridStopGradPrior) == TerminalRegion::kOptimal);

  const Trajectory gen = follow_gradient(LandscapeKind::kGenerative, kSingle, kInputN4,
                                         {0.0, 0.0}, 0.05, 4000);
  CHECK(gen.terminal == TerminalRegion::kOptimal);
  CHECK(gen.points.back().first > gen.points.front().first);
  CHECK(gen.points.back().second > gen.points.front().second);
}

TEST_CASE("landscape csv uses six significant digits") {
  const GridSweep s = sweep(LandscapeKind::kCtc, kSingle, kInputN4, GridSpec{0.0, 0.1, 0.1});
  std::ostringstream os;
  write_landscape_csv(s, os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "theta_a,theta_B,loss,grad_a,grad_B");
  int rows = 0;
  std::string line;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
  }
  CHECK(rows == 4);

  // Byte-identical on re-export.
  std::ostringstream again;
  write_landscape_csv(s, again);
  CHECK(os.str() == again.str());
}

TEST_CASE("svg rendering emits a heatmap and arrows") {
  const GridSweep s = sweep(LandscapeKind::kCtc, kSingle, kInputN4, GridSpec{-1.0, 1.0, 0.25});
  std::ostringstream os;
  write_landscape_svg(s, os);
  const std::string svg = os.str();
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<rect") != std::string::npos);
  CHECK(svg.find("<line") != std::string::npos);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS((GridSpec{1.0, -1.0, 0.1}).samples_per_axis(), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{-1.0, 1.0, 0.0}).samples_per_axis(), std::invalid_argument);
}
