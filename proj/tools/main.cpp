// Command-line driver: exact alignment counting, verification suites,
// config-driven training runs, loss-landscape sweeps and the frames-per-label
// ratio sweep.
//
// Exit codes: 0 success, 1 verification/experiment failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peaky/peaky.hpp"

namespace {

using namespace peaky;

int cmd_count(const std::string& topology_spec, int T, const std::string& csv_path) {
  const LabelTopology topo = parse_topology(topology_spec);
  const CountTable table = count_alignments(topo, T);
  std::cout << "topology: " << topo.spec_string() << "\n";
  std::cout << "T: " << T << "\n";
  std::cout << "total alignments: " << table.total << "\n";
  for (int s = 0; s < topo.num_labels(); ++s)
    std::cout << "count(" << table.labels[s] << "): " << table.per_label[s] << "\n";
  const auto dominant = dominant_label(topo, T);
  std::cout << "dominant label: " << (dominant ? *dominant : std::string("none")) << "\n";
  if (dominant) {
    const int frames = dominant_frame_count(topo, *dominant, T);
    std::cout << "dominant frame count: " << frames << " of " << T << "\n";
    const BigRat fraction = label_mass_fraction(table, topo.label_index(*dominant));
    std::cout << "dominant mass fraction: " << fraction << " = "
              << format_double(to_double(fraction), "%.6g") << "\n";
  }
  if (!csv_path.empty()) {
    std::ofstream os(csv_path);
    if (!os) throw std::invalid_argument("cannot write '" + csv_path + "'");
    write_count_csv(table, os);
    std::cout << "wrote " << csv_path << "\n";
  }
  return 0;
}

int print_results(const std::vector<verify::CheckResult>& results) {
  int failures = 0;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name;
    if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
    std::cout << "\n";
    failures += r.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}

int cmd_verify(const std::string& suite, int n, int Tmax) {
  if (suite == "lemma") return print_results(verify::verify_closed_form_counts(Tmax > 0 ? Tmax : 200));
  if (suite == "theorem2") {
    if (n > 0) return print_results(verify::verify_delta_tables(n, n));
    return print_results(verify::verify_delta_tables());
  }
  if (suite == "oracle") return print_results(verify::verify_oracle(Tmax > 0 ? Tmax : 12));
  if (suite == "gradcheck") return print_results(verify::verify_gradcheck(n > 0 ? n : 100));
  if (suite == "generative-ratios")
    return print_results(verify::verify_generative_ratios(n > 0 ? n : 4));
  throw CLI::ValidationError("--suite",
                             "unknown suite '" + suite +
                                 "' (expected lemma, theorem2, oracle, gradcheck, generative-ratios)");
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  const auto runs = run_experiment_file(config_path, out_dir);
  int failures = 0;
  for (const auto& run : runs) {
    const auto& r = run.result;
    std::cout << run.config.name << ": steps=" << r.loss_curve.size()
              << " loss=" << format_double(r.loss_curve.empty() ? 0.0 : r.loss_curve.back(), "%.6g")
              << " termination=" << termination_name(r.termination)
              << " sequence_error=" << r.sequence_error
              << " peaky=" << (r.peakiness.is_peaky_behavior ? 1 : 0) << "\n";
    if (r.termination == Termination::kDiverged) {
      std::cout << run.config.name << ": training diverged\n";
      ++failures;
    }
  }
  std::cout << "artifacts in " << out_dir << "\n";
  return failures == 0 ? 0 : 1;
}

GridSpec parse_grid(const std::string& text) {
  GridSpec grid;
  char c1 = 0, c2 = 0;
  std::istringstream is(text);
  if (!(is >> grid.min >> c1 >> grid.max >> c2 >> grid.step) || c1 != ':' || c2 != ':')
    throw CLI::ValidationError("--grid", "expected MIN:MAX:STEP, got '" + text + "'");
  grid.samples_per_axis();  // validates ranges
  return grid;
}

int cmd_landscape(const std::string& loss, int n, const std::string& grid_text,
                  const std::string& csv_path, const std::string& svg_path) {
  LandscapeKind kind;
  if (loss == "ctc")
    kind = LandscapeKind::kCtc;
  else if (loss == "hybrid_softmax_prior")
    kind = LandscapeKind::kHybridSoftmaxPrior;
  else if (loss == "hybrid_stop_grad_prior")
    kind = LandscapeKind::kHybridStopGradPrior;
  else if (loss == "generative")
    kind = LandscapeKind::kGenerative;
  else
    throw CLI::ValidationError("--loss", "unknown loss kind '" + loss + "'");

  const LabelTopology topo = parse_topology("B* a+ B*");
  const InputSequence x = single_label_input(n);
  const GridSpec grid = parse_grid(grid_text);

  const GridSweep result = sweep(kind, topo, x, grid);
  {
    std::ofstream os(csv_path);
    if (!os) throw std::invalid_argument("cannot write '" + csv_path + "'");
    write_landscape_csv(result, os);
    std::cout << "wrote " << csv_path << "\n";
  }
  if (!svg_path.empty()) {
    std::ofstream os(svg_path);
    if (!os) throw std::invalid_argument("cannot write '" + svg_path + "'");
    write_landscape_svg(result, os);
    std::cout << "wrote " << svg_path << "\n";
  }
  if (result.nonfinite_cells > 0)
    std::cout << "warning: " << result.nonfinite_cells << " non-finite cells flagged\n";

  const Trajectory traj = follow_gradient(kind, topo, x, {0.0, 0.0}, 0.05, 4000);
  const auto [ta, tb] = traj.points.back();
  std::cout << "origin trajectory: terminal region " << terminal_region_name(traj.terminal)
            << " (theta_a=" << format_double(ta, "%.4g") << ", theta_B=" << format_double(tb, "%.4g")
            << ")\n";
  return 0;
}

int cmd_ratio(const std::string& t_list_text, const std::string& mode_text,
              const std::string& csv_path) {
  std::vector<int> T_list;
  std::istringstream is(t_list_text);
  std::string token;
  while (std::getline(is, token, ','))
    if (!token.empty()) T_list.push_back(std::stoi(token));
  if (T_list.empty()) throw CLI::ValidationError("--T-list", "no frame counts given");

  RatioMode mode;
  if (mode_text == "uniform_exact")
    mode = RatioMode::kUniformExact;
  else if (mode_text == "memory_proxy")
    mode = RatioMode::kMemoryProxy;
  else
    throw CLI::ValidationError("--mode", "expected uniform_exact or memory_proxy");

  TrainConfig config;
  config.max_steps = 20000;
  const auto rows = ratio_sweep({"a", "b", "c"}, T_list, mode, config);
  std::ofstream os(csv_path);
  if (!os) throw std::invalid_argument("cannot write '" + csv_path + "'");
  write_ratio_csv(rows, os);
  for (const auto& row : rows) {
    std::cout << "T=" << row.T << " mean_q_blank=" << format_double(row.mean_q_blank, "%.6g");
    if (row.convergence_step) std::cout << " convergence_step=" << *row.convergence_step;
    std::cout << "\n";
  }
  std::cout << "wrote " << csv_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact alignment counting and full-sum training analysis"};
  app.require_subcommand(1);

  std::string topology_spec, csv_path, svg_path, suite, config_path, out_dir;
  std::string loss = "ctc", grid_text = "-6:6:0.1", t_list_text, mode_text = "uniform_exact";
  int T = 0, n = 0, Tmax = 0;

  auto* count = app.add_subcommand("count", "Exact alignment counts for a topology");
  count->add_option("--topology", topology_spec, "Topology spec, e.g. \"B* a+ B*\"")->required();
  count->add_option("--T", T, "Number of frames")->required()->check(CLI::PositiveNumber);
  count->add_option("--csv", csv_path, "Write the per-frame count table as CSV");

  auto* verify = app.add_subcommand("verify", "Run a named verification suite");
  verify->add_option("--suite", suite,
                     "One of: lemma, theorem2, oracle, gradcheck, generative-ratios")
      ->required();
  verify->add_option("--n", n, "Block size / draw count, suite dependent");
  verify->add_option("--Tmax", Tmax, "Largest T to check, suite dependent");

  auto* train = app.add_subcommand("train", "Run experiments from a JSON config");
  train->add_option("--config", config_path, "Experiment config file")->required();
  train->add_option("--out", out_dir, "Output directory for artifacts")->required();

  auto* landscape = app.add_subcommand("landscape", "Loss/gradient map over the two-scalar family");
  landscape->add_option("--loss", loss,
                        "ctc | hybrid_softmax_prior | hybrid_stop_grad_prior | generative")
      ->required();
  landscape->add_option("--n", n, "Block size of the input (T = 4n)")->required();
  landscape->add_option("--grid", grid_text, "Axis range MIN:MAX:STEP")->required();
  landscape->add_option("--csv", csv_path, "Output CSV path")->required();
  landscape->add_option("--svg", svg_path, "Optional SVG rendering path");

  auto* ratio = app.add_subcommand("ratio", "Mean blank occupancy across frame counts");
  ratio->add_option("--T-list", t_list_text, "Comma-separated frame counts")->required();
  ratio->add_option("--mode", mode_text, "uniform_exact | memory_proxy")->required();
  ratio->add_option("--csv", csv_path, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
    if (count->parsed()) return cmd_count(topology_spec, T, csv_path);
    if (verify->parsed()) return cmd_verify(suite, n, Tmax);
    if (train->parsed()) return cmd_train(config_path, out_dir);
    if (landscape->parsed()) return cmd_landscape(loss, n, grid_text, csv_path, svg_path);
    if (ratio->parsed()) return cmd_ratio(t_list_text, mode_text, csv_path);
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
