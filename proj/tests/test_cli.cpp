// End-to-end checks of the command-line driver: exit codes, stdout and the
// artifact files it writes.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = fs::temp_directory_path() / ("peaky_cli_" + std::to_string(counter++) + ".log");
  const std::string cmd = std::string(PEAKY_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  fs::remove(log);
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("count prints totals and writes the csv") {
  const fs::path dir = fresh_dir("peaky_cli_count");
  const fs::path csv = dir / "counts.csv";
  const auto r = run_cli("count --topology \"B* a+ B*\" --T 5 --csv " + csv.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("total alignments: 15") != std::string::npos);
  CHECK(r.output.find("count(a): 35") != std::string::npos);
  CHECK(r.output.find("count(B): 40") != std::string::npos);
  CHECK(r.output.find("dominant label: B") != std::string::npos);
  const std::string first = slurp(csv);
  CHECK(first.rfind("t,label,count\n", 0) == 0);

  // Re-running overwrites the artifact byte-identically.
  const auto again = run_cli("count --topology \"B* a+ B*\" --T 5 --csv " + csv.string());
  CHECK(again.exit_code == 0);
  CHECK(slurp(csv) == first);
}

TEST_CASE("count reports ties as none") {
  const auto r = run_cli("count --topology \"B* a+ B*\" --T 4");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("dominant label: none") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("count --topology \"\" --T 5").exit_code == 2);
  CHECK(run_cli("count --T 5").exit_code == 2);
  CHECK(run_cli("count --topology \"a+ a+\" --T 5").exit_code == 2);
  CHECK(run_cli("verify --suite bogus").exit_code == 2);
  CHECK(run_cli("landscape --loss ctc --n 4 --grid nope --csv /tmp/x.csv").exit_code == 2);
  CHECK(run_cli("landscape --loss ctc --csv /tmp/x.csv").exit_code == 2);
  CHECK(run_cli("ratio --T-list 6 --csv /tmp/x.csv").exit_code == 2);
  CHECK(run_cli("nonsense").exit_code == 2);
}

TEST_CASE("verify suites pass and print one line per check") {
  const auto r = run_cli("verify --suite lemma --Tmax 60");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("PASS") != std::string::npos);
  CHECK(r.output.find("FAIL") == std::string::npos);
  CHECK(r.output.find("all checks passed") != std::string::npos);

  CHECK(run_cli("verify --suite theorem2 --n 4").exit_code == 0);
  CHECK(run_cli("verify --suite generative-ratios").exit_code == 0);
  CHECK(run_cli("verify --suite oracle --Tmax 9").exit_code == 0);
  CHECK(run_cli("verify --suite gradcheck --n 10").exit_code == 0);
}

TEST_CASE("train runs a shipped config and writes artifacts") {
  const fs::path dir = fresh_dir("peaky_cli_train");
  const fs::path config = fs::path(PEAKY_CONFIG_DIR) / "bias_T5.json";
  REQUIRE(fs::exists(config));
  const auto r = run_cli("train --config " + config.string() + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("bias_T5") != std::string::npos);

  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.rfind("name,loss,steps,termination,sequence_error,is_peaky_behavior,dominant,"
                      "mean_p_dominant,min_p_dominant,mean_q_dominant,target_prior_dominant,"
                      "convergence_step\n",
                      0) == 0);
  CHECK(summary.find("bias_T5,") != std::string::npos);
  // The exact reference the bias run is compared against: 8/15.
  CHECK(summary.find("0.53333333333333333") != std::string::npos);

  const std::string curve = slurp(dir / "bias_T5_curve.csv");
  CHECK(curve.rfind("step,loss\n", 0) == 0);
  CHECK(slurp(dir / "bias_T5_peakiness.txt").find("is_peaky_behavior 1") != std::string::npos);
  CHECK(slurp(dir / "bias_T5_model.txt").rfind("kind bias\n", 0) == 0);
}

TEST_CASE("train reports divergence with exit code 1") {
  const fs::path dir = fresh_dir("peaky_cli_diverge");
  const fs::path config = dir / "diverge.json";
  {
    std::ofstream os(config);
    os << R"({
      "name": "diverge",
      "topology": "B* a+ B*",
      "target": ["a"],
      "input": {"dim": 2, "blocks": [["B",4],["a",8],["B",4]], "hot_index": {"a":0,"B":1}},
      "model": {"kind": "ffnn"},
      "loss": "ctc",
      "train": {"learning_rate": 1e9, "max_steps": 50}
    })";
  }
  const auto r = run_cli("train --config " + config.string() + " --out " + dir.string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("diverged") != std::string::npos);
}

TEST_CASE("landscape writes csv and svg and classifies the origin") {
  const fs::path dir = fresh_dir("peaky_cli_landscape");
  const fs::path csv = dir / "map.csv", svg = dir / "map.svg";
  const auto r = run_cli("landscape --loss ctc --n 4 --grid -2:2:0.5 --csv " + csv.string() +
                         " --svg " + svg.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("terminal region peaky") != std::string::npos);
  CHECK(slurp(csv).rfind("theta_a,theta_B,loss,grad_a,grad_B\n", 0) == 0);
  CHECK(slurp(svg).rfind("<svg", 0) == 0);

  const auto hybrid = run_cli("landscape --loss hybrid_softmax_prior --n 4 --grid -1:1:0.5 --csv " +
                              csv.string());
  CHECK(hybrid.exit_code == 0);
  CHECK(hybrid.output.find("terminal region optimal") != std::string::npos);
}

TEST_CASE("ratio writes the sweep table") {
  const fs::path dir = fresh_dir("peaky_cli_ratio");
  const fs::path csv = dir / "ratio.csv";
  const auto r = run_cli("ratio --T-list 6,8,12 --mode uniform_exact --csv " + csv.string());
  CHECK(r.exit_code == 0);
  const std::string table = slurp(csv);
  CHECK(table.rfind("T,mean_q_blank,convergence_step\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);
}
