#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peaky/counting.hpp"
#include "peaky/losses.hpp"
#include "peaky/models.hpp"
#include "peaky/signals.hpp"
#include "peaky/topology.hpp"
#include "peaky/training.hpp"
#include "peaky/util.hpp"

namespace peaky {

/// One training experiment, as read from a JSON config:
///   {
///     "name": "bias_T5",
///     "topology": "B* a+ B*",
///     "target": ["a"], "blank": "B",
///     "input": {"dim": 2, "blocks": [["B",1],["a",3],["B",1]],
///               "hot_index": {"a":0,"B":1}}            // or {"scaled_ping_T": 40}
///     "model": {"kind": "bias"},                        // bias|ffnn|memory|two_param|generative
///     "loss": "ctc",                                    // ctc|hybrid|generative
///     "prior": {"mode": "softmax"},                     // softmax|stop_grad|learned|ema
///     "train": {"learning_rate": 0.1, "max_steps": 50000, ...}
///   }
struct ExperimentConfig {
  std::string name;
  std::string topology_spec;
  std::vector<std::string> target;
  std::string blank = "B";
  InputSequence input;
  std::string model_kind;
  bool ffnn_with_bias = false;
  LossKind loss = LossKind::kCtc;
  std::optional<PriorMode> prior;
  TrainConfig train;
};

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "ctc") return LossKind::kCtc;
  if (s == "hybrid") return LossKind::kHybrid;
  if (s == "generative") return LossKind::kGenerative;
  throw std::invalid_argument("unknown loss kind '" + s + "'");
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.name = j.at("name").get<std::string>();
  cfg.topology_spec = j.at("topology").get<std::string>();
  cfg.target = j.at("target").get<std::vector<std::string>>();
  cfg.blank = j.value("blank", std::string("B"));

  const auto& input = j.at("input");
  if (input.contains("scaled_ping_T")) {
    cfg.input = scaled_ping_input(input.at("scaled_ping_T").get<int>());
  } else {
    std::vector<BlockSpec> blocks;
    for (const auto& b : input.at("blocks"))
      blocks.push_back({b.at(0).get<std::string>(), b.at(1).get<int>()});
    std::map<std::string, int> hot;
    for (const auto& [key, value] : input.at("hot_index").items()) hot[key] = value.get<int>();
    cfg.input = block_input(blocks, input.at("dim").get<int>(), hot);
  }

  cfg.model_kind = j.at("model").at("kind").get<std::string>();
  cfg.ffnn_with_bias = j.at("model").value("with_bias", false);
  cfg.loss = loss_kind_from_string(j.at("loss").get<std::string>());

  if (j.contains("prior")) {
    const std::string mode = j.at("prior").at("mode").get<std::string>();
    if (mode == "softmax")
      cfg.prior = PriorMode{SoftmaxPrior{}};
    else if (mode == "stop_grad")
      cfg.prior = PriorMode{StopGradPrior{}};
    else if (mode == "learned")
      cfg.prior = PriorMode{LearnedPrior{}};
    else if (mode == "ema")
      cfg.prior = PriorMode{EmaPrior{j.at("prior").value("decay", 0.99), {}}};
    else
      throw std::invalid_argument("unknown prior mode '" + mode + "'");
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.max_steps = t.value("max_steps", cfg.train.max_steps);
    cfg.train.stop_delta = t.value("stop_delta", cfg.train.stop_delta);
    cfg.train.convergence_loss_threshold =
        t.value("convergence_loss_threshold", cfg.train.convergence_loss_threshold);
    cfg.train.seed = t.value("seed", cfg.train.seed);
    cfg.train.realign_every = t.value("realign_every", cfg.train.realign_every);
  }
  return cfg;
}

/// Reads either a single experiment object or {"experiments": [...]}.
inline std::vector<ExperimentConfig> load_experiment_configs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  nlohmann::json j;
  in >> j;
  std::vector<ExperimentConfig> configs;
  if (j.contains("experiments"))
    for (const auto& e : j.at("experiments")) configs.push_back(parse_experiment_config(e));
  else
    configs.push_back(parse_experiment_config(j));
  return configs;
}

inline ModelSpec build_model(const ExperimentConfig& cfg, const LabelTopology& topo) {
  if (cfg.model_kind == "bias") return uniform_bias(topo.alphabet());
  if (cfg.model_kind == "ffnn")
    return uniform_ffnn(cfg.input.dim(), topo.alphabet(), cfg.ffnn_with_bias);
  if (cfg.model_kind == "memory") return uniform_memory(cfg.input.T(), topo.alphabet());
  if (cfg.model_kind == "two_param") return TwoParamModel{};
  if (cfg.model_kind == "generative") return GenerativeModel{};
  throw std::invalid_argument("unknown model kind '" + cfg.model_kind + "'");
}

struct ExperimentRun {
  ExperimentConfig config;
  ExperimentResult result;
};

inline ExperimentRun run_experiment(const ExperimentConfig& cfg) {
  const LabelTopology topo = parse_topology(cfg.topology_spec);
  ExperimentConfig local = cfg;
  if (local.prior) {
    if (auto* learned = std::get_if<LearnedPrior>(&*local.prior))
      if (learned->logits.empty()) learned->logits.assign(topo.num_labels(), 0.0);
  }
  ExperimentRun run;
  run.config = local;
  run.result = train(build_model(local, topo), local.loss, local.prior, topo, local.input,
                     local.target, local.train);
  return run;
}

inline void write_loss_curve_csv(const std::vector<double>& curve, std::ostream& os) {
  os << "step,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    os << i << ',' << format_double(curve[i]) << '\n';
}

inline std::string summary_header() {
  return "name,loss,steps,termination,sequence_error,is_peaky_behavior,dominant,"
         "mean_p_dominant,min_p_dominant,mean_q_dominant,target_prior_dominant,convergence_step";
}

inline std::string summary_row(const ExperimentRun& run) {
  const ExperimentResult& r = run.result;
  double mean_p = 0.0, min_p = 1.0, target_prior = 0.0;
  if (r.peakiness.dominant) {
    const int dom = r.final_posteriors.label_index(*r.peakiness.dominant);
    for (const auto& row : r.final_posteriors.probs) {
      mean_p += row[dom];
      min_p = std::min(min_p, row[dom]);
    }
    mean_p /= r.final_posteriors.T();
    // Exact alignment-mass fraction of the dominant label, the reference
    // the converged distribution is compared against.
    const LabelTopology topo = parse_topology(run.config.topology_spec);
    target_prior = to_double(label_mass_fraction(
        count_alignments(topo, r.final_posteriors.T()), topo.label_index(*r.peakiness.dominant)));
  } else {
    min_p = 0.0;
  }
  std::string out = run.config.name;
  out += ',' + format_double(r.loss_curve.empty() ? 0.0 : r.loss_curve.back());
  out += ',' + std::to_string(r.loss_curve.size());
  out += ',';
  out += termination_name(r.termination);
  out += ',' + std::to_string(r.sequence_error);
  out += ',' + std::to_string(r.peakiness.is_peaky_behavior ? 1 : 0);
  out += ',' + (r.peakiness.dominant ? *r.peakiness.dominant : std::string("none"));
  out += ',' + format_double(mean_p);
  out += ',' + format_double(min_p);
  out += ',' + format_double(r.mean_q_dominant);
  out += ',' + format_double(target_prior);
  out += ',';
  if (r.convergence_step) out += std::to_string(*r.convergence_step);
  return out;
}

/// Runs every experiment in the config file and writes, per experiment,
/// `<name>_curve.csv`, `<name>_peakiness.txt` and `<name>_model.txt`, plus
/// one shared `summary.csv`, into the output directory.
inline std::vector<ExperimentRun> run_experiment_file(const std::string& config_path,
                                                      const std::string& out_dir) {
  const auto configs = load_experiment_configs(config_path);
  std::filesystem::create_directories(out_dir);
  std::vector<ExperimentRun> runs;
  std::ofstream summary(std::filesystem::path(out_dir) / "summary.csv");
  summary << summary_header() << '\n';
  for (const auto& cfg : configs) {
    ExperimentRun run = run_experiment(cfg);
    const std::filesystem::path base(out_dir);
    {
      std::ofstream os(base / (cfg.name + "_curve.csv"));
      write_loss_curve_csv(run.result.loss_curve, os);
    }
    {
      std::ofstream os(base / (cfg.name + "_peakiness.txt"));
      write_peakiness_report(run.result.peakiness, os);
    }
    {
      std::ofstream os(base / (cfg.name + "_model.txt"));
      os << serialize_model(run.result.final_model);
    }
    summary << summary_row(run) << '\n';
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace peaky
