#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "peaky/signals.hpp"
#include "peaky/util.hpp"

namespace peaky {

/// Per-frame label distribution p_t(s | x). Columns are named so loss code
/// can align them with a topology's alphabet by label, not by position.
struct PosteriorTable {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> probs;  // T x |labels|

  int T() const { return static_cast<int>(probs.size()); }
  int label_index(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<int>(i);
    return -1;
  }
};

/// Emission distributions p(x | s) over a finite input-symbol alphabet;
/// rows are labels, columns symbols.
struct EmissionTable {
  std::vector<std::string> labels;
  std::vector<std::string> symbols;
  std::vector<std::vector<double>> probs;  // |labels| x |symbols|

  int symbol_index(const std::string& symbol) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i] == symbol) return static_cast<int>(i);
    return -1;
  }
};

/// Input-independent single bias vector: p_t(s) = softmax(b)[s].
struct BiasModel {
  std::vector<std::string> labels;
  std::vector<double> bias;
};

/// Single softmax layer p_t(s) = softmax(x_t W (+ b))[s]. The bias is off
/// by default; switching it on adds the input-independent pull of the bias
/// gradient on top of the weights.
struct FfnnModel {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> weights;  // D_x x |labels|
  bool with_bias = false;
  std::vector<double> bias;
};

/// Perfect-memory model: an unconstrained logit row per frame,
/// p_t(s) = softmax(M[t])[s]. Ignores the input values, depends on t only.
struct MemoryModel {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> memory;  // T x |labels|
};

/// Two-scalar reparameterization of the one-layer net on the two-symbol
/// block input: frames with the label symbol get logits (theta_label,
/// -theta_label) over (label, blank), blank-symbol frames get
/// (-theta_blank, theta_blank).
struct TwoParamModel {
  double theta_label = 0.0;
  double theta_blank = 0.0;
  std::string label = "a";
  std::string blank = "B";
};

/// Generative two-scalar model: p(x|s=label) = softmax((theta_label,
/// -theta_label)) over symbols (label, blank), symmetric for blank.
/// theta = 0 is the uniform emission table.
struct GenerativeModel {
  double theta_label = 0.0;
  double theta_blank = 0.0;
  std::string label = "a";
  std::string blank = "B";
};

using ModelSpec = std::variant<BiasModel, FfnnModel, MemoryModel, TwoParamModel, GenerativeModel>;

inline BiasModel uniform_bias(std::vector<std::string> labels) {
  BiasModel m;
  m.bias.assign(labels.size(), 0.0);
  m.labels = std::move(labels);
  return m;
}

inline FfnnModel uniform_ffnn(int input_dim, std::vector<std::string> labels, bool with_bias = false) {
  FfnnModel m;
  m.weights.assign(input_dim, std::vector<double>(labels.size(), 0.0));
  m.with_bias = with_bias;
  m.bias.assign(labels.size(), 0.0);
  m.labels = std::move(labels);
  return m;
}

inline MemoryModel uniform_memory(int T, std::vector<std::string> labels) {
  MemoryModel m;
  m.memory.assign(T, std::vector<double>(labels.size(), 0.0));
  m.labels = std::move(labels);
  return m;
}

inline bool is_generative(const ModelSpec& model) {
  return std::holds_alternative<GenerativeModel>(model);
}

inline PosteriorTable posteriors(const ModelSpec& model, const InputSequence& x) {
  PosteriorTable table;
  const int T = x.T();
  if (const auto* m = std::get_if<BiasModel>(&model)) {
    table.labels = m->labels;
    const std::vector<double> row = softmax(m->bias);
    table.probs.assign(T, row);
  } else if (const auto* m = std::get_if<FfnnModel>(&model)) {
    if (x.dim() != static_cast<int>(m->weights.size()))
      throw std::invalid_argument("posteriors: input dim mismatch for ffnn model");
    table.labels = m->labels;
    table.probs.reserve(T);
    for (int t = 0; t < T; ++t) {
      std::vector<double> logits(m->labels.size(), 0.0);
      for (std::size_t d = 0; d < m->weights.size(); ++d) {
        const double xv = x.frames[t][d];
        if (xv == 0.0) continue;
        for (std::size_t s = 0; s < logits.size(); ++s) logits[s] += xv * m->weights[d][s];
      }
      if (m->with_bias)
        for (std::size_t s = 0; s < logits.size(); ++s) logits[s] += m->bias[s];
      table.probs.push_back(softmax(logits));
    }
  } else if (const auto* m = std::get_if<MemoryModel>(&model)) {
    if (T != static_cast<int>(m->memory.size()))
      throw std::invalid_argument("posteriors: memory model has " +
                                  std::to_string(m->memory.size()) + " frames, input has " +
                                  std::to_string(T));
    table.labels = m->labels;
    table.probs.reserve(T);
    for (int t = 0; t < T; ++t) table.probs.push_back(softmax(m->memory[t]));
  } else if (const auto* m = std::get_if<TwoParamModel>(&model)) {
    table.labels = {m->label, m->blank};
    table.probs.reserve(T);
    for (int t = 0; t < T; ++t) {
      if (x.frame_symbol[t] == m->label)
        table.probs.push_back(softmax({m->theta_label, -m->theta_label}));
      else if (x.frame_symbol[t] == m->blank)
        table.probs.push_back(softmax({-m->theta_blank, m->theta_blank}));
      else
        throw std::invalid_argument("posteriors: two-param model cannot read symbol '" +
                                    x.frame_symbol[t] + "'");
    }
  } else {
    throw std::invalid_argument("posteriors: generative model has no label posteriors");
  }
  return table;
}

inline EmissionTable emissions(const GenerativeModel& m) {
  EmissionTable table;
  table.labels = {m.label, m.blank};
  table.symbols = {m.label, m.blank};
  table.probs = {softmax({m.theta_label, -m.theta_label}),
                 softmax({-m.theta_blank, m.theta_blank})};
  return table;
}

/// Visits every scalar parameter of the model, in serialization order.
template <typename Fn>
void for_each_parameter(ModelSpec& model, Fn&& fn) {
  if (auto* m = std::get_if<BiasModel>(&model)) {
    for (double& v : m->bias) fn(v);
  } else if (auto* m = std::get_if<FfnnModel>(&model)) {
    for (auto& row : m->weights)
      for (double& v : row) fn(v);
    if (m->with_bias)
      for (double& v : m->bias) fn(v);
  } else if (auto* m = std::get_if<MemoryModel>(&model)) {
    for (auto& row : m->memory)
      for (double& v : row) fn(v);
  } else if (auto* m = std::get_if<TwoParamModel>(&model)) {
    fn(m->theta_label);
    fn(m->theta_blank);
  } else if (auto* m = std::get_if<GenerativeModel>(&model)) {
    fn(m->theta_label);
    fn(m->theta_blank);
  }
}

inline std::vector<double> flatten_parameters(const ModelSpec& model) {
  ModelSpec copy = model;
  std::vector<double> out;
  for_each_parameter(copy, [&](double& v) { out.push_back(v); });
  return out;
}

/// theta <- theta - lr * grad; the gradient must be the same variant with
/// the same shape.
inline ModelSpec apply_gradient_step(const ModelSpec& model, const ModelSpec& gradient,
                                     double learning_rate) {
  if (model.index() != gradient.index())
    throw std::invalid_argument("apply_gradient_step: model/gradient variant mismatch");
  ModelSpec out = model;
  const std::vector<double> g = flatten_parameters(gradient);
  std::size_t i = 0;
  for_each_parameter(out, [&](double& v) {
    if (i >= g.size()) throw std::invalid_argument("apply_gradient_step: shape mismatch");
    v -= learning_rate * g[i++];
  });
  if (i != g.size()) throw std::invalid_argument("apply_gradient_step: shape mismatch");
  return out;
}

// --- flat key-value checkpoint format ------------------------------------

namespace detail {

inline void write_values(std::ostream& os, const std::vector<double>& vs) {
  for (double v : vs) os << ' ' << format_double(v);
  os << '\n';
}

inline void write_values(std::ostream& os, const std::vector<std::vector<double>>& rows) {
  for (const auto& row : rows)
    for (double v : row) os << ' ' << format_double(v);
  os << '\n';
}

}  // namespace detail

inline std::string serialize_model(const ModelSpec& model) {
  std::ostringstream os;
  if (const auto* m = std::get_if<BiasModel>(&model)) {
    os << "kind bias\nlabels";
    for (const auto& l : m->labels) os << ' ' << l;
    os << "\nb";
    detail::write_values(os, m->bias);
  } else if (const auto* m = std::get_if<FfnnModel>(&model)) {
    os << "kind ffnn\nlabels";
    for (const auto& l : m->labels) os << ' ' << l;
    os << "\ninput_dim " << m->weights.size();
    os << "\nwith_bias " << (m->with_bias ? 1 : 0);
    os << "\nW";
    detail::write_values(os, m->weights);
    if (m->with_bias) {
      os << "b";
      detail::write_values(os, m->bias);
    }
  } else if (const auto* m = std::get_if<MemoryModel>(&model)) {
    os << "kind memory\nlabels";
    for (const auto& l : m->labels) os << ' ' << l;
    os << "\nframes " << m->memory.size();
    os << "\nM";
    detail::write_values(os, m->memory);
  } else if (const auto* m = std::get_if<TwoParamModel>(&model)) {
    os << "kind two_param\nlabel " << m->label << "\nblank " << m->blank
       << "\ntheta_label " << format_double(m->theta_label)
       << "\ntheta_blank " << format_double(m->theta_blank) << '\n';
  } else if (const auto* m = std::get_if<GenerativeModel>(&model)) {
    os << "kind generative\nlabel " << m->label << "\nblank " << m->blank
       << "\ntheta_label " << format_double(m->theta_label)
       << "\ntheta_blank " << format_double(m->theta_blank) << '\n';
  }
  return os.str();
}

inline ModelSpec parse_model(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::pair<std::string, std::vector<std::string>>> fields;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, token;
    ls >> key;
    std::vector<std::string> values;
    while (ls >> token) values.push_back(token);
    fields.emplace_back(key, values);
  }
  auto find = [&](const std::string& key) -> const std::vector<std::string>& {
    for (const auto& [k, v] : fields)
      if (k == key) return v;
    throw std::invalid_argument("parse_model: missing field '" + key + "'");
  };
  auto doubles = [&](const std::string& key) {
    std::vector<double> out;
    for (const auto& v : find(key)) out.push_back(std::stod(v));
    return out;
  };
  auto rows = [&](const std::string& key, std::size_t nrows, std::size_t ncols) {
    const std::vector<double> flat = doubles(key);
    if (flat.size() != nrows * ncols)
      throw std::invalid_argument("parse_model: field '" + key + "' has wrong size");
    std::vector<std::vector<double>> out(nrows, std::vector<double>(ncols));
    for (std::size_t r = 0; r < nrows; ++r)
      for (std::size_t c = 0; c < ncols; ++c) out[r][c] = flat[r * ncols + c];
    return out;
  };

  const std::string kind = find("kind").at(0);
  if (kind == "bias") {
    BiasModel m;
    m.labels = find("labels");
    m.bias = doubles("b");
    if (m.bias.size() != m.labels.size()) throw std::invalid_argument("parse_model: bias size mismatch");
    return m;
  }
  if (kind == "ffnn") {
    FfnnModel m;
    m.labels = find("labels");
    const std::size_t dim = std::stoul(find("input_dim").at(0));
    m.with_bias = find("with_bias").at(0) == "1";
    m.weights = rows("W", dim, m.labels.size());
    m.bias = m.with_bias ? doubles("b") : std::vector<double>(m.labels.size(), 0.0);
    return m;
  }
  if (kind == "memory") {
    MemoryModel m;
    m.labels = find("labels");
    const std::size_t frames = std::stoul(find("frames").at(0));
    m.memory = rows("M", frames, m.labels.size());
    return m;
  }
  if (kind == "two_param" || kind == "generative") {
    const std::string label = find("label").at(0);
    const std::string blank = find("blank").at(0);
    const double tl = std::stod(find("theta_label").at(0));
    const double tb = std::stod(find("theta_blank").at(0));
    if (kind == "two_param") return TwoParamModel{tl, tb, label, blank};
    return GenerativeModel{tl, tb, label, blank};
  }
  throw std::invalid_argument("parse_model: unknown kind '" + kind + "'");
}

}  // namespace peaky
