#include "mcl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "mcl/errors.hpp"

namespace mcl {

std::string to_string(LossKind k) { return k == LossKind::mcl ? "mcl" : "infonce"; }

EncoderConfig ExperimentConfig::condition_encoder() const {
  return {task.classes, layers, leaky_slope};
}

EncoderConfig ExperimentConfig::image_encoder() const { return {3, layers, leaky_slope}; }

std::size_t ExperimentConfig::feature_dim() const { return layers.empty() ? 0 : layers.back().out_channels; }

void ExperimentConfig::validate() const {
  task.validate();
  condition_encoder().validate();
  const EncoderConfig enc = image_encoder();
  if (enc.stride_product() != task.cell) {
    throw ConfigError("encoder stride product " + std::to_string(enc.stride_product()) + " must equal task cell size " +
                      std::to_string(task.cell));
  }
  if (enc.output_extent(task.image_size()) != task.grid) {
    throw ConfigError("encoder output extent does not match the task grid");
  }
  if (scm && scm_dim == 0) throw ConfigError("scm_dim must be >= 1");
  contrastive.validate();
  if (!(sharpness > 0.0)) throw ConfigError("sharpness must be > 0");
  weights.validate();
  adam.validate();
  if (batch == 0) throw ConfigError("batch must be >= 1");
  if (log_every == 0) throw ConfigError("log_every must be >= 1");
  if (eval_pairs == 0) throw ConfigError("eval_pairs must be >= 1");
  if (!(stop_at_top1 >= 0.0 && stop_at_top1 <= 1.0)) throw ConfigError("stop_at_top1 must lie in [0, 1]");
  if (run_id.empty() || run_id.find_first_of(",\"\n\r") != std::string::npos) {
    throw ConfigError("run_id must be non-empty and free of commas, quotes and newlines");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T number(const std::string& key, const std::string& v) {
  T out{};
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) throw ConfigError("config: bad value for '" + key + "': '" + v + "'");
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' expects on/off, got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run_id", [](auto& c, auto&, auto& v) { c.run_id = v; }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = number<std::uint64_t>(k, v); }},
      {"task", [](auto& c, auto&, auto& v) { c.task.kind = parse_task_kind(v); }},
      {"grid", [](auto& c, auto& k, auto& v) { c.task.grid = number<std::size_t>(k, v); }},
      {"cell", [](auto& c, auto& k, auto& v) { c.task.cell = number<std::size_t>(k, v); }},
      {"classes", [](auto& c, auto& k, auto& v) { c.task.classes = number<std::size_t>(k, v); }},
      {"permute", [](auto& c, auto& k, auto& v) { c.task.permute = boolean(k, v); }},
      {"jitter", [](auto& c, auto& k, auto& v) { c.task.jitter = boolean(k, v); }},
      {"ambiguous", [](auto& c, auto& k, auto& v) { c.task.ambiguous = boolean(k, v); }},
      {"layers", [](auto& c, auto&, auto& v) { c.layers = parse_layers(v); }},
      {"leaky_slope", [](auto& c, auto& k, auto& v) { c.leaky_slope = number<double>(k, v); }},
      {"scm", [](auto& c, auto& k, auto& v) { c.scm = boolean(k, v); }},
      {"scm_dim", [](auto& c, auto& k, auto& v) { c.scm_dim = number<std::size_t>(k, v); }},
      {"loss",
       [](auto& c, auto& k, auto& v) {
         if (v == "mcl") {
           c.loss = LossKind::mcl;
         } else if (v == "infonce") {
           c.loss = LossKind::infonce;
         } else {
           throw ConfigError("config: '" + k + "' expects mcl or infonce, got '" + v + "'");
         }
       }},
      {"margin", [](auto& c, auto& k, auto& v) { c.contrastive.margin = number<double>(k, v); }},
      {"scale", [](auto& c, auto& k, auto& v) { c.contrastive.scale = number<double>(k, v); }},
      {"temperature", [](auto& c, auto& k, auto& v) { c.contrastive.temperature = number<double>(k, v); }},
      {"sharpness", [](auto& c, auto& k, auto& v) { c.sharpness = number<double>(k, v); }},
      {"lambda_cyc", [](auto& c, auto& k, auto& v) { c.weights.cycle = number<double>(k, v); }},
      {"lambda_fcst", [](auto& c, auto& k, auto& v) { c.weights.consistency = number<double>(k, v); }},
      {"lambda_mcl", [](auto& c, auto& k, auto& v) { c.weights.contrastive = number<double>(k, v); }},
      {"lambda_pse", [](auto& c, auto& k, auto& v) { c.weights.pseudo = number<double>(k, v); }},
      {"lr", [](auto& c, auto& k, auto& v) { c.adam.learning_rate = number<double>(k, v); }},
      {"beta1", [](auto& c, auto& k, auto& v) { c.adam.beta1 = number<double>(k, v); }},
      {"beta2", [](auto& c, auto& k, auto& v) { c.adam.beta2 = number<double>(k, v); }},
      {"adam_epsilon", [](auto& c, auto& k, auto& v) { c.adam.epsilon = number<double>(k, v); }},
      {"steps", [](auto& c, auto& k, auto& v) { c.steps = number<std::size_t>(k, v); }},
      {"batch", [](auto& c, auto& k, auto& v) { c.batch = number<std::size_t>(k, v); }},
      {"log_every", [](auto& c, auto& k, auto& v) { c.log_every = number<std::size_t>(k, v); }},
      {"eval_pairs", [](auto& c, auto& k, auto& v) { c.eval_pairs = number<std::size_t>(k, v); }},
      {"eval_seed", [](auto& c, auto& k, auto& v) { c.eval_seed = number<std::uint64_t>(k, v); }},
      {"stop_at_top1", [](auto& c, auto& k, auto& v) { c.stop_at_top1 = number<double>(k, v); }},
  };
  return table;
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::vector<ConvLayerSpec> parse_layers(const std::string& s) {
  std::vector<ConvLayerSpec> layers;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto a = item.find(':');
    const auto b = item.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw ConfigError("layers: expected kernel:stride:channels, got '" + item + "'");
    }
    layers.push_back({number<std::size_t>("layers", item.substr(0, a)),
                      number<std::size_t>("layers", item.substr(a + 1, b - a - 1)),
                      number<std::size_t>("layers", item.substr(b + 1))});
  }
  if (layers.empty()) throw ConfigError("layers: empty layer list");
  return layers;
}

std::string format_layers(const std::vector<ConvLayerSpec>& layers) {
  std::string out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(layers[i].kernel) + ':' + std::to_string(layers[i].stride) + ':' +
           std::to_string(layers[i].out_channels);
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    it->second(cfg, key, value);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto onoff = [](bool b) { return b ? "on" : "off"; };
  o << "run_id = " << c.run_id << '\n'
    << "seed = " << c.seed << '\n'
    << "task = " << to_string(c.task.kind) << '\n'
    << "grid = " << c.task.grid << '\n'
    << "cell = " << c.task.cell << '\n'
    << "classes = " << c.task.classes << '\n'
    << "permute = " << onoff(c.task.permute) << '\n'
    << "jitter = " << onoff(c.task.jitter) << '\n'
    << "ambiguous = " << onoff(c.task.ambiguous) << '\n'
    << "layers = " << format_layers(c.layers) << '\n'
    << "leaky_slope = " << fmt(c.leaky_slope) << '\n'
    << "scm = " << onoff(c.scm) << '\n'
    << "scm_dim = " << c.scm_dim << '\n'
    << "loss = " << to_string(c.loss) << '\n'
    << "margin = " << fmt(c.contrastive.margin) << '\n'
    << "scale = " << fmt(c.contrastive.scale) << '\n'
    << "temperature = " << fmt(c.contrastive.temperature) << '\n'
    << "sharpness = " << fmt(c.sharpness) << '\n'
    << "lambda_cyc = " << fmt(c.weights.cycle) << '\n'
    << "lambda_fcst = " << fmt(c.weights.consistency) << '\n'
    << "lambda_mcl = " << fmt(c.weights.contrastive) << '\n'
    << "lambda_pse = " << fmt(c.weights.pseudo) << '\n'
    << "lr = " << fmt(c.adam.learning_rate) << '\n'
    << "beta1 = " << fmt(c.adam.beta1) << '\n'
    << "beta2 = " << fmt(c.adam.beta2) << '\n'
    << "adam_epsilon = " << fmt(c.adam.epsilon) << '\n'
    << "steps = " << c.steps << '\n'
    << "batch = " << c.batch << '\n'
    << "log_every = " << c.log_every << '\n'
    << "eval_pairs = " << c.eval_pairs << '\n'
    << "eval_seed = " << c.eval_seed << '\n'
    << "stop_at_top1 = " << fmt(c.stop_at_top1) << '\n';
  return o.str();
}

}  // namespace mcl
