#include "pml/config.hpp"

#include <fstream>
#include <sstream>

#include "pml/csv.hpp"
#include "pml/curriculum.hpp"
#include "pml/errors.hpp"

namespace pml {

std::string_view to_string(TrainMode m) { return m == TrainMode::Pml ? "pml" : "baseline"; }
std::string_view to_string(Decoder d) { return d == Decoder::Expectation ? "expectation" : "argmax"; }

namespace {

double as_real(std::string_view key, std::string_view value) {
  double v = 0.0;
  if (!parse_real(value, v)) throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
  return v;
}

long long as_int(std::string_view key, std::string_view value) {
  long long v = 0;
  if (!parse_int(value, v)) throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + std::string(value) + "'");
  return v;
}

int as_int32(std::string_view key, std::string_view value) {
  const long long v = as_int(key, value);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError("'" + std::string(key) + "' is out of range");
  return static_cast<int>(v);
}

bool as_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError("'" + std::string(key) + "' expects true/false, got '" + std::string(value) + "'");
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_real(values[i]);
  return out;
}

}  // namespace

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  for (auto field : split_fields(text)) {
    field = trim(field);
    double v = 0.0;
    if (!parse_real(field, v)) throw ConfigError("bad number '" + std::string(field) + "' in list");
    out.push_back(v);
  }
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "mode", "margins", "curriculum", "sigma", "lambda", "beta", "m_max", "mu_range", "sigma_min",
      "optimizer", "learning_rate", "momentum", "beta1", "beta2", "weight_decay", "batch_size",
      "stage_epochs", "patience", "min_improvement", "fractions", "seed", "decoder", "hidden_width",
      "feature_dim", "margin_hidden", "margin_zero_init", "restat_each_epoch", "distribution_samples",
      "data.classes", "data.dim", "data.n_max", "data.gamma", "data.noise_sigma", "data.class_spacing",
      "data.annotated_sigma", "data.head_placement", "data.seed", "data_path", "out_dir"};
  return keys;
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  if (key == "mode") {
    if (value == "pml") mode = TrainMode::Pml;
    else if (value == "baseline") mode = TrainMode::Baseline;
    else throw ConfigError("mode must be pml or baseline");
  } else if (key == "margins") margins = as_bool(key, value);
  else if (key == "curriculum") curriculum = as_bool(key, value);
  else if (key == "sigma") label_sigma = as_real(key, value);
  else if (key == "lambda") mix.lambda = as_real(key, value);
  else if (key == "beta") mix.beta = as_real(key, value);
  else if (key == "m_max") margin.m_max = as_real(key, value);
  else if (key == "mu_range") margin.mu_range = as_real(key, value);
  else if (key == "sigma_min") margin.sigma_min = as_real(key, value);
  else if (key == "optimizer") optimizer.kind = parse_optimizer_kind(value);
  else if (key == "learning_rate") optimizer.learning_rate = as_real(key, value);
  else if (key == "momentum") optimizer.momentum = as_real(key, value);
  else if (key == "beta1") optimizer.beta1 = as_real(key, value);
  else if (key == "beta2") optimizer.beta2 = as_real(key, value);
  else if (key == "weight_decay") optimizer.weight_decay = as_real(key, value);
  else if (key == "batch_size") batch_size = as_int32(key, value);
  else if (key == "stage_epochs") stage_epochs = as_int32(key, value);
  else if (key == "patience") patience = as_int32(key, value);
  else if (key == "min_improvement") min_improvement = as_real(key, value);
  else if (key == "fractions") fractions = parse_real_list(value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(as_int(key, value));
  else if (key == "decoder") {
    if (value == "expectation") decoder = Decoder::Expectation;
    else if (value == "argmax") decoder = Decoder::Argmax;
    else throw ConfigError("decoder must be expectation or argmax");
  } else if (key == "hidden_width") hidden_width = as_int32(key, value);
  else if (key == "feature_dim") feature_dim = as_int32(key, value);
  else if (key == "margin_hidden") margin_hidden = as_int32(key, value);
  else if (key == "margin_zero_init") margin_zero_init = as_bool(key, value);
  else if (key == "restat_each_epoch") restat_each_epoch = as_bool(key, value);
  else if (key == "distribution_samples") distribution_samples = as_int32(key, value);
  else if (key == "data.classes") data.classes = as_int32(key, value);
  else if (key == "data.dim") data.dim = as_int32(key, value);
  else if (key == "data.n_max") data.n_max = as_int32(key, value);
  else if (key == "data.gamma") data.tail_exponent = as_real(key, value);
  else if (key == "data.noise_sigma") data.noise_sigma = as_real(key, value);
  else if (key == "data.class_spacing") data.class_spacing = as_real(key, value);
  else if (key == "data.annotated_sigma") data.annotated_sigma = as_real(key, value);
  else if (key == "data.head_placement") data.head_placement = parse_head_placement(value);
  else if (key == "data.seed") data.seed = static_cast<std::uint64_t>(as_int(key, value));
  else if (key == "data_path") data_path = std::string(value);
  else if (key == "out_dir") out_dir = std::string(value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "mode = " << to_string(mode) << '\n'
      << "margins = " << (margins ? "true" : "false") << '\n'
      << "curriculum = " << (curriculum ? "true" : "false") << '\n'
      << "sigma = " << format_real(label_sigma) << '\n'
      << "lambda = " << format_real(mix.lambda) << '\n'
      << "beta = " << format_real(mix.beta) << '\n'
      << "m_max = " << format_real(margin.m_max) << '\n'
      << "mu_range = " << format_real(margin.mu_range) << '\n'
      << "sigma_min = " << format_real(margin.sigma_min) << '\n'
      << "optimizer = " << to_string(optimizer.kind) << '\n'
      << "learning_rate = " << format_real(optimizer.learning_rate) << '\n'
      << "momentum = " << format_real(optimizer.momentum) << '\n'
      << "beta1 = " << format_real(optimizer.beta1) << '\n'
      << "beta2 = " << format_real(optimizer.beta2) << '\n'
      << "weight_decay = " << format_real(optimizer.weight_decay) << '\n'
      << "batch_size = " << batch_size << '\n'
      << "stage_epochs = " << stage_epochs << '\n'
      << "patience = " << patience << '\n'
      << "min_improvement = " << format_real(min_improvement) << '\n'
      << "fractions = " << join(fractions) << '\n'
      << "seed = " << seed << '\n'
      << "decoder = " << to_string(decoder) << '\n'
      << "hidden_width = " << hidden_width << '\n'
      << "feature_dim = " << feature_dim << '\n'
      << "margin_hidden = " << margin_hidden << '\n'
      << "margin_zero_init = " << (margin_zero_init ? "true" : "false") << '\n'
      << "restat_each_epoch = " << (restat_each_epoch ? "true" : "false") << '\n'
      << "distribution_samples = " << distribution_samples << '\n'
      << "data.classes = " << data.classes << '\n'
      << "data.dim = " << data.dim << '\n'
      << "data.n_max = " << data.n_max << '\n'
      << "data.gamma = " << format_real(data.tail_exponent) << '\n'
      << "data.noise_sigma = " << format_real(data.noise_sigma) << '\n'
      << "data.class_spacing = " << format_real(data.class_spacing) << '\n'
      << "data.annotated_sigma = " << format_real(data.annotated_sigma) << '\n'
      << "data.head_placement = " << to_string(data.head_placement) << '\n'
      << "data.seed = " << data.seed << '\n'
      << "data_path = " << data_path << '\n'
      << "out_dir = " << out_dir << '\n';
  return out.str();
}

TrainConfig TrainConfig::effective() const {
  TrainConfig out = *this;
  if (mode == TrainMode::Baseline) {
    out.margins = false;
    out.mix = {0.0, 0.0};
    out.curriculum = false;
  }
  return out;
}

int TrainConfig::total_epoch_budget() const { return stage_epochs * static_cast<int>(fractions.size()); }

void TrainConfig::validate() const {
  if (!(label_sigma > 0.0) || !std::isfinite(label_sigma)) throw ConfigError("sigma must be positive");
  mix.validate();
  margin.validate();
  optimizer.validate();
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (stage_epochs < 1) throw ConfigError("stage_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(min_improvement >= 0.0)) throw ConfigError("min_improvement must be >= 0");
  validate_fractions(fractions);
  if (hidden_width < 1 || feature_dim < 1 || margin_hidden < 1) throw ConfigError("network widths must be >= 1");
  if (distribution_samples < 0) throw ConfigError("distribution_samples must be >= 0");
  if (data_path.empty()) data.validate();
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

void apply_override(TrainConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  config.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace pml
