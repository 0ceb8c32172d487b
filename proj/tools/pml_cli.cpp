// Command-line front end: generate, train, eval, gridsearch.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pml/config.hpp"
#include "pml/csv.hpp"
#include "pml/dataset.hpp"
#include "pml/errors.hpp"
#include "pml/metrics.hpp"
#include "pml/model.hpp"
#include "pml/trainer.hpp"

namespace {

struct TrainArgs {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::string mode;
  long long seed = -1;
  std::vector<std::string> overrides;
};

pml::TrainConfig resolve_config(const TrainArgs& args) {
  pml::TrainConfig config;
  if (!args.config_path.empty()) config = pml::load_config(args.config_path);
  for (const auto& o : args.overrides) pml::apply_override(config, o);
  if (!args.mode.empty()) config.set("mode", args.mode);
  if (args.seed >= 0) {
    config.seed = static_cast<std::uint64_t>(args.seed);
    config.data.seed = static_cast<std::uint64_t>(args.seed);
  }
  if (!args.data_path.empty()) config.data_path = args.data_path;
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  config.validate();
  return config;
}

void add_train_options(CLI::App* cmd, TrainArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (key = value lines)");
  cmd->add_option("--data", args.data_path, "Dataset CSV; synthetic data from the config if omitted");
  cmd->add_option("--out", args.out_dir, "Run directory");
  cmd->add_option("--mode", args.mode, "pml or baseline");
  cmd->add_option("--seed", args.seed, "Seed for training and synthetic data");
  cmd->add_option("--set", args.overrides, "Config override key=value (repeatable)");
}

int run_generate(const pml::OrdinalDatasetSpec& spec, const std::string& out_path) {
  const auto generated = pml::generate(spec);
  if (out_path.empty() || out_path == "-") {
    pml::write_csv(generated.data, std::cout);
  } else {
    pml::write_csv(generated.data, std::filesystem::path(out_path));
  }
  std::cerr << "class counts:";
  for (auto n : generated.class_counts) std::cerr << ' ' << n;
  std::cerr << '\n';
  return 0;
}

int run_train(const TrainArgs& args) {
  const pml::TrainConfig config = resolve_config(args);
  if (config.out_dir.empty()) throw pml::ConfigError("train needs --out or out_dir");
  pml::prepare_run_dir(config.out_dir);
  const pml::Dataset data = pml::load_or_generate(config);
  const pml::Splits splits = pml::stratified_split(data, config.seed);
  const pml::TrainResult result = pml::train(config, data, splits);
  pml::dump_artifacts(config.out_dir, config, result);
  std::cout << "epochs " << result.reports.size() << ", stage transitions " << result.stage_transitions << '\n'
            << "test mae " << pml::format_real(result.test.mae) << ", tail mae " << pml::format_real(result.test.tail_mae)
            << ", epsilon error " << pml::format_real(result.test.epsilon_error) << '\n';
  return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path, const std::string& decoder_name) {
  const pml::Model model = pml::load_model(std::filesystem::path(model_path));
  const pml::Dataset data = pml::load_csv(data_path, static_cast<int>(model.shape.classes));
  pml::Decoder decoder = pml::Decoder::Expectation;
  if (decoder_name == "argmax") decoder = pml::Decoder::Argmax;
  else if (decoder_name != "expectation") throw pml::ConfigError("decoder must be expectation or argmax");
  const auto groups = pml::head_tail_groups(data.class_counts());
  const auto summary = pml::evaluate(model, data, decoder, groups);
  std::cout << "samples,mae,head_mae,tail_mae,epsilon_error\n"
            << data.size() << ',' << pml::format_real(summary.mae) << ',' << pml::format_real(summary.head_mae) << ','
            << pml::format_real(summary.tail_mae) << ',' << pml::format_real(summary.epsilon_error) << '\n';
  return 0;
}

int run_gridsearch(const TrainArgs& args, const std::string& lambda_grid, const std::string& beta_grid) {
  const pml::TrainConfig config = resolve_config(args);
  const auto lambdas = pml::parse_real_list(lambda_grid);
  const auto betas = pml::parse_real_list(beta_grid);
  for (double v : lambdas) if (!(v >= 0.0)) throw pml::ConfigError("lambda grid values must be >= 0");
  for (double v : betas) if (!(v >= 0.0)) throw pml::ConfigError("beta grid values must be >= 0");
  if (!config.out_dir.empty()) pml::prepare_run_dir(config.out_dir);
  const pml::Dataset data = pml::load_or_generate(config);
  const pml::Splits splits = pml::stratified_split(data, config.seed);
  const auto points = pml::grid_search(config, data, splits, lambdas, betas);

  std::ostringstream table;
  table << "lambda,beta,val_mae,test_mae,test_tail_mae\n";
  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    table << pml::format_real(p.lambda) << ',' << pml::format_real(p.beta) << ',' << pml::format_real(p.val_mae) << ','
          << pml::format_real(p.test_mae) << ',' << pml::format_real(p.test_tail_mae) << '\n';
    if (p.val_mae < points[best].val_mae) best = i;
  }
  std::cout << table.str();
  if (!config.out_dir.empty()) {
    std::ofstream out(std::filesystem::path(config.out_dir) / "gridsearch.csv", std::ios::binary);
    if (!out) throw pml::DataError("cannot write gridsearch.csv");
    out << table.str();
  }
  std::cerr << "best by validation MAE: lambda " << pml::format_real(points[best].lambda) << ", beta "
            << pml::format_real(points[best].beta) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive margin loss training for long-tailed ordinal classification"};
  app.require_subcommand(1);

  pml::OrdinalDatasetSpec spec;
  std::string gen_out;
  std::string placement = "middle";
  long long gen_seed = 1;
  auto* gen = app.add_subcommand("generate", "Synthesize a long-tailed ordinal dataset as CSV");
  gen->add_option("--classes", spec.classes, "Class count")->capture_default_str();
  gen->add_option("--dim", spec.dim, "Feature dimension")->capture_default_str();
  gen->add_option("--n-max", spec.n_max, "Samples in the largest class")->capture_default_str();
  gen->add_option("--gamma", spec.tail_exponent, "Power-law tail exponent")->capture_default_str();
  gen->add_option("--noise", spec.noise_sigma, "Per-class sample spread")->capture_default_str();
  gen->add_option("--spacing", spec.class_spacing, "Distance between adjacent class centers")->capture_default_str();
  gen->add_option("--annotated-sigma", spec.annotated_sigma, "Annotated deviation per sample")->capture_default_str();
  gen->add_option("--head", placement, "Where the head classes sit: middle or first")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV path ('-' for stdout)");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model and write run artifacts");
  add_train_options(train, train_args);

  std::string model_path;
  std::string eval_data;
  std::string decoder = "expectation";
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a dataset CSV");
  eval->add_option("--model", model_path, "model.txt from a training run")->required();
  eval->add_option("--data", eval_data, "Dataset CSV")->required();
  eval->add_option("--decoder", decoder, "expectation or argmax")->capture_default_str();

  TrainArgs grid_args;
  std::string lambda_grid = "0,0.5,1";
  std::string beta_grid = "0,0.5,1";
  auto* grid = app.add_subcommand("gridsearch", "Train over a lambda x beta grid");
  add_train_options(grid, grid_args);
  grid->add_option("--lambda-grid", lambda_grid, "Comma-separated lambda values")->capture_default_str();
  grid->add_option("--beta-grid", beta_grid, "Comma-separated beta values")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(pml::ExitCode::Config);
  }

  try {
    if (*gen) {
      spec.head_placement = pml::parse_head_placement(placement);
      if (gen_seed < 0) throw pml::ConfigError("seed must be >= 0");
      spec.seed = static_cast<std::uint64_t>(gen_seed);
      return run_generate(spec, gen_out);
    }
    if (*train) return run_train(train_args);
    if (*eval) return run_eval(model_path, eval_data, decoder);
    if (*grid) return run_gridsearch(grid_args, lambda_grid, beta_grid);
  } catch (const pml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(pml::ExitCode::Config);
  } catch (const pml::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return static_cast<int>(pml::ExitCode::Numeric);
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return static_cast<int>(pml::ExitCode::Data);
  }
  return 0;
}
