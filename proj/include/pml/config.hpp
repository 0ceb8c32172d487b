#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pml/dataset.hpp"
#include "pml/margin_engine.hpp"
#include "pml/optimizer.hpp"

namespace pml {

enum class TrainMode { Pml, Baseline };
enum class Decoder { Expectation, Argmax };

std::string_view to_string(TrainMode m);
std::string_view to_string(Decoder d);

struct TrainConfig {
  TrainMode mode = TrainMode::Pml;
  // Off removes the margin networks from the loss path entirely (plain
  // softmax cross-entropy), independently of lambda and beta.
  bool margins = true;
  bool curriculum = true;

  double label_sigma = 2.0;
  MarginMix mix;
  MarginConfig margin;

  OptimizerConfig optimizer;
  int batch_size = 32;
  int stage_epochs = 60;
  int patience = 5;
  double min_improvement = 1e-3;
  std::vector<double> fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  std::uint64_t seed = 1;
  Decoder decoder = Decoder::Expectation;

  int hidden_width = 32;
  int feature_dim = 16;
  int margin_hidden = 16;
  bool margin_zero_init = true;
  bool restat_each_epoch = false;
  int distribution_samples = 12;

  // Synthetic data, used when no dataset path is given.
  OrdinalDatasetSpec data;
  std::string data_path;
  std::string out_dir;

  // Baseline mode forces margins and curriculum off and gives the single
  // stage the same total epoch budget as the staged run.
  TrainConfig effective() const;
  int total_epoch_budget() const;

  void validate() const;
  void set(std::string_view key, std::string_view value);
  std::string to_text() const;
};

// Keys accepted by TrainConfig::set, in serialization order.
const std::vector<std::string>& config_keys();

TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

// "key=value" as given on the command line.
void apply_override(TrainConfig& config, std::string_view assignment);

std::vector<double> parse_real_list(std::string_view text);

}  // namespace pml
