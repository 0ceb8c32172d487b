#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pml/class_stats.hpp"
#include "pml/config.hpp"
#include "pml/curriculum.hpp"
#include "pml/dataset.hpp"
#include "pml/margin_engine.hpp"
#include "pml/metrics.hpp"
#include "pml/model.hpp"

namespace pml {

struct LossSettings {
  double label_sigma = 2.0;
  MarginMix mix;
  MarginConfig margin;
  bool margins = true;

  static LossSettings from(const TrainConfig& config);
};

struct BatchObjective {
  double loss = 0.0;            // mean over the batch
  ModelGradient grad;
  MatrixXd features;            // feature_dim x batch
  MatrixXd logits;              // classes x batch
  MatrixXd d_logits;            // classes x batch
  std::optional<OrdinalMargins<double>> ordinal;
  std::optional<VariationalMargin<double>> variational;
};

// Loss and gradients of one batch. The statistics snapshot and residual are
// treated as constants: no gradient flows into them.
BatchObjective batch_objective(const Model& model, const MatrixXd& inputs, std::span<const int> ages,
                               const StatsSnapshot<double>& stats, const MatrixXd& delta,
                               const LossSettings& settings);

// Softmax over plain logits, one column per sample; margins play no part.
MatrixXd predict_distributions(const Model& model, const MatrixXd& inputs);
std::vector<double> predict_ages(const Model& model, const MatrixXd& inputs, Decoder decoder);

ErrorSummary evaluate(const Model& model, const Dataset& split, Decoder decoder, const ClassGroups& groups);

struct EpochReport {
  int stage = 0;  // 1-based
  int epoch = 0;  // 1-based, global
  int stage_epoch = 0;
  double train_loss = 0.0;
  double train_mae = 0.0;
  ErrorSummary validation;
  double imbalance_ratio = 1.0;
  std::int64_t degenerate_distances = 0;
};

struct MarginDumpRow {
  int epoch = 0;
  int probe_class = 0;
  VectorXd mu;
  VectorXd sigma;
  VectorXd variational;
  VectorXd probe_margins;
};

struct TrainResult {
  Model model;
  std::vector<EpochReport> reports;
  std::vector<double> step_losses;
  std::vector<MarginDumpRow> margin_dumps;
  ErrorSummary test;
  ClassGroups groups;
  CurriculumPlan plan;
  ClassStatsBank<double> stats{1, 1};
  int stage_transitions = 0;
  int instructor_freezes = 0;
  MatrixXd test_distributions;  // classes x K
  std::vector<int> test_distribution_ages;
};

// Splits are positions into data. Throws ConfigError, DataError or
// NumericError.
TrainResult train(const TrainConfig& config, const Dataset& data, const Splits& splits);

// Dataset from config.data_path, or generated from config.data.
Dataset load_or_generate(const TrainConfig& config);

// Creates the directory and checks it is writable.
void prepare_run_dir(const std::filesystem::path& dir);

// metrics.csv, margins.csv, stats.csv, distributions.csv, config.txt,
// plus test_metrics.csv, curriculum.csv and model.txt.
void dump_artifacts(const std::filesystem::path& dir, const TrainConfig& config, const TrainResult& result);

void write_metrics_csv(std::ostream& out, const std::vector<EpochReport>& reports, int classes);

struct GridPoint {
  double lambda = 0.0;
  double beta = 0.0;
  double val_mae = 0.0;
  double test_mae = 0.0;
  double test_tail_mae = 0.0;
};

std::vector<GridPoint> grid_search(const TrainConfig& config, const Dataset& data, const Splits& splits,
                                   std::span<const double> lambdas, std::span<const double> betas);

}  // namespace pml
