#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pml {

double mean_absolute_error(std::span<const double> predicted, std::span<const int> truth);

// Mean over samples of 1 - exp(-(pred - truth)^2 / (2 sigma^2)); lies in [0, 1].
double epsilon_error(std::span<const double> predicted, std::span<const int> truth,
                     std::span<const double> annotated_sigma);

struct ClassGroups {
  std::vector<int> head;  // top third by training count
  std::vector<int> tail;  // bottom third by training count
};

// Classes sorted by training count (ties by index); each group holds
// max(1, classes / 3) classes.
ClassGroups head_tail_groups(std::span<const std::int64_t> train_counts);

struct ErrorSummary {
  double mae = 0.0;
  double epsilon_error = 0.0;
  std::vector<double> per_class_mae;  // NaN where a class has no samples
  double head_mae = 0.0;              // sample-weighted over head-class samples; NaN if none
  double tail_mae = 0.0;
};

ErrorSummary summarize_errors(std::span<const double> predicted, std::span<const int> truth,
                              std::span<const double> annotated_sigma, int classes,
                              const ClassGroups& groups);

}  // namespace pml
