#include "pml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pml/errors.hpp"

namespace pml {

namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("metric inputs differ in length");
  if (a == 0) throw DataError("metrics on an empty split");
}

double group_mae(std::span<const double> predicted, std::span<const int> truth, const std::vector<int>& group) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (std::find(group.begin(), group.end(), truth[i]) == group.end()) continue;
    sum += std::abs(predicted[i] - truth[i]);
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

}  // namespace

double mean_absolute_error(std::span<const double> predicted, std::span<const int> truth) {
  check_sizes(predicted.size(), truth.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += std::abs(predicted[i] - truth[i]);
  return sum / static_cast<double>(truth.size());
}

double epsilon_error(std::span<const double> predicted, std::span<const int> truth,
                     std::span<const double> annotated_sigma) {
  check_sizes(predicted.size(), truth.size());
  check_sizes(annotated_sigma.size(), truth.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double diff = predicted[i] - truth[i];
    sum += 1.0 - std::exp(-diff * diff / (2.0 * annotated_sigma[i] * annotated_sigma[i]));
  }
  return sum / static_cast<double>(truth.size());
}

ClassGroups head_tail_groups(std::span<const std::int64_t> train_counts) {
  std::vector<int> order(train_counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return train_counts[static_cast<std::size_t>(a)] > train_counts[static_cast<std::size_t>(b)];
  });
  const std::size_t third = std::max<std::size_t>(1, train_counts.size() / 3);
  ClassGroups groups;
  groups.head.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(third, order.size())));
  std::vector<int> ascending(train_counts.size());
  std::iota(ascending.begin(), ascending.end(), 0);
  std::stable_sort(ascending.begin(), ascending.end(), [&](int a, int b) {
    return train_counts[static_cast<std::size_t>(a)] < train_counts[static_cast<std::size_t>(b)];
  });
  groups.tail.assign(ascending.begin(), ascending.begin() + static_cast<std::ptrdiff_t>(std::min(third, ascending.size())));
  return groups;
}

ErrorSummary summarize_errors(std::span<const double> predicted, std::span<const int> truth,
                              std::span<const double> annotated_sigma, int classes, const ClassGroups& groups) {
  ErrorSummary s;
  s.mae = mean_absolute_error(predicted, truth);
  s.epsilon_error = epsilon_error(predicted, truth, annotated_sigma);
  std::vector<double> sum(static_cast<std::size_t>(classes), 0.0);
  std::vector<std::size_t> n(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sum[static_cast<std::size_t>(truth[i])] += std::abs(predicted[i] - truth[i]);
    ++n[static_cast<std::size_t>(truth[i])];
  }
  for (std::size_t j = 0; j < sum.size(); ++j) {
    s.per_class_mae.push_back(n[j] == 0 ? std::numeric_limits<double>::quiet_NaN() : sum[j] / static_cast<double>(n[j]));
  }
  s.head_mae = group_mae(predicted, truth, groups.head);
  s.tail_mae = group_mae(predicted, truth, groups.tail);
  return s;
}

}  // namespace pml
