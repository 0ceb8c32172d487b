#include "pml/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "pml/csv.hpp"

namespace pml {

double imbalance_ratio(std::span<const std::int64_t> counts) {
  std::int64_t hi = 0;
  std::int64_t lo = 0;
  for (auto n : counts) {
    if (n <= 0) continue;
    hi = std::max(hi, n);
    lo = lo == 0 ? n : std::min(lo, n);
  }
  return lo == 0 ? 1.0 : static_cast<double>(hi) / static_cast<double>(lo);
}

void validate_fractions(std::span<const double> fractions) {
  if (fractions.empty()) throw ConfigError("curriculum needs at least one fraction");
  double prev = 0.0;
  for (double f : fractions) {
    if (!(f > prev) || f > 1.0) {
      throw ConfigError("curriculum fractions must be strictly ascending within (0, 1]");
    }
    prev = f;
  }
  if (fractions.back() != 1.0) throw ConfigError("the last curriculum fraction must be 1.0");
}

CurriculumPlan build_plan(std::span<const int> labels, int classes, std::span<const double> fractions,
                          std::uint64_t seed) {
  validate_fractions(fractions);
  if (classes < 1) throw ConfigError("curriculum needs at least one class");

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= classes) throw RangeError("curriculum label " + std::to_string(y) + " out of range");
    members[static_cast<std::size_t>(y)].push_back(i);
  }
  if (labels.empty()) throw DataError("curriculum needs at least one sample");

  CurriculumPlan plan;
  plan.fractions.assign(fractions.begin(), fractions.end());
  plan.seed = seed;
  plan.rank.assign(static_cast<std::size_t>(classes), -1);
  for (const auto& m : members) plan.class_counts.push_back(static_cast<std::int64_t>(m.size()));

  for (int j = 0; j < classes; ++j) {
    if (plan.class_counts[static_cast<std::size_t>(j)] > 0) plan.order.push_back(j);
  }
  std::stable_sort(plan.order.begin(), plan.order.end(), [&](int a, int b) {
    return plan.class_counts[static_cast<std::size_t>(a)] < plan.class_counts[static_cast<std::size_t>(b)];
  });
  for (std::size_t r = 0; r < plan.order.size(); ++r) plan.rank[static_cast<std::size_t>(plan.order[r])] = static_cast<int>(r);

  // One seeded permutation per class; every stage takes a prefix of it.
  std::mt19937_64 rng(seed);
  for (auto& m : members) std::shuffle(m.begin(), m.end(), rng);

  const auto nonempty = static_cast<double>(plan.order.size());
  for (double f : fractions) {
    CurriculumStage stage;
    stage.fraction = f;
    stage.dividing_rank = std::max(0, static_cast<int>(std::ceil(f * nonempty - 1e-9)) - 1);
    stage.cap = plan.class_counts[static_cast<std::size_t>(plan.order[static_cast<std::size_t>(stage.dividing_rank)])];
    stage.retained.assign(static_cast<std::size_t>(classes), 0);
    for (int j = 0; j < classes; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const int r = plan.rank[ju];
      if (r < 0) continue;
      const std::int64_t keep = r <= stage.dividing_rank ? plan.class_counts[ju]
                                                         : std::min(plan.class_counts[ju], stage.cap);
      stage.retained[ju] = keep;
      stage.sample_indices.insert(stage.sample_indices.end(), members[ju].begin(),
                                  members[ju].begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::sort(stage.sample_indices.begin(), stage.sample_indices.end());
    stage.imbalance_ratio = imbalance_ratio(stage.retained);
    plan.stages.push_back(std::move(stage));
  }
  return plan;
}

CurriculumPlan build_plan_from_counts(std::span<const std::int64_t> counts, std::span<const double> fractions,
                                      std::uint64_t seed) {
  std::vector<int> labels;
  for (std::size_t j = 0; j < counts.size(); ++j) labels.insert(labels.end(), static_cast<std::size_t>(counts[j]), static_cast<int>(j));
  return build_plan(labels, static_cast<int>(counts.size()), fractions, seed);
}

CurriculumPlan full_plan(std::span<const int> labels, int classes) {
  const double whole[] = {1.0};
  return build_plan(labels, classes, whole, 0);
}

StageDecision decide_stage(const StageProgress& progress, std::span<const double> history) {
  const bool last = progress.stage_index + 1 >= progress.stage_count;
  if (progress.epochs_in_stage >= progress.epoch_budget) return last ? StageDecision::Finish : StageDecision::Advance;
  if (last || history.empty()) return StageDecision::Continue;

  std::size_t best_at = 0;
  double best = history[0];
  for (std::size_t e = 1; e < history.size(); ++e) {
    if (history[e] < best - progress.min_improvement) {
      best = history[e];
      best_at = e;
    }
  }
  const auto stale = static_cast<int>(history.size() - best_at);
  return stale >= progress.patience ? StageDecision::Advance : StageDecision::Continue;
}

void CurriculumPlan::write_csv(std::ostream& out) const {
  out << "stage,class,rank,retained_count,original_count,imbalance_ratio\n";
  for (std::size_t s = 0; s < stages.size(); ++s) {
    for (std::size_t j = 0; j < class_counts.size(); ++j) {
      out << s + 1 << ',' << j << ',' << rank[j] << ',' << stages[s].retained[j] << ',' << class_counts[j] << ','
          << format_real(stages[s].imbalance_ratio) << '\n';
    }
  }
}

}  // namespace pml
