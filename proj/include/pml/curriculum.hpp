#pragma once

// Nested balanced-to-imbalanced curricula. Classes are ranked by ascending
// sample count; stage i keeps every sample of the classes ranked up to its
// dividing rank and caps every higher-ranked class at the count of the
// dividing class. Subsamples extend each other from stage to stage.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "pml/class_stats.hpp"
#include "pml/errors.hpp"

namespace pml {

struct CurriculumStage {
  double fraction = 1.0;
  int dividing_rank = 0;                    // over nonempty classes, 0-based
  std::int64_t cap = 0;                     // count of the dividing class
  std::vector<std::int64_t> retained;       // per class
  std::vector<std::size_t> sample_indices;  // ascending positions into the label list
  double imbalance_ratio = 1.0;
};

struct CurriculumPlan {
  std::vector<double> fractions;
  std::vector<std::int64_t> class_counts;
  std::vector<int> order;  // order[r] = class at ascending rank r (nonempty classes only)
  std::vector<int> rank;   // rank[j], or -1 for an empty class
  std::vector<CurriculumStage> stages;
  std::uint64_t seed = 0;

  std::size_t stage_count() const { return stages.size(); }
  int classes() const { return static_cast<int>(class_counts.size()); }

  // stage, class, rank, retained_count, original_count, imbalance_ratio
  void write_csv(std::ostream& out) const;
};

// max count / min nonzero count; 1 for an all-empty vector.
double imbalance_ratio(std::span<const std::int64_t> counts);

void validate_fractions(std::span<const double> fractions);

CurriculumPlan build_plan(std::span<const int> labels, int classes, std::span<const double> fractions,
                          std::uint64_t seed);

// Convenience form for tests: samples are laid out class by class.
CurriculumPlan build_plan_from_counts(std::span<const std::int64_t> counts, std::span<const double> fractions,
                                      std::uint64_t seed);

// A single stage holding the whole training set.
CurriculumPlan full_plan(std::span<const int> labels, int classes);

enum class StageDecision { Continue, Advance, Finish };

struct StageProgress {
  int stage_index = 0;  // 0-based
  int stage_count = 1;
  int epochs_in_stage = 0;
  int epoch_budget = 1;
  int patience = 5;
  double min_improvement = 1e-3;
};

// Advance once the validation MAE has gone `patience` epochs (counting the
// epoch that set the best value) without improving by more than
// min_improvement, or once the epoch budget is spent. The final stage has
// nothing to advance to and finishes only when its budget is spent.
StageDecision decide_stage(const StageProgress& progress, std::span<const double> val_mae_history);

// Reference snapshot used for the variational residual.
template <typename Scalar>
struct InstructorState {
  std::optional<StatsSnapshot<Scalar>> v_pre;
  int stage_index = 0;
  int freezes = 0;

  void freeze(StatsSnapshot<Scalar> snapshot) {
    v_pre = std::move(snapshot);
    ++freezes;
  }
};

// Stage 0: current minus the previous iteration. Later stages: current minus
// the frozen instructor of the previous stage.
template <typename Scalar>
Matrix<Scalar> stage_reference(const InstructorState<Scalar>& instructor, const StatsSnapshot<Scalar>& current,
                               const StatsSnapshot<Scalar>& previous_iteration) {
  if (instructor.stage_index == 0) return residual(current, previous_iteration);
  if (!instructor.v_pre) {
    throw StateError("stage " + std::to_string(instructor.stage_index) + " has no frozen instructor snapshot");
  }
  return residual(current, *instructor.v_pre);
}

}  // namespace pml
