#pragma once

// Streaming per-class statistics over feature vectors: recursive class
// centers, a Welford-style intra-class accumulator built from cosine
// distances, and the matrix of cosine distances between centers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "pml/errors.hpp"
#include "pml/types.hpp"

namespace pml {

// 1 - a.b / (|a||b|), clamped to [0, 2]. A zero-norm argument gives 0 and
// sets *degenerate.
template <typename Scalar, typename A, typename B>
Scalar cosine_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                       bool* degenerate = nullptr) {
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) {
    if (degenerate) *degenerate = true;
    return Scalar(0);
  }
  const Scalar d = Scalar(1) - a.dot(b) / (na * nb);
  return std::clamp(d, Scalar(0), Scalar(2));
}

struct SnapshotTag {
  std::int64_t iteration = 0;
  int stage = 0;
};

// Row-wise concatenation [center, intra, inter] per class.
template <typename Scalar>
struct StatsSnapshot {
  Matrix<Scalar> values;  // classes x (dim + 1 + classes)
  Index dim = 0;
  SnapshotTag tag;

  Index classes() const { return values.rows(); }
  Index width() const { return values.cols(); }

  auto centers() const { return values.leftCols(dim); }
  auto intra() const { return values.col(dim); }
  auto inter() const { return values.rightCols(classes()); }

  static StatsSnapshot zeros(Index classes, Index dim) {
    return {Matrix<Scalar>::Zero(classes, dim + 1 + classes), dim, {}};
  }
};

template <typename Scalar>
Matrix<Scalar> residual(const StatsSnapshot<Scalar>& current, const StatsSnapshot<Scalar>& reference) {
  if (current.values.rows() != reference.values.rows() ||
      current.values.cols() != reference.values.cols() || current.dim != reference.dim) {
    throw ShapeError("snapshot residual: shapes " + std::to_string(current.values.rows()) + "x" +
                     std::to_string(current.values.cols()) + " and " +
                     std::to_string(reference.values.rows()) + "x" +
                     std::to_string(reference.values.cols()) + " differ");
  }
  return current.values - reference.values;
}

template <typename Scalar>
class ClassStatsBank {
 public:
  ClassStatsBank(Index classes, Index dim)
      : centers_(Matrix<Scalar>::Zero(classes, dim)),
        intra_accum_(Vector<Scalar>::Zero(classes)),
        inter_(Matrix<Scalar>::Zero(classes, classes)),
        counts_(static_cast<std::size_t>(classes), 0) {
    if (classes < 1 || dim < 1) throw DomainError("class stats need classes >= 1 and dim >= 1");
  }

  Index classes() const { return centers_.rows(); }
  Index dim() const { return centers_.cols(); }
  std::int64_t iteration() const { return iteration_; }
  std::int64_t count(Index j) const { return counts_[static_cast<std::size_t>(j)]; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t total_count() const {
    std::int64_t n = 0;
    for (auto c : counts_) n += c;
    return n;
  }
  const Matrix<Scalar>& centers() const { return centers_; }
  const Vector<Scalar>& intra_accumulator() const { return intra_accum_; }
  const Matrix<Scalar>& inter() const { return inter_; }

  // Number of times a zero-norm vector forced a cosine distance of 0.
  std::int64_t degenerate_distances() const { return degenerate_; }
  void reset_degenerate_counter() { degenerate_ = 0; }

  // Intra-class variance: accumulator / max(N_j, 1).
  Vector<Scalar> intra() const {
    Vector<Scalar> out(classes());
    for (Index j = 0; j < classes(); ++j) {
      out[j] = intra_accum_[j] / static_cast<Scalar>(std::max<std::int64_t>(count(j), 1));
    }
    return out;
  }

  // c_j += (x - c_j) / (N_j + 1); returns the center before the update.
  Vector<Scalar> update_center(Index j, const Vector<Scalar>& x) {
    check_sample(j, x);
    Vector<Scalar> before = centers_.row(j).transpose();
    auto& n = counts_[static_cast<std::size_t>(j)];
    centers_.row(j) += ((x - before) / static_cast<Scalar>(n + 1)).transpose();
    ++n;
    ++iteration_;
    return before;
  }

  // accumulator_j += d(x, c_before) * d(x, c_after). The first sample of a
  // class has no prior center and contributes zero.
  void update_intra(Index j, const Vector<Scalar>& x, const Vector<Scalar>& center_before,
                    const Vector<Scalar>& center_after) {
    check_sample(j, x);
    if (count(j) <= 1) return;
    bool degenerate = false;
    const Scalar before = cosine_distance<Scalar>(x, center_before, &degenerate);
    const Scalar after = cosine_distance<Scalar>(x, center_after, &degenerate);
    if (degenerate) ++degenerate_;
    intra_accum_[j] += before * after;
  }

  // psi_j = [d(c_j, c_0), ..., d(c_j, c_{c-1})] from the current centers.
  Vector<Scalar> inter_variance(Index j) const {
    check_class(j);
    Vector<Scalar> row(classes());
    for (Index k = 0; k < classes(); ++k) {
      row[k] = k == j ? Scalar(0) : cosine_distance<Scalar>(centers_.row(j), centers_.row(k));
    }
    return row;
  }

  // Full per-sample recursion: center, then inter-class row, then intra.
  void observe(Index j, const Vector<Scalar>& x) {
    const Vector<Scalar> before = update_center(j, x);
    refresh_inter(j);
    update_intra(j, x, before, centers_.row(j).transpose());
  }

  StatsSnapshot<Scalar> snapshot(int stage = 0) const {
    StatsSnapshot<Scalar> snap{Matrix<Scalar>(classes(), dim() + 1 + classes()), dim(),
                               {iteration_, stage}};
    snap.values.leftCols(dim()) = centers_;
    snap.values.col(dim()) = intra();
    snap.values.rightCols(classes()) = inter_;
    return snap;
  }

  void reset() {
    centers_.setZero();
    intra_accum_.setZero();
    inter_.setZero();
    std::fill(counts_.begin(), counts_.end(), 0);
  }

  // CSV rows: j, N_j, center..., intra, inter row...
  void write_csv(std::ostream& out) const;

 private:
  void check_class(Index j) const {
    if (j < 0 || j >= classes()) {
      throw RangeError("class " + std::to_string(j) + " outside [0, " + std::to_string(classes() - 1) +
                       "]");
    }
  }

  void check_sample(Index j, const Vector<Scalar>& x) const {
    check_class(j);
    if (x.size() != dim()) throw ShapeError(shape_message("class stats sample", dim(), x.size()));
    if (!x.allFinite()) throw DomainError("class stats sample has a non-finite component");
  }

  // Only c_j moved, so row j and column j are the only stale entries.
  void refresh_inter(Index j) {
    for (Index k = 0; k < classes(); ++k) {
      if (k == j) {
        inter_(j, j) = Scalar(0);
        continue;
      }
      bool degenerate = false;
      const Scalar d = cosine_distance<Scalar>(centers_.row(j), centers_.row(k), &degenerate);
      if (degenerate) ++degenerate_;
      inter_(j, k) = d;
      inter_(k, j) = d;
    }
  }

  Matrix<Scalar> centers_;
  Vector<Scalar> intra_accum_;
  Matrix<Scalar> inter_;
  std::vector<std::int64_t> counts_;
  std::int64_t iteration_ = 0;
  std::int64_t degenerate_ = 0;
};

}  // namespace pml

#include "pml/csv.hpp"

namespace pml {

template <typename Scalar>
void ClassStatsBank<Scalar>::write_csv(std::ostream& out) const {
  const StatsSnapshot<Scalar> snap = snapshot();
  out << "class,count";
  for (Index d = 0; d < dim(); ++d) out << ",center_" << d;
  out << ",intra";
  for (Index k = 0; k < classes(); ++k) out << ",inter_" << k;
  out << '\n';
  for (Index j = 0; j < classes(); ++j) {
    out << j << ',' << count(j);
    for (Index col = 0; col < snap.width(); ++col) out << ',' << format_real(snap.values(j, col));
    out << '\n';
  }
}

}  // namespace pml
