#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pml/types.hpp"

namespace pml {

// Samples stored column-wise: features.col(i) belongs to ages[i].
struct Dataset {
  int classes = 0;
  MatrixXd features;  // dim x n
  std::vector<int> ages;
  std::vector<double> sigmas;  // annotated deviation per sample

  Index dim() const { return features.rows(); }
  std::size_t size() const { return ages.size(); }
  std::vector<std::int64_t> class_counts() const;
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

enum class HeadPlacement { Middle, First };

struct OrdinalDatasetSpec {
  int classes = 20;
  int dim = 8;
  int n_max = 200;
  double tail_exponent = 1.5;
  double noise_sigma = 0.6;
  double class_spacing = 1.0;  // distance between adjacent class centers
  double annotated_sigma = 3.0;
  HeadPlacement head_placement = HeadPlacement::Middle;
  std::uint64_t seed = 1;

  void validate() const;
};

// class_of_rank[r] = class holding the r-th largest count.
std::vector<int> rank_permutation(int classes, HeadPlacement placement);

// ceil(n_max * (rank + 1)^-gamma), indexed by rank.
std::vector<std::int64_t> power_law_counts(int classes, int n_max, double tail_exponent);

// Points on a half-turn helix, rotated into R^dim by a seeded orthogonal
// matrix. Distances grow with index gap, so adjacent classes are nearest.
MatrixXd ordinal_centers(const OrdinalDatasetSpec& spec);  // dim x classes

bool has_ordinal_geometry(const MatrixXd& centers);

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// 70/15/15 per class. Classes with at least 3 samples get at least one
// sample in each split; smaller classes fill train first, then test.
Splits stratified_split(const Dataset& data, std::uint64_t seed);

struct GeneratedData {
  Dataset data;
  std::vector<std::int64_t> class_counts;
  MatrixXd centers;
};

GeneratedData generate(const OrdinalDatasetSpec& spec);

// CSV format: header `age,sigma,f_0,...,f_{D-1}`, LF line endings.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_csv(std::istream& in, int classes_override = 0);
Dataset load_csv(const std::filesystem::path& path, int classes_override = 0);

std::string_view to_string(HeadPlacement p);
HeadPlacement parse_head_placement(std::string_view name);

}  // namespace pml
