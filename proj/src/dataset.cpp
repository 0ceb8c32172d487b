#include "pml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "pml/csv.hpp"
#include "pml/errors.hpp"

namespace pml {

std::vector<std::int64_t> Dataset::class_counts() const {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(std::max(classes, 0)), 0);
  for (int a : ages) ++counts[static_cast<std::size_t>(a)];
  return counts;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.classes = classes;
  out.features.resize(dim(), static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.features.col(static_cast<Index>(i)) = features.col(static_cast<Index>(indices[i]));
    out.ages.push_back(ages[indices[i]]);
    out.sigmas.push_back(sigmas[indices[i]]);
  }
  return out;
}

void OrdinalDatasetSpec::validate() const {
  if (classes < 3) throw ConfigError("dataset needs at least 3 classes");
  if (dim < 2) throw ConfigError("dataset needs feature dimension >= 2");
  if (n_max < 10) throw ConfigError("dataset needs n_max >= 10");
  if (!(tail_exponent >= 0.0) || !std::isfinite(tail_exponent)) throw ConfigError("tail exponent must be >= 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise sigma must be >= 0");
  if (!(class_spacing > 0.0) || !std::isfinite(class_spacing)) throw ConfigError("class spacing must be > 0");
  if (!(annotated_sigma > 0.0) || !std::isfinite(annotated_sigma)) throw ConfigError("annotated sigma must be > 0");
}

std::string_view to_string(HeadPlacement p) { return p == HeadPlacement::Middle ? "middle" : "first"; }

HeadPlacement parse_head_placement(std::string_view name) {
  if (name == "middle") return HeadPlacement::Middle;
  if (name == "first") return HeadPlacement::First;
  throw ConfigError("unknown head placement '" + std::string(name) + "'");
}

std::vector<int> rank_permutation(int classes, HeadPlacement placement) {
  std::vector<int> order;
  if (placement == HeadPlacement::First) {
    for (int j = 0; j < classes; ++j) order.push_back(j);
    return order;
  }
  // Middle-out: c/2, c/2 - 1, c/2 + 1, c/2 - 2, ...
  const int mid = classes / 2;
  order.push_back(mid);
  for (int step = 1; static_cast<int>(order.size()) < classes; ++step) {
    if (mid - step >= 0) order.push_back(mid - step);
    if (mid + step < classes) order.push_back(mid + step);
  }
  return order;
}

std::vector<std::int64_t> power_law_counts(int classes, int n_max, double tail_exponent) {
  std::vector<std::int64_t> counts;
  for (int r = 0; r < classes; ++r) {
    const double v = static_cast<double>(n_max) / std::pow(static_cast<double>(r + 1), tail_exponent);
    // Absorb pow() rounding so exact quotients are not bumped up by one.
    counts.push_back(static_cast<std::int64_t>(std::ceil(v - 1e-9 * v)));
  }
  return counts;
}

MatrixXd ordinal_centers(const OrdinalDatasetSpec& spec) {
  const Index c = spec.classes;
  const Index d = spec.dim;
  MatrixXd local = MatrixXd::Zero(d, c);
  for (Index j = 0; j < c; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(c - 1);
    local(0, j) = std::cos(std::numbers::pi * t);
    local(1, j) = std::sin(std::numbers::pi * t);
    if (d >= 3) local(2, j) = t;
  }
  const double adjacent = (local.col(1) - local.col(0)).norm();
  local *= spec.class_spacing / adjacent;

  std::mt19937_64 rng(spec.seed ^ 0x5eedc0ffee123457ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd gaussian(d, d);
  for (Index col = 0; col < d; ++col) {
    for (Index row = 0; row < d; ++row) gaussian(row, col) = normal(rng);
  }
  const MatrixXd rotation = Eigen::HouseholderQR<MatrixXd>(gaussian).householderQ();
  return rotation * local;
}

bool has_ordinal_geometry(const MatrixXd& centers) {
  const Index c = centers.cols();
  for (Index j = 0; j < c; ++j) {
    double adjacent = 0.0;
    if (j > 0) adjacent = std::max(adjacent, (centers.col(j) - centers.col(j - 1)).norm());
    if (j + 1 < c) adjacent = std::max(adjacent, (centers.col(j) - centers.col(j + 1)).norm());
    for (Index k = 0; k < c; ++k) {
      if (std::abs(k - j) >= 2 && (centers.col(j) - centers.col(k)).norm() <= adjacent) return false;
    }
  }
  return true;
}

Splits stratified_split(const Dataset& data, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(data.classes));
  for (std::size_t i = 0; i < data.size(); ++i) members[static_cast<std::size_t>(data.ages[i])].push_back(i);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Splits splits;
  for (auto& m : members) {
    std::shuffle(m.begin(), m.end(), rng);
    const std::size_t n = m.size();
    std::size_t n_val = 0;
    std::size_t n_test = 0;
    if (n >= 3) {
      n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(n))));
      n_test = n_val;
    } else if (n == 2) {
      n_test = 1;
    }
    const std::size_t n_train = n - n_val - n_test;
    splits.train.insert(splits.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_train));
    splits.validation.insert(splits.validation.end(), m.begin() + static_cast<std::ptrdiff_t>(n_train),
                             m.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    splits.test.insert(splits.test.end(), m.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), m.end());
  }
  std::sort(splits.train.begin(), splits.train.end());
  std::sort(splits.validation.begin(), splits.validation.end());
  std::sort(splits.test.begin(), splits.test.end());
  return splits;
}

GeneratedData generate(const OrdinalDatasetSpec& spec) {
  spec.validate();
  GeneratedData out;
  out.centers = ordinal_centers(spec);
  if (!has_ordinal_geometry(out.centers)) throw ConfigError("generated class centers lost their ordinal geometry");

  const auto by_rank = power_law_counts(spec.classes, spec.n_max, spec.tail_exponent);
  const auto order = rank_permutation(spec.classes, spec.head_placement);
  out.class_counts.assign(static_cast<std::size_t>(spec.classes), 0);
  for (std::size_t r = 0; r < order.size(); ++r) out.class_counts[static_cast<std::size_t>(order[r])] = by_rank[r];

  std::int64_t total = 0;
  for (auto n : out.class_counts) total += n;
  if (total == 0) throw ConfigError("dataset spec yields no samples");

  Dataset& data = out.data;
  data.classes = spec.classes;
  data.features.resize(spec.dim, total);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Index col = 0;
  for (int j = 0; j < spec.classes; ++j) {
    for (std::int64_t i = 0; i < out.class_counts[static_cast<std::size_t>(j)]; ++i, ++col) {
      for (Index d = 0; d < spec.dim; ++d) {
        data.features(d, col) = out.centers(d, j) + spec.noise_sigma * noise(rng);
      }
      data.ages.push_back(j);
      data.sigmas.push_back(spec.annotated_sigma);
    }
  }
  return out;
}

void write_csv(const Dataset& data, std::ostream& out) {
  out << "age,sigma";
  for (Index d = 0; d < data.dim(); ++d) out << ",f_" << d;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.ages[i] << ',' << format_real(data.sigmas[i]);
    for (Index d = 0; d < data.dim(); ++d) out << ',' << format_real(data.features(d, static_cast<Index>(i)));
    out << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  write_csv(data, out);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Dataset read_csv(std::istream& in, int classes_override) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "age" || header[1] != "sigma") {
    throw DataError("line 1: header must start with 'age,sigma,f_0'");
  }
  const Index dim = static_cast<Index>(header.size() - 2);
  for (Index d = 0; d < dim; ++d) {
    if (header[static_cast<std::size_t>(d + 2)] != "f_" + std::to_string(d)) {
      throw DataError("line 1: expected column 'f_" + std::to_string(d) + "'");
    }
  }

  std::vector<int> ages;
  std::vector<double> sigmas;
  std::vector<double> values;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw DataError("line " + std::to_string(line_no) + ": empty row");
    }
    const auto fields = split_fields(line);
    if (static_cast<Index>(fields.size()) != dim + 2) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim + 2) + " fields, got " +
                      std::to_string(fields.size()));
    }
    long long age = 0;
    if (!parse_int(fields[0], age)) throw DataError("line " + std::to_string(line_no) + ": age is not an integer");
    if (age < 0 || (classes_override > 0 && age >= classes_override)) {
      throw DataError("line " + std::to_string(line_no) + ": age " + std::to_string(age) + " out of range");
    }
    double sigma = 0.0;
    if (!parse_real(fields[1], sigma) || !(sigma > 0.0) || !std::isfinite(sigma)) {
      throw DataError("line " + std::to_string(line_no) + ": sigma must be a positive number");
    }
    for (Index d = 0; d < dim; ++d) {
      double v = 0.0;
      if (!parse_real(fields[static_cast<std::size_t>(d + 2)], v) || !std::isfinite(v)) {
        throw DataError("line " + std::to_string(line_no) + ": feature f_" + std::to_string(d) + " is not a finite number");
      }
      values.push_back(v);
    }
    ages.push_back(static_cast<int>(age));
    sigmas.push_back(sigma);
  }
  if (ages.empty()) throw DataError("dataset has a header but no rows");

  Dataset data;
  data.classes = classes_override > 0 ? classes_override : *std::max_element(ages.begin(), ages.end()) + 1;
  data.features = Eigen::Map<const MatrixXd>(values.data(), dim, static_cast<Index>(ages.size()));
  data.ages = std::move(ages);
  data.sigmas = std::move(sigmas);
  return data;
}

Dataset load_csv(const std::filesystem::path& path, int classes_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return read_csv(in, classes_override);
}

}  // namespace pml
