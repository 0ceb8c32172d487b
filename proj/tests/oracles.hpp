#pragma once

// Independent reference computations used only by the tests. They use plain
// loops over std::vector and share no code path with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major

inline Vec affine(const Mat& w, const Vec& b, const Vec& x) {
  Vec out(w.size(), 0.0);
  for (std::size_t r = 0; r < w.size(); ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < x.size(); ++c) acc += w[r][c] * x[c];
    out[r] = acc;
  }
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec softmax(const Vec& s) {
  const double m = *std::max_element(s.begin(), s.end());
  Vec e(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) z += (e[i] = std::exp(s[i] - m));
  for (auto& v : e) v /= z;
  return e;
}

inline double cross_entropy(const Vec& target, const Vec& predicted) {
  double s = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (target[k] != 0.0) s += -target[k] * std::log(predicted[k]);
  }
  return s;
}

// Margined one-vs-all component evaluated straight from its definition.
inline double margined_component(const Vec& s, const Vec& m, std::size_t k) {
  const double own = std::exp(s[k] - m[k]);
  double rest = 0.0;
  for (std::size_t t = 0; t < s.size(); ++t) if (t != k) rest += std::exp(s[t]);
  return own / (own + rest);
}

inline double cosine_distance(const Vec& a, const Vec& b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(1.0 - dot(a, b) / (na * nb), 0.0, 2.0);
}

// Mean of the samples of each class, computed in two passes.
inline Mat batch_means(const std::vector<Vec>& xs, const std::vector<int>& labels, int classes) {
  const std::size_t d = xs.front().size();
  Mat sum(static_cast<std::size_t>(classes), Vec(d, 0.0));
  std::vector<long> n(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto& row = sum[static_cast<std::size_t>(labels[i])];
    for (std::size_t k = 0; k < d; ++k) row[k] += xs[i][k];
    ++n[static_cast<std::size_t>(labels[i])];
  }
  for (std::size_t j = 0; j < sum.size(); ++j) {
    if (n[j] > 0) for (auto& v : sum[j]) v /= static_cast<double>(n[j]);
  }
  return sum;
}

// Replays the intra-class accumulator term by term: the center before and
// after sample i of class j are the two-pass means of that class's first
// (m - 1) and m samples.
inline Vec intra_replay(const std::vector<Vec>& xs, const std::vector<int>& labels, int classes) {
  Vec acc(static_cast<std::size_t>(classes), 0.0);
  std::vector<std::vector<Vec>> seen(static_cast<std::size_t>(classes));
  auto mean = [](const std::vector<Vec>& pts) {
    Vec m(pts.front().size(), 0.0);
    for (const auto& p : pts) for (std::size_t k = 0; k < m.size(); ++k) m[k] += p[k];
    for (auto& v : m) v /= static_cast<double>(pts.size());
    return m;
  };
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto& pts = seen[static_cast<std::size_t>(labels[i])];
    if (pts.empty()) {
      pts.push_back(xs[i]);
      continue;
    }
    const Vec before = mean(pts);
    pts.push_back(xs[i]);
    const Vec after = mean(pts);
    acc[static_cast<std::size_t>(labels[i])] += cosine_distance(xs[i], before) * cosine_distance(xs[i], after);
  }
  return acc;
}

inline double discretized_gaussian(double mu, double sigma, int k, double m_max) {
  const double d = k - mu;
  return m_max * std::exp(-(d * d) / (2.0 * sigma * sigma));
}

// Central difference of f at values[i].
inline double central_difference(double& value, const std::function<double()>& f, double step) {
  const double saved = value;
  value = saved + step;
  const double up = f();
  value = saved - step;
  const double down = f();
  value = saved;
  return (up - down) / (2.0 * step);
}

// |a - n| / max(|a|, |n|, floor). A central difference at step h carries
// about eps * |loss| / h of rounding noise (~1e-10 here), so gradients below
// the floor are compared in absolute terms.
inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace oracle
