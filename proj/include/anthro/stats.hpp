#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "anthro/errors.hpp"

namespace anthro {

inline double mean(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw DataError("mean of empty vector");
  return x.mean();
}

// Sample variance, n-1 denominator.
inline double variance(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw DataError("variance needs at least 2 values");
  double m = x.mean();
  return (x.array() - m).square().sum() / double(x.size() - 1);
}

inline double stddev(const Eigen::VectorXd& x) { return std::sqrt(variance(x)); }

// Type-7 (linear interpolation) quantile on a copy of the data.
inline double quantile(const Eigen::VectorXd& x, double p) {
  if (x.size() == 0) throw DataError("quantile of empty vector");
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  if (p <= 0.0) return v.front();
  if (p >= 1.0) return v.back();
  double h = (double(v.size()) - 1.0) * p;
  std::size_t lo = std::size_t(std::floor(h));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double w = h - double(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

inline double median(const Eigen::VectorXd& x) { return quantile(x, 0.5); }

inline double iqr(const Eigen::VectorXd& x) {
  return quantile(x, 0.75) - quantile(x, 0.25);
}

inline double correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DataError("correlation needs two equal-length vectors, n >= 2");
  double mx = x.mean(), my = y.mean();
  Eigen::ArrayXd dx = x.array() - mx, dy = y.array() - my;
  double sxy = (dx * dy).sum();
  double sxx = dx.square().sum(), syy = dy.square().sum();
  if (sxx <= 0.0 || syy <= 0.0)
    throw DataError("correlation undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace anthro
