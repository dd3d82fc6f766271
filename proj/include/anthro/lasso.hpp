#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anthro/design.hpp"
#include "anthro/errors.hpp"
#include "anthro/ols.hpp"
#include "anthro/rng.hpp"

namespace anthro {

inline double soft_threshold(double z, double lambda) {
  double mag = std::abs(z) - lambda;
  return mag > 0.0 ? (z > 0.0 ? mag : -mag) : 0.0;
}

struct LassoFit {
  Eigen::VectorXd coefficients;  // original scale, one per input column
  double intercept = 0.0;
  std::vector<std::string> names;
  std::vector<int> dropped_columns;  // zero-variance inputs, coefficient fixed 0

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    return (X * coefficients).array() + intercept;
  }
};

namespace detail {

struct Standardized {
  Eigen::MatrixXd Z;           // standardized columns; zero-variance cols zeroed
  Eigen::VectorXd col_mean;
  Eigen::VectorXd col_scale;   // population SD; 0 marks a dropped column
  double y_mean = 0.0;
  Eigen::VectorXd yc;
  std::vector<int> dropped;
};

inline Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int n = int(X.rows()), p = int(X.cols());
  Standardized s;
  s.Z.resize(n, p);
  s.col_mean.resize(p);
  s.col_scale.resize(p);
  for (int j = 0; j < p; ++j) {
    double m = X.col(j).mean();
    double var = (X.col(j).array() - m).square().sum() / double(n);
    s.col_mean[j] = m;
    if (var > 0.0) {
      s.col_scale[j] = std::sqrt(var);
      s.Z.col(j) = (X.col(j).array() - m) / s.col_scale[j];
    } else {
      s.col_scale[j] = 0.0;
      s.Z.col(j).setZero();
      s.dropped.push_back(j);
    }
  }
  s.y_mean = y.mean();
  s.yc = y.array() - s.y_mean;
  return s;
}

// Cyclic coordinate descent on the standardized problem
//   (1/2N) ||yc - Z psi||^2 + lambda sum |psi_j|.
// With unit-variance columns the update is the exact soft-threshold
//   psi_j <- S((1/N) z_j'(r + z_j psi_j), lambda).
inline Eigen::VectorXd coordinate_descent(const Standardized& s, double lambda,
                                          Eigen::VectorXd psi) {
  const int n = int(s.Z.rows()), p = int(s.Z.cols());
  Eigen::VectorXd r = s.yc - s.Z * psi;
  constexpr double kTol = 1e-9;
  constexpr int kMaxSweeps = 100000;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      if (s.col_scale[j] == 0.0) continue;
      double rho = s.Z.col(j).dot(r) / double(n) + psi[j];
      double next = soft_threshold(rho, lambda);
      double delta = next - psi[j];
      if (delta != 0.0) {
        r -= s.Z.col(j) * delta;
        psi[j] = next;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < kTol) return psi;
  }
  throw NumericalError("lasso coordinate descent did not converge");
}

inline LassoFit to_original_scale(const Standardized& s, const Eigen::VectorXd& psi,
                                  const std::vector<std::string>& names) {
  LassoFit fit;
  fit.names = names;
  fit.dropped_columns = s.dropped;
  fit.coefficients.resize(psi.size());
  double dot = 0.0;
  for (int j = 0; j < psi.size(); ++j) {
    fit.coefficients[j] = s.col_scale[j] > 0.0 ? psi[j] / s.col_scale[j] : 0.0;
    dot += fit.coefficients[j] * s.col_mean[j];
  }
  fit.intercept = s.y_mean - dot;
  return fit;
}

}  // namespace detail

// Columns of X are raw covariates (no intercept column); the intercept is
// implicit and unpenalized.
inline LassoFit lasso_cd(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                         const Eigen::VectorXd& y, double lambda) {
  if (X.rows() != y.size() || X.rows() == 0) throw DataError("lasso: shape mismatch");
  if (int(names.size()) != X.cols()) throw DataError("lasso: names mismatch");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!X.allFinite() || !y.allFinite())
    throw DataError("lasso: non-finite values in input");
  detail::Standardized s = detail::standardize(X, y);
  Eigen::VectorXd psi =
      detail::coordinate_descent(s, lambda, Eigen::VectorXd::Zero(X.cols()));
  return detail::to_original_scale(s, psi, names);
}

// Smallest lambda that zeroes every penalized coefficient.
inline double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  detail::Standardized s = detail::standardize(X, y);
  double lmax = 0.0;
  for (int j = 0; j < X.cols(); ++j)
    if (s.col_scale[j] > 0.0)
      lmax = std::max(lmax, std::abs(s.Z.col(j).dot(s.yc)) / double(X.rows()));
  return lmax;
}

// 100 log-spaced values from lambda_max down to 1e-4 * lambda_max.
inline Eigen::VectorXd lasso_lambda_grid(double lambda_max, int count = 100,
                                         double min_ratio = 1e-4) {
  if (count < 2) throw ConfigError("lambda grid needs at least 2 points");
  if (!(lambda_max > 0.0)) throw ConfigError("lambda_max must be positive");
  Eigen::VectorXd grid(count);
  double lo = std::log(lambda_max * min_ratio), hi = std::log(lambda_max);
  for (int i = 0; i < count; ++i)
    grid[i] = std::exp(hi + (lo - hi) * double(i) / double(count - 1));
  return grid;
}

struct LassoResult {
  Eigen::VectorXd lambda_grid;      // descending
  Eigen::MatrixXd coefficient_path; // p x L, original scale, full-data fits
  Eigen::VectorXd intercept_path;   // L
  Eigen::VectorXd cv_mse;           // mean held-out MSE per lambda
  Eigen::VectorXd cv_se;            // SE of the fold MSEs per lambda
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
  std::vector<int> active_set;      // nonzero coefficients at lambda_1se
  std::vector<std::string> names;

  int index_of_lambda(double lambda) const {
    for (int i = 0; i < lambda_grid.size(); ++i)
      if (lambda_grid[i] == lambda) return i;
    throw DataError("lambda not on grid");
  }
};

// K-fold cross-validated lasso path. Fold membership comes from one seeded
// shuffle; per-fold standardization is recomputed inside lasso_cd, so no
// held-out information leaks into the fit.
inline LassoResult lasso_cv(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& lambda_grid,
                            int k = 10, std::uint64_t seed = 1) {
  if (lambda_grid.size() == 0) throw ConfigError("empty lambda grid");
  const int n = int(X.rows());
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  if (n < k) throw DataError("cross-validation needs n >= k");

  // Descending grid for warm starts.
  std::vector<int> order(lambda_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return lambda_grid[a] > lambda_grid[b]; });

  LassoResult res;
  res.names = names;
  res.lambda_grid.resize(lambda_grid.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    res.lambda_grid[i] = lambda_grid[order[i]];
  const int L = int(res.lambda_grid.size());

  std::vector<int> fold(n);
  {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_stream(seed, 0x43564c41ULL));
    rng.shuffle(idx);
    for (int i = 0; i < n; ++i) fold[idx[i]] = i % k;
  }

  Eigen::MatrixXd fold_mse(k, L);
  for (int f = 0; f < k; ++f) {
    std::vector<int> train_rows, test_rows;
    for (int i = 0; i < n; ++i)
      (fold[i] == f ? test_rows : train_rows).push_back(i);
    Eigen::MatrixXd Xtr(train_rows.size(), X.cols()), Xte(test_rows.size(), X.cols());
    Eigen::VectorXd ytr(train_rows.size()), yte(test_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      Xtr.row(i) = X.row(train_rows[i]);
      ytr[i] = y[train_rows[i]];
    }
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      Xte.row(i) = X.row(test_rows[i]);
      yte[i] = y[test_rows[i]];
    }
    detail::Standardized s = detail::standardize(Xtr, ytr);
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(X.cols());
    for (int l = 0; l < L; ++l) {
      psi = detail::coordinate_descent(s, res.lambda_grid[l], psi);
      LassoFit fit = detail::to_original_scale(s, psi, names);
      fold_mse(f, l) = (yte - fit.predict(Xte)).squaredNorm() / double(yte.size());
    }
  }

  res.cv_mse.resize(L);
  res.cv_se.resize(L);
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd col = fold_mse.col(l);
    double m = col.mean();
    res.cv_mse[l] = m;
    res.cv_se[l] = std::sqrt((col.array() - m).square().sum() / double(k - 1)) /
                   std::sqrt(double(k));
  }

  // Full-data path with warm starts.
  detail::Standardized s_full = detail::standardize(X, y);
  res.coefficient_path.resize(X.cols(), L);
  res.intercept_path.resize(L);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(X.cols());
  for (int l = 0; l < L; ++l) {
    psi = detail::coordinate_descent(s_full, res.lambda_grid[l], psi);
    LassoFit fit = detail::to_original_scale(s_full, psi, names);
    res.coefficient_path.col(l) = fit.coefficients;
    res.intercept_path[l] = fit.intercept;
  }

  // lambda_min: largest lambda attaining the minimal CV MSE (grid descends,
  // strict improvement keeps the first/largest). lambda_1se: largest lambda
  // whose CV MSE is within one SE of the minimum.
  int min_idx = 0;
  for (int l = 1; l < L; ++l)
    if (res.cv_mse[l] < res.cv_mse[min_idx]) min_idx = l;
  res.lambda_min = res.lambda_grid[min_idx];
  double threshold = res.cv_mse[min_idx] + res.cv_se[min_idx];
  int idx_1se = min_idx;
  for (int l = 0; l < L; ++l)
    if (res.cv_mse[l] <= threshold) {
      idx_1se = l;
      break;
    }
  res.lambda_1se = res.lambda_grid[idx_1se];

  for (int j = 0; j < X.cols(); ++j)
    if (res.coefficient_path(j, idx_1se) != 0.0) res.active_set.push_back(j);
  return res;
}

// OLS refit on the selected support plus intercept.
inline RegressionResult post_lasso(const Eigen::MatrixXd& X,
                                   const std::vector<std::string>& names,
                                   const Eigen::VectorXd& y,
                                   const std::vector<int>& active_set) {
  DesignBuilder b(int(X.rows()));
  b.intercept();
  for (int j : active_set) {
    if (j < 0 || j >= X.cols()) throw DataError("active set index out of range");
    b.add(names[j], X.col(j));
  }
  return ols_fit(b.build(), y);
}

}  // namespace anthro
