#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include "anthro/design.hpp"
#include "anthro/errors.hpp"
#include "anthro/rng.hpp"
#include "anthro/stats.hpp"

namespace anthro {

struct RegressionResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd se;        // bootstrap SDs; NaN until inference is run
  Eigen::VectorXd ci_lower;  // 90% percentile interval
  Eigen::VectorXd ci_upper;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double f_statistic = 0.0;
  double p_value = 1.0;
  int n = 0;
  int bootstrap_replicates = 0;

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return int(i);
    throw DataError("coefficient not found: " + name);
  }
  double coef(const std::string& name) const { return coefficients[index_of(name)]; }
};

namespace detail {

inline constexpr double kRankTolerance = 1e-10;

// Rank check on the singular values of the QR factor R (same singular values
// as X). Returns the offending column names when deficient.
inline void check_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                       const DesignMatrix& X) {
  const int p = X.p();
  Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  const auto& sv = svd.singularValues();
  double smax = sv[0];
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > kRankTolerance * smax) ++rank;
  if (rank == p) return;
  std::string offenders;
  for (int i = rank; i < p; ++i) {
    if (!offenders.empty()) offenders += ", ";
    offenders += X.names[qr.colsPermutation().indices()[i]];
  }
  throw NumericalError("design matrix is rank deficient; offending columns: " +
                       offenders);
}

}  // namespace detail

// Least-squares point estimates via rank-revealing QR. Reports adjusted R^2
// and the F statistic against the constant-only model, with k counting the
// non-intercept regressors.
inline RegressionResult ols_fit(const DesignMatrix& X, const Eigen::VectorXd& y) {
  X.validate();
  if (!y.allFinite()) throw DataError("response contains non-finite values");
  if (y.size() != X.n()) throw DataError("response length mismatch");
  if (X.n() <= X.p())
    throw DataError("OLS needs more observations than covariates (n=" +
                    std::to_string(X.n()) + ", p=" + std::to_string(X.p()) + ")");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.values);
  detail::check_rank(qr, X);

  RegressionResult res;
  res.names = X.names;
  res.n = X.n();
  res.coefficients = qr.solve(y);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.se = Eigen::VectorXd::Constant(X.p(), nan);
  res.ci_lower = Eigen::VectorXd::Constant(X.p(), nan);
  res.ci_upper = Eigen::VectorXd::Constant(X.p(), nan);

  Eigen::VectorXd resid = y - X.values * res.coefficients;
  double ssr = resid.squaredNorm();
  double sst = X.has_intercept ? (y.array() - y.mean()).square().sum()
                               : y.squaredNorm();
  const int k = X.p() - (X.has_intercept ? 1 : 0);
  if (sst <= 0.0) {
    // Constant response: nothing to explain.
    res.r_squared = 0.0;
    res.adj_r_squared = 0.0;
    res.f_statistic = 0.0;
    res.p_value = 1.0;
    return res;
  }
  res.r_squared = 1.0 - ssr / sst;
  const int n = res.n;
  res.adj_r_squared = 1.0 - (1.0 - res.r_squared) * double(n - 1) / double(n - k - 1);
  if (k == 0) {
    res.f_statistic = 0.0;
    res.p_value = 1.0;
  } else {
    double denom = (1.0 - res.r_squared) / double(n - k - 1);
    res.f_statistic = denom > 0.0 ? (res.r_squared / k) / denom
                                  : std::numeric_limits<double>::infinity();
    if (std::isfinite(res.f_statistic)) {
      boost::math::fisher_f f_dist{double(k), double(n - k - 1)};
      res.p_value = boost::math::cdf(boost::math::complement(f_dist, res.f_statistic));
    } else {
      res.p_value = 0.0;
    }
  }
  return res;
}

struct BootstrapInference {
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  int replicates = 0;
};

// Pairs bootstrap. Each replicate draws rows with replacement using a stream
// derived from (seed, replicate index), so results are independent of
// evaluation order. Rank-deficient replicates are redrawn up to 10 times.
inline BootstrapInference bootstrap_inference(const DesignMatrix& X,
                                              const Eigen::VectorXd& y, int B,
                                              std::uint64_t seed) {
  if (B < 100) throw ConfigError("bootstrap needs at least 100 replicates");
  const int n = X.n(), p = X.p();
  Eigen::MatrixXd coefs(B, p);
  DesignMatrix Xb = X;
  Eigen::VectorXd yb(n);
  for (int b = 0; b < B; ++b) {
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      Rng rng(derive_stream(seed, 0x424f4f54ULL, std::uint64_t(b) * 16 + attempt));
      for (int i = 0; i < n; ++i) {
        int row = int(rng.uniform_below(std::uint64_t(n)));
        Xb.values.row(i) = X.values.row(row);
        yb[i] = y[row];
      }
      try {
        coefs.row(b) = ols_fit(Xb, yb).coefficients.transpose();
        ok = true;
      } catch (const NumericalError&) {
      }
    }
    if (!ok)
      throw NumericalError("bootstrap replicate rank-deficient after 10 redraws");
  }

  BootstrapInference out;
  out.replicates = B;
  out.se.resize(p);
  out.ci_lower.resize(p);
  out.ci_upper.resize(p);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd col = coefs.col(j);
    double m = col.mean();
    out.se[j] = std::sqrt((col.array() - m).square().sum() / double(B - 1));
    out.ci_lower[j] = quantile(col, 0.05);
    out.ci_upper[j] = quantile(col, 0.95);
  }
  return out;
}

inline RegressionResult ols_with_inference(const DesignMatrix& X,
                                           const Eigen::VectorXd& y, int B,
                                           std::uint64_t seed) {
  RegressionResult res = ols_fit(X, y);
  BootstrapInference inf = bootstrap_inference(X, y, B, seed);
  res.se = inf.se;
  res.ci_lower = inf.ci_lower;
  res.ci_upper = inf.ci_upper;
  res.bootstrap_replicates = inf.replicates;
  return res;
}

}  // namespace anthro
