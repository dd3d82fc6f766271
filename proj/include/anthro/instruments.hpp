#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anthro/design.hpp"
#include "anthro/errors.hpp"
#include "anthro/ols.hpp"

namespace anthro {

// Residual of the reported size projected on (intercept, anchor measure).
// The residual estimates the size determinant: it is orthogonal to the anchor
// and mean zero by construction.
inline Eigen::VectorXd residual_instrument(const Eigen::VectorXd& reported_size,
                                           const Eigen::VectorXd& anchor_measure) {
  if (reported_size.size() != anchor_measure.size() || reported_size.size() < 3)
    throw DataError("residual_instrument needs matching vectors, n >= 3");
  double am = anchor_measure.mean();
  double var = (anchor_measure.array() - am).square().sum();
  if (!(var > 0.0)) throw DataError("anchor measure has zero variance");
  DesignMatrix X;
  X.values.resize(reported_size.size(), 2);
  X.values.col(0).setOnes();
  X.values.col(1) = anchor_measure;
  X.names = {"const", "anchor"};
  X.has_intercept = true;
  RegressionResult fit = ols_fit(X, reported_size);
  return reported_size - X.values * fit.coefficients;
}

struct FirstStageResult {
  RegressionResult regression;   // endogenous feature on [X, instruments]
  Eigen::VectorXd residuals;     // the control function
  double instrument_f = 0.0;     // partial F on the instrument block
  bool weak_instruments = false; // instrument_f < 10
  int n_instruments = 0;
};

// First-stage reduced form: endogenous feature on exogenous controls plus the
// residual instruments. Reports the partial F statistic for the instrument
// block; F < 10 flags weak instruments.
inline FirstStageResult first_stage(const Eigen::VectorXd& endogenous,
                                    const DesignMatrix& X,
                                    const std::vector<Eigen::VectorXd>& instruments,
                                    const std::vector<std::string>& instrument_names) {
  if (instruments.empty()) throw DataError("first_stage needs instruments");
  if (instruments.size() != instrument_names.size())
    throw DataError("instrument names mismatch");
  DesignMatrix full = X;
  for (std::size_t i = 0; i < instruments.size(); ++i)
    full = append_column(full, instrument_names[i], instruments[i]);

  FirstStageResult fs;
  fs.n_instruments = int(instruments.size());
  fs.regression = ols_fit(full, endogenous);
  fs.residuals = endogenous - full.values * fs.regression.coefficients;

  RegressionResult restricted = ols_fit(X, endogenous);
  Eigen::VectorXd resid_r = endogenous - X.values * restricted.coefficients;
  double ssr_u = fs.residuals.squaredNorm();
  double ssr_r = resid_r.squaredNorm();
  int q = fs.n_instruments;
  int df = full.n() - full.p();
  fs.instrument_f = ssr_u > 0.0 ? ((ssr_r - ssr_u) / q) / (ssr_u / df)
                                : std::numeric_limits<double>::infinity();
  fs.weak_instruments = fs.instrument_f < 10.0;
  return fs;
}

struct CFResult {
  FirstStageResult first;
  RegressionResult second;     // y on [X, endogenous, other features, cf_resid]
  double pi = 0.0;             // coefficient on the control-function residual
  double pi_se = 0.0;
  double pi_t = 0.0;
  bool endogenous_flag = false;  // |t| > 1.96 at the 5% level
  bool weak_instruments = false;
};

namespace detail {

struct CFData {
  DesignMatrix second_stage;
  FirstStageResult fs;
};

inline CFData cf_point_fit(const Eigen::VectorXd& y, const DesignMatrix& X,
                           const Eigen::VectorXd& endogenous,
                           const std::string& endogenous_name,
                           const std::vector<Eigen::VectorXd>& other_features,
                           const std::vector<std::string>& other_names,
                           const std::vector<Eigen::VectorXd>& instruments,
                           const std::vector<std::string>& instrument_names) {
  if (y.size() != X.n()) throw DataError("control_function: length mismatch");
  CFData d;
  d.fs = first_stage(endogenous, X, instruments, instrument_names);
  DesignMatrix second = append_column(X, endogenous_name, endogenous);
  for (std::size_t i = 0; i < other_features.size(); ++i)
    second = append_column(second, other_names[i], other_features[i]);
  second = append_column(second, "cf_resid", d.fs.residuals);
  d.second_stage = second;
  return d;
}

}  // namespace detail

// Control-function estimator. The first-stage residual enters the outcome
// equation; its coefficient pi tests endogeneity of the feature. Bootstrap
// replicates re-run BOTH stages so the standard errors account for the
// generated regressor.
inline CFResult control_function(const Eigen::VectorXd& y, const DesignMatrix& X,
                                 const Eigen::VectorXd& endogenous,
                                 const std::string& endogenous_name,
                                 const std::vector<Eigen::VectorXd>& other_features,
                                 const std::vector<std::string>& other_names,
                                 const std::vector<Eigen::VectorXd>& instruments,
                                 const std::vector<std::string>& instrument_names,
                                 int B, std::uint64_t seed) {
  detail::CFData point = detail::cf_point_fit(y, X, endogenous, endogenous_name,
                                              other_features, other_names,
                                              instruments, instrument_names);
  CFResult res;
  res.first = point.fs;
  res.second = ols_fit(point.second_stage, y);
  res.weak_instruments = point.fs.weak_instruments;

  if (B < 100) throw ConfigError("bootstrap needs at least 100 replicates");
  const int n = X.n();
  const int p2 = point.second_stage.p();
  Eigen::MatrixXd second_coefs(B, p2);
  Eigen::MatrixXd first_coefs(B, point.fs.regression.coefficients.size());
  for (int b = 0; b < B; ++b) {
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      Rng rng(derive_stream(seed, 0x43465254ULL, std::uint64_t(b) * 16 + attempt));
      DesignMatrix Xb = X;
      Eigen::VectorXd yb(n), endb(n);
      std::vector<Eigen::VectorXd> otherb(other_features.size(), Eigen::VectorXd(n));
      std::vector<Eigen::VectorXd> instb(instruments.size(), Eigen::VectorXd(n));
      for (int i = 0; i < n; ++i) {
        int row = int(rng.uniform_below(std::uint64_t(n)));
        Xb.values.row(i) = X.values.row(row);
        yb[i] = y[row];
        endb[i] = endogenous[row];
        for (std::size_t f = 0; f < other_features.size(); ++f)
          otherb[f][i] = other_features[f][row];
        for (std::size_t f = 0; f < instruments.size(); ++f)
          instb[f][i] = instruments[f][row];
      }
      try {
        detail::CFData rep = detail::cf_point_fit(yb, Xb, endb, endogenous_name,
                                                  otherb, other_names, instb,
                                                  instrument_names);
        second_coefs.row(b) = ols_fit(rep.second_stage, yb).coefficients.transpose();
        first_coefs.row(b) = rep.fs.regression.coefficients.transpose();
        ok = true;
      } catch (const NumericalError&) {
      }
    }
    if (!ok) throw NumericalError("control-function bootstrap failed after 10 redraws");
  }

  auto fill_inference = [&](RegressionResult& reg, const Eigen::MatrixXd& coefs) {
    const int p = int(coefs.cols());
    reg.se.resize(p);
    reg.ci_lower.resize(p);
    reg.ci_upper.resize(p);
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd col = coefs.col(j);
      double m = col.mean();
      reg.se[j] = std::sqrt((col.array() - m).square().sum() / double(B - 1));
      reg.ci_lower[j] = quantile(col, 0.05);
      reg.ci_upper[j] = quantile(col, 0.95);
    }
    reg.bootstrap_replicates = B;
  };
  fill_inference(res.second, second_coefs);
  fill_inference(res.first.regression, first_coefs);

  int pi_idx = res.second.index_of("cf_resid");
  res.pi = res.second.coefficients[pi_idx];
  res.pi_se = res.second.se[pi_idx];
  res.pi_t = res.pi_se > 0.0 ? res.pi / res.pi_se
                             : std::numeric_limits<double>::infinity();
  res.endogenous_flag = std::abs(res.pi_t) > 1.96;
  return res;
}

// Textbook two-stage least squares, kept as an independent algebraic route:
// in linear just-identified models it must coincide with the control-function
// point estimates. Returns coefficients ordered [X columns..., endogenous].
inline Eigen::VectorXd two_sls_oracle(const Eigen::VectorXd& y, const DesignMatrix& X,
                                      const Eigen::VectorXd& endogenous,
                                      const std::vector<Eigen::VectorXd>& instruments) {
  if (instruments.empty())
    throw DataError("two_sls needs at least as many instruments as endogenous regressors");
  const int n = X.n();
  Eigen::MatrixXd Z(n, X.p() + instruments.size());
  Z.leftCols(X.p()) = X.values;
  for (std::size_t i = 0; i < instruments.size(); ++i)
    Z.col(X.p() + int(i)) = instruments[i];

  Eigen::MatrixXd W(n, X.p() + 1);
  W.leftCols(X.p()) = X.values;
  W.col(X.p()) = endogenous;

  // P_Z W via least squares, then OLS of y on the projected regressors.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qz(Z);
  if (qz.rank() < Z.cols())
    throw NumericalError("two_sls: instrument matrix is rank deficient");
  Eigen::MatrixXd What = Z * qz.solve(W);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qw(What);
  if (qw.rank() < What.cols())
    throw NumericalError("two_sls: projected design is rank deficient");
  // (What' W)^-1 What' y -- use the equivalent normal equations with What.
  return (What.transpose() * W).colPivHouseholderQr().solve(What.transpose() * y);
}

// Proxy-variable approach: OLS with the proxy set appended to the controls.
inline RegressionResult proxy_ols(const Eigen::VectorXd& y, const DesignMatrix& X_core,
                                  const DesignMatrix& proxies,
                                  const DesignMatrix& features) {
  DesignMatrix full = X_core;
  if (proxies.p() > 0) full = hcat(full, proxies);
  if (features.p() > 0) full = hcat(full, features);
  return ols_fit(full, y);
}

}  // namespace anthro
