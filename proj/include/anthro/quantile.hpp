#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "anthro/errors.hpp"
#include "anthro/stats.hpp"

namespace anthro {

// Polynomial conditional-quantile fit minimizing the pinball loss
//   sum_i rho_tau(y_i - poly(x_i)),  rho_tau(u) = u (tau - 1{u<0}).
// The polynomial is fit in the standardized regressor z = (x - center)/scale
// for conditioning; predict() evaluates in that basis.
struct QuantileFit {
  double tau = 0.5;
  int degree = 0;
  Eigen::VectorXd coefficients;  // standardized basis, length degree+1
  double x_center = 0.0;
  double x_scale = 1.0;
  double pinball_loss = 0.0;
  int iterations = 0;

  double predict(double x) const {
    double z = (x - x_center) / x_scale;
    double acc = 0.0;
    for (int k = degree; k >= 0; --k) acc = acc * z + coefficients[k];
    return acc;
  }

  Eigen::VectorXd predict(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = predict(x[i]);
    return out;
  }

  // Coefficients on powers of raw x, by binomial expansion of the
  // standardized basis.
  Eigen::VectorXd coefficients_original() const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(degree + 1);
    for (int k = 0; k <= degree; ++k) {
      // a_k * ((x - c)/s)^k
      double binom = 1.0;
      for (int i = 0; i <= k; ++i) {
        double term = coefficients[k] * binom * std::pow(-x_center, k - i) /
                      std::pow(x_scale, k);
        out[i] += term;
        binom = binom * double(k - i) / double(i + 1);
      }
    }
    return out;
  }
};

struct QuantileNonConvergence : NumericalError {
  QuantileFit last_iterate;
  explicit QuantileNonConvergence(QuantileFit fit)
      : NumericalError("quantile IRLS did not converge in 200 iterations"),
        last_iterate(std::move(fit)) {}
};

inline double pinball_loss(double tau, const Eigen::VectorXd& residuals) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    double u = residuals[i];
    acc += u * (tau - (u < 0.0 ? 1.0 : 0.0));
  }
  return acc;
}

// Iteratively reweighted least squares with epsilon-smoothed weights
// w_i = (tau or 1-tau)/max(|r_i|, 1e-6); converged when the max coefficient
// change drops below 1e-8, capped at 200 iterations.
inline QuantileFit quantile_polyfit(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                    double tau, int degree) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0,1)");
  if (degree < 0) throw ConfigError("degree must be non-negative");
  if (x.size() != y.size()) throw DataError("x and y length mismatch");
  const int n = int(x.size());
  if (n <= degree + 1) throw DataError("quantile fit needs n > degree + 1");

  QuantileFit fit;
  fit.tau = tau;
  fit.degree = degree;
  fit.x_center = x.mean();
  double sd = n >= 2 ? std::sqrt((x.array() - fit.x_center).square().sum() / (n - 1)) : 0.0;
  if (degree >= 1 && !(sd > 0.0))
    throw DataError("polynomial quantile fit needs a non-constant regressor");
  fit.x_scale = sd > 0.0 ? sd : 1.0;

  Eigen::MatrixXd Z(n, degree + 1);
  for (int i = 0; i < n; ++i) {
    double z = (x[i] - fit.x_center) / fit.x_scale;
    double pow_z = 1.0;
    for (int k = 0; k <= degree; ++k) {
      Z(i, k) = pow_z;
      pow_z *= z;
    }
  }

  constexpr double kSmooth = 1e-6;
  constexpr double kTol = 1e-8;
  constexpr int kMaxIter = 200;

  Eigen::VectorXd beta = Z.colPivHouseholderQr().solve(y);
  Eigen::VectorXd w(n);
  Eigen::MatrixXd Zw(n, degree + 1);
  Eigen::VectorXd yw(n);
  for (int iter = 1; iter <= kMaxIter; ++iter) {
    Eigen::VectorXd resid = y - Z * beta;
    for (int i = 0; i < n; ++i) {
      double a = resid[i] >= 0.0 ? tau : 1.0 - tau;
      w[i] = std::sqrt(a / std::max(std::abs(resid[i]), kSmooth));
    }
    Zw = w.asDiagonal() * Z;
    yw = w.asDiagonal() * y;
    Eigen::VectorXd next = Zw.colPivHouseholderQr().solve(yw);
    double delta = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    fit.iterations = iter;
    if (delta < kTol) {
      fit.coefficients = beta;
      fit.pinball_loss = pinball_loss(tau, y - Z * beta);
      return fit;
    }
  }
  fit.coefficients = beta;
  fit.pinball_loss = pinball_loss(tau, y - Z * beta);
  throw QuantileNonConvergence(fit);
}

}  // namespace anthro
