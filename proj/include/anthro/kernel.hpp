#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "anthro/errors.hpp"
#include "anthro/stats.hpp"

namespace anthro {

// Epanechnikov kernel K(u) = 0.75 (1 - u^2) on |u| <= 1.
inline double epanechnikov(double u) {
  return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

struct KernelSpec {
  double bandwidth = 1.0;
};

// Silverman's rule of thumb, density variant:
//   h = 0.9 * min(sd, IQR/1.349) * n^(-1/5).
// A zero IQR (heavy ties) falls back to the SD term.
inline double silverman_bandwidth(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw DataError("bandwidth needs at least 2 points");
  double sd = stddev(x);
  if (!(sd > 0.0)) throw DataError("bandwidth undefined for zero-variance input");
  double iq = iqr(x) / 1.349;
  double spread = iq > 0.0 ? std::min(sd, iq) : sd;
  return 0.9 * spread * std::pow(double(x.size()), -0.2);
}

struct KernelCurve {
  Eigen::VectorXd grid;
  Eigen::VectorXd estimate;          // NaN where unsupported
  std::vector<bool> supported;       // denominator > 0
};

// Nadaraya-Watson conditional mean on a grid. Grid points with no kernel
// support are flagged rather than extrapolated.
inline KernelCurve nadaraya_watson(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& grid, const KernelSpec& spec) {
  if (x.size() == 0 || x.size() != y.size())
    throw DataError("kernel regression needs matching non-empty x, y");
  if (!(spec.bandwidth > 0.0)) throw DataError("bandwidth must be positive");

  KernelCurve curve;
  curve.grid = grid;
  curve.estimate.resize(grid.size());
  curve.supported.resize(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double w = epanechnikov((x[i] - grid[g]) / spec.bandwidth);
      num += w * y[i];
      den += w;
    }
    curve.supported[g] = den > 0.0;
    curve.estimate[g] = den > 0.0 ? num / den
                                  : std::numeric_limits<double>::quiet_NaN();
  }
  return curve;
}

inline Eigen::VectorXd linspace(double lo, double hi, int count) {
  if (count < 2) throw ConfigError("linspace needs at least 2 points");
  Eigen::VectorXd g(count);
  for (int i = 0; i < count; ++i)
    g[i] = lo + (hi - lo) * double(i) / double(count - 1);
  return g;
}

}  // namespace anthro
