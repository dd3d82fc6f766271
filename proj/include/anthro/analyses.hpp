#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anthro/design.hpp"
#include "anthro/dgp.hpp"
#include "anthro/errors.hpp"
#include "anthro/instruments.hpp"
#include "anthro/kernel.hpp"
#include "anthro/ols.hpp"
#include "anthro/quantile.hpp"
#include "anthro/train.hpp"

namespace anthro {

using Subjects = std::vector<SubjectRecord>;

inline Eigen::VectorXd column(const Subjects& subjects,
                              const std::function<double(const SubjectRecord&)>& get) {
  Eigen::VectorXd v(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) v[i] = get(subjects[i]);
  return v;
}

inline Subjects group_subset(const Subjects& subjects, int group) {
  Subjects out;
  for (const auto& s : subjects)
    if (s.group == group) out.push_back(s);
  return out;
}

inline Eigen::VectorXd log_income_vector(const Subjects& s) {
  return column(s, [](const SubjectRecord& r) { return r.log_income; });
}

// Controls for the income equations: experience, experience^2, education,
// number of children, race, occupation, marital status.
inline DesignMatrix income_controls(const Subjects& subjects) {
  const int n = int(subjects.size());
  DesignBuilder b(n);
  b.intercept();
  b.add("experience", column(subjects, [](const auto& s) { return s.experience_years; }));
  b.add("experience²", column(subjects, [](const auto& s) {
          return s.experience_years * s.experience_years;
        }));
  b.add("education", column(subjects, [](const auto& s) { return s.education_years; }));
  b.add("n_children", column(subjects, [](const auto& s) { return double(s.n_children); }));
  std::vector<int> race(n), occ(n), mar(n);
  for (int i = 0; i < n; ++i) {
    race[i] = subjects[i].race;
    occ[i] = subjects[i].occupation;
    mar[i] = subjects[i].marital;
  }
  b.add_categorical("race", race, race_labels());
  b.add_categorical("occupation", occ, occupation_labels());
  b.add_categorical("marital", mar, marital_labels());
  return b.build();
}

// Controls for the reporting-error equations: family income, age, age^2,
// occupation, education, marital status, fitness, race, birth region.
inline DesignMatrix reporting_controls(const Subjects& subjects) {
  const int n = int(subjects.size());
  DesignBuilder b(n);
  b.intercept();
  b.add("log_income", log_income_vector(subjects));
  b.add("age", column(subjects, [](const auto& s) { return s.age_years; }));
  b.add("age²", column(subjects, [](const auto& s) { return s.age_years * s.age_years; }));
  b.add("education", column(subjects, [](const auto& s) { return s.education_years; }));
  b.add("fitness", column(subjects, [](const auto& s) { return s.fitness_hours; }));
  std::vector<int> race(n), occ(n), mar(n), reg(n);
  for (int i = 0; i < n; ++i) {
    race[i] = subjects[i].race;
    occ[i] = subjects[i].occupation;
    mar[i] = subjects[i].marital;
    reg[i] = subjects[i].birth_region;
  }
  b.add_categorical("occupation", occ, occupation_labels());
  b.add_categorical("marital", mar, marital_labels());
  b.add_categorical("race", race, race_labels());
  b.add_categorical("birth_region", reg, region_labels());
  return b.build();
}

// The nine tape-measure columns, no intercept.
inline DesignMatrix body_measure_columns(const Subjects& subjects) {
  const int n = int(subjects.size());
  DesignBuilder b(n);
  b.add("height", column(subjects, [](const auto& s) { return s.measures.height_mm; }));
  b.add("weight", column(subjects, [](const auto& s) { return s.measures.weight_kg; }));
  b.add("chest_circ", column(subjects, [](const auto& s) { return s.measures.chest_circ_mm; }));
  b.add("waist_circ", column(subjects, [](const auto& s) { return s.measures.waist_circ_mm; }));
  b.add("hip_circ", column(subjects, [](const auto& s) { return s.measures.hip_circ_mm; }));
  b.add("neck_circ", column(subjects, [](const auto& s) { return s.measures.neck_circ_mm; }));
  b.add("foot_length", column(subjects, [](const auto& s) { return s.measures.foot_length_mm; }));
  b.add("arm_length", column(subjects, [](const auto& s) { return s.measures.arm_length_mm; }));
  b.add("shoulder_breadth",
        column(subjects, [](const auto& s) { return s.measures.shoulder_breadth_mm; }));
  return b.build();
}

// Reporting-error regression (height or weight variant): the error on the
// controls plus the true measure.
inline RegressionResult reporting_error_regression(const Subjects& subjects,
                                                   bool height_variant, int B,
                                                   std::uint64_t seed) {
  DesignMatrix X = reporting_controls(subjects);
  Eigen::VectorXd anchor, error;
  if (height_variant) {
    anchor = column(subjects, [](const auto& s) { return s.measures.height_mm; });
    error = column(subjects, [](const auto& s) { return s.reporting_error_height(); });
    X = append_column(X, "height", anchor);
  } else {
    anchor = column(subjects, [](const auto& s) { return s.measures.weight_kg; });
    error = column(subjects, [](const auto& s) { return s.reporting_error_weight(); });
    X = append_column(X, "weight", anchor);
  }
  return ols_with_inference(X, error, B, seed);
}

// Income regression with extra named regressors appended to the standard
// controls.
inline RegressionResult income_regression(const Subjects& subjects,
                                          const std::vector<std::string>& names,
                                          const std::vector<Eigen::VectorXd>& extra,
                                          int B, std::uint64_t seed) {
  DesignMatrix X = income_controls(subjects);
  for (std::size_t i = 0; i < extra.size(); ++i)
    X = append_column(X, names[i], extra[i]);
  return ols_with_inference(X, log_income_vector(subjects), B, seed);
}

struct CurveWithBands {
  Eigen::VectorXd grid;
  Eigen::VectorXd estimate;
  Eigen::VectorXd lower90;
  Eigen::VectorXd upper90;
  std::vector<bool> supported;
};

// Kernel conditional-mean curve with pointwise percentile bootstrap bands.
// The bandwidth is fixed at the full-sample Silverman value across replicates.
inline CurveWithBands kernel_curve_with_bands(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& y,
                                              const Eigen::VectorXd& grid, int B,
                                              std::uint64_t seed) {
  KernelSpec spec{silverman_bandwidth(x)};
  KernelCurve point = nadaraya_watson(x, y, grid, spec);
  const int n = int(x.size()), G = int(grid.size());
  Eigen::MatrixXd reps(B, G);
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_stream(seed, 0x4b45524eULL, std::uint64_t(b)));
    Eigen::VectorXd xb(n), yb(n);
    for (int i = 0; i < n; ++i) {
      int row = int(rng.uniform_below(std::uint64_t(n)));
      xb[i] = x[row];
      yb[i] = y[row];
    }
    KernelCurve c = nadaraya_watson(xb, yb, grid, spec);
    reps.row(b) = c.estimate.transpose();
  }
  CurveWithBands out;
  out.grid = grid;
  out.estimate = point.estimate;
  out.supported = point.supported;
  out.lower90.resize(G);
  out.upper90.resize(G);
  for (int g = 0; g < G; ++g) {
    std::vector<double> vals;
    vals.reserve(B);
    for (int b = 0; b < B; ++b)
      if (std::isfinite(reps(b, g))) vals.push_back(reps(b, g));
    if (int(vals.size()) < B / 2 || !point.supported[g]) {
      out.lower90[g] = out.upper90[g] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    out.lower90[g] = quantile(v, 0.05);
    out.upper90[g] = quantile(v, 0.95);
  }
  return out;
}

// Conditional-quantile curve for one tau with bootstrap bands; replicates
// that exhaust the IRLS iteration budget contribute their last iterate.
inline CurveWithBands quantile_curve_with_bands(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& y, double tau,
                                                int degree, const Eigen::VectorXd& grid,
                                                int B, std::uint64_t seed) {
  QuantileFit point = quantile_polyfit(x, y, tau, degree);
  const int n = int(x.size()), G = int(grid.size());
  Eigen::MatrixXd reps(B, G);
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_stream(seed, 0x51424e44ULL, std::uint64_t(b)));
    Eigen::VectorXd xb(n), yb(n);
    for (int i = 0; i < n; ++i) {
      int row = int(rng.uniform_below(std::uint64_t(n)));
      xb[i] = x[row];
      yb[i] = y[row];
    }
    try {
      reps.row(b) = quantile_polyfit(xb, yb, tau, degree).predict(grid).transpose();
    } catch (const QuantileNonConvergence& e) {
      reps.row(b) = e.last_iterate.predict(grid).transpose();
    }
  }
  CurveWithBands out;
  out.grid = grid;
  out.estimate = point.predict(grid);
  out.supported.assign(G, true);
  out.lower90.resize(G);
  out.upper90.resize(G);
  for (int g = 0; g < G; ++g) {
    Eigen::VectorXd col = reps.col(g);
    out.lower90[g] = quantile(col, 0.05);
    out.upper90[g] = quantile(col, 0.95);
  }
  return out;
}

// Garment-size residual instruments for a subject set.
struct ResidualInstruments {
  std::vector<Eigen::VectorXd> values;
  std::vector<std::string> names;
};

inline ResidualInstruments garment_instruments(const Subjects& subjects) {
  ResidualInstruments out;
  out.values.push_back(residual_instrument(
      column(subjects, [](const auto& s) { return s.shoe_size; }),
      column(subjects, [](const auto& s) { return s.measures.foot_length_mm; })));
  out.values.push_back(residual_instrument(
      column(subjects, [](const auto& s) { return s.jacket_size; }),
      column(subjects, [](const auto& s) { return s.measures.chest_circ_mm; })));
  out.values.push_back(residual_instrument(
      column(subjects, [](const auto& s) { return s.pants_size; }),
      column(subjects, [](const auto& s) { return s.measures.waist_circ_mm; })));
  out.names = {"shoe_det_hat", "jacket_det_hat", "pants_det_hat"};
  return out;
}

// Reference measures used to name embedding components: height, BMI,
// hip-to-waist ratio.
inline Eigen::MatrixXd alignment_measures(const Subjects& subjects) {
  Eigen::MatrixXd m(subjects.size(), 3);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    m(i, 0) = subjects[i].measures.height_mm;
    m(i, 1) = subjects[i].bmi_measured();
    m(i, 2) = subjects[i].hip_waist_measured();
  }
  return m;
}

// Aligned, standardized embedding columns: column 0 correlates positively
// with height, column 1 with BMI, column 2 (if present) with hip-to-waist.
struct AlignedEmbedding {
  Eigen::MatrixXd components;  // n x d, standardized
  ComponentAlignment alignment;
  std::vector<std::string> names;  // P1..Pd in aligned order
};

inline AlignedEmbedding align_embedding(const Subjects& subjects,
                                        const Embedding& embedding) {
  AlignedEmbedding out;
  out.alignment = align_components(embedding.raw, alignment_measures(subjects));
  Eigen::MatrixXd aligned = out.alignment.apply(embedding.raw);
  out.components.resize(aligned.rows(), aligned.cols());
  for (Eigen::Index j = 0; j < aligned.cols(); ++j) {
    double m = aligned.col(j).mean();
    double sd = std::sqrt((aligned.col(j).array() - m).square().sum() /
                          double(aligned.rows() - 1));
    out.components.col(j) = (aligned.col(j).array() - m) / (sd > 0.0 ? sd : 1.0);
    out.names.push_back("P" + std::to_string(j + 1));
  }
  return out;
}

// Simple per-pair linear fit summary used for component/measure tables.
struct LinearFitSummary {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LinearFitSummary simple_linear_fit(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& y) {
  DesignBuilder b(int(x.size()));
  b.intercept();
  b.add("x", x);
  RegressionResult fit = ols_fit(b.build(), y);
  return {fit.coefficients[1], fit.coefficients[0], fit.r_squared};
}

}  // namespace anthro
