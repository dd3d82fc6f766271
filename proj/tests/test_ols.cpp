#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "anthro/design.hpp"
#include "anthro/ols.hpp"
#include "anthro/rng.hpp"
#include "anthro/stats.hpp"

using namespace anthro;

namespace {

DesignMatrix random_design(int n, int p, Rng& rng, bool intercept = true) {
  DesignBuilder b(n);
  if (intercept) b.intercept();
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd col(n);
    for (int i = 0; i < n; ++i) col[i] = rng.normal();
    b.add("x" + std::to_string(j), col);
  }
  return b.build();
}

}  // namespace

TEST_CASE("an exactly linear response is fit exactly") {
  Rng rng(1);
  DesignMatrix X = random_design(60, 4, rng);
  Eigen::VectorXd beta(5);
  beta << 1.5, -2.0, 0.3, 0.0, 4.0;
  Eigen::VectorXd y = X.values * beta;
  RegressionResult fit = ols_fit(X, y);
  CHECK((fit.coefficients - beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((y - X.values * fit.coefficients).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.adj_r_squared == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("intercept-only fit returns the sample mean") {
  Rng rng(2);
  DesignBuilder b(50);
  b.intercept();
  DesignMatrix X = b.build();
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y[i] = rng.normal(3.0, 2.0);
  RegressionResult fit = ols_fit(X, y);
  CHECK(fit.coefficients[0] == Catch::Approx(y.mean()).epsilon(1e-12));
  CHECK(fit.adj_r_squared == Catch::Approx(0.0).margin(1e-12));
  CHECK(fit.p_value == 1.0);
}

TEST_CASE("QR solve matches the explicit normal-equation inverse") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    DesignMatrix X = random_design(200, 5, rng);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) y[i] = rng.normal();
    RegressionResult fit = ols_fit(X, y);
    Eigen::MatrixXd XtX = X.values.transpose() * X.values;
    Eigen::VectorXd beta_ne = XtX.inverse() * (X.values.transpose() * y);
    CHECK((fit.coefficients - beta_ne).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("residuals are orthogonal to the design and sum with the fit to y") {
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    DesignMatrix X = random_design(300, 6, rng);
    Eigen::VectorXd beta = Eigen::VectorXd::Random(7);
    Eigen::VectorXd y = X.values * beta;
    for (int i = 0; i < 300; ++i) y[i] += rng.normal();
    RegressionResult fit = ols_fit(X, y);
    Eigen::VectorXd fitted = X.values * fit.coefficients;
    Eigen::VectorXd resid = y - fitted;
    CHECK((X.values.transpose() * resid).cwiseAbs().maxCoeff() < 1e-8 * 300);
    CHECK((fitted + resid - y).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rank-deficient designs are rejected with the offending column named") {
  Rng rng(5);
  DesignBuilder b(100);
  b.intercept();
  Eigen::VectorXd x(100);
  for (int i = 0; i < 100; ++i) x[i] = rng.normal();
  b.add("alpha", x);
  b.add("alpha_copy", 2.0 * x);
  Eigen::VectorXd y(100);
  for (int i = 0; i < 100; ++i) y[i] = rng.normal();
  try {
    ols_fit(b.build(), y);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    std::string msg = e.what();
    CHECK(msg.find("rank deficient") != std::string::npos);
    CHECK((msg.find("alpha") != std::string::npos));
  }
}

TEST_CASE("more covariates than observations is a data error") {
  Rng rng(6);
  DesignMatrix X = random_design(5, 6, rng);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(ols_fit(X, y), DataError);
}

TEST_CASE("adjusted R2 and F match their textbook formulas") {
  Rng rng(7);
  const int n = 120, k = 3;
  DesignMatrix X = random_design(n, k, rng);
  Eigen::VectorXd beta(4);
  beta << 0.5, 1.0, -1.0, 0.2;
  Eigen::VectorXd y = X.values * beta;
  for (int i = 0; i < n; ++i) y[i] += rng.normal();
  RegressionResult fit = ols_fit(X, y);
  Eigen::VectorXd resid = y - X.values * fit.coefficients;
  double ssr = resid.squaredNorm();
  double sst = (y.array() - y.mean()).square().sum();
  double r2 = 1.0 - ssr / sst;
  CHECK(fit.r_squared == Catch::Approx(r2).epsilon(1e-12));
  CHECK(fit.adj_r_squared ==
        Catch::Approx(1.0 - (1.0 - r2) * (n - 1.0) / (n - k - 1.0)).epsilon(1e-12));
  CHECK(fit.f_statistic ==
        Catch::Approx((r2 / k) / ((1.0 - r2) / (n - k - 1.0))).epsilon(1e-12));
  CHECK(fit.p_value < 1e-6);  // strong signal
}

TEST_CASE("scaling the response scales every coefficient exactly") {
  Rng rng(8);
  DesignMatrix X = random_design(150, 4, rng);
  Eigen::VectorXd y(150);
  for (int i = 0; i < 150; ++i) y[i] = rng.normal(1.0, 2.0);
  RegressionResult a = ols_fit(X, y);
  RegressionResult b = ols_fit(X, (7.5 * y).eval());
  CHECK((7.5 * a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("bootstrap of a constant response has zero standard errors") {
  DesignBuilder b(40);
  b.intercept();
  DesignMatrix X = b.build();
  Eigen::VectorXd y = Eigen::VectorXd::Constant(40, 3.25);
  BootstrapInference inf = bootstrap_inference(X, y, 200, 5);
  CHECK(inf.se[0] == 0.0);
  CHECK(inf.ci_lower[0] == Catch::Approx(3.25));
  CHECK(inf.ci_upper[0] == Catch::Approx(3.25));
}

TEST_CASE("bootstrap SEs and intervals are reproducible per seed") {
  Rng rng(9);
  DesignMatrix X = random_design(80, 2, rng);
  Eigen::VectorXd y(80);
  for (int i = 0; i < 80; ++i) y[i] = rng.normal();
  BootstrapInference a = bootstrap_inference(X, y, 150, 77);
  BootstrapInference b = bootstrap_inference(X, y, 150, 77);
  CHECK(a.se == b.se);
  CHECK(a.ci_lower == b.ci_lower);
  CHECK(a.ci_upper == b.ci_upper);
}

TEST_CASE("bootstrap slope SE tracks the analytic linear-Gaussian value") {
  Rng rng(10);
  const int n = 500;
  DesignMatrix X = random_design(n, 1, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = 2.0 + 0.5 * X.values(i, 1) + rng.normal();
  BootstrapInference inf = bootstrap_inference(X, y, 1000, 11);
  Eigen::MatrixXd xtx_inv = (X.values.transpose() * X.values).inverse();
  double analytic = std::sqrt(xtx_inv(1, 1));  // sigma = 1
  CHECK(inf.se[1] == Catch::Approx(analytic).epsilon(0.15));
}

TEST_CASE("bootstrap requires a sane replicate count") {
  Rng rng(12);
  DesignMatrix X = random_design(30, 1, rng);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(30);
  CHECK_THROWS_AS(bootstrap_inference(X, y, 50, 1), ConfigError);
}

TEST_CASE("design builder expands categoricals with reference coding") {
  DesignBuilder b(6);
  b.intercept();
  b.add_categorical("race", {0, 1, 2, 3, 0, 1}, {"White", "Hispanic", "Black", "Asian"});
  DesignMatrix X = b.build();
  REQUIRE(X.p() == 4);  // const + 3 indicators
  CHECK(X.names[1] == "race=Hispanic");
  CHECK(X.values(0, 1) == 0.0);
  CHECK(X.values(1, 1) == 1.0);
  CHECK(X.values(3, 3) == 1.0);
  // reference rows are all zeros
  CHECK(X.values.row(4).tail(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interaction expansion produces p(p+1)/2 extra named columns") {
  DesignBuilder b(5);
  Eigen::VectorXd a(5), c(5);
  a << 1, 2, 3, 4, 5;
  c << 2, 2, 3, 3, 4;
  b.add("A", a);
  b.add("B", c);
  DesignMatrix body = b.build();
  DesignMatrix out = build_interactions(body);
  REQUIRE(out.p() == 2 + 3);
  CHECK(out.names[2] == "A²");
  CHECK(out.names[3] == "A×B");
  CHECK(out.names[4] == "B²");
  CHECK(out.values.col(2) == a.cwiseProduct(a));
  CHECK(out.values.col(3) == a.cwiseProduct(c));

  // p=9 synthetic measure set adds 45; p=40 adds 820
  DesignBuilder b9(3);
  for (int j = 0; j < 9; ++j) b9.add("m" + std::to_string(j), Eigen::VectorXd::Random(3));
  CHECK(build_interactions(b9.build()).p() == 9 + 45);
  DesignBuilder b40(3);
  for (int j = 0; j < 40; ++j) b40.add("m" + std::to_string(j), Eigen::VectorXd::Random(3));
  CHECK(build_interactions(b40.build()).p() == 40 + 820);
}
