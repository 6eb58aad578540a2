#include <doctest.h>

#include <cmath>
#include <vector>

#include "gimbal/solver.hpp"
#include "oracles.hpp"

using namespace gimbal::solver;

namespace {

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

std::vector<double> uniform(int n) { return std::vector<double>(n, 1.0 / n); }

}  // namespace

TEST_CASE("gamma = 0 reproduces ordinary least squares") {
  oracle::Gen g(41);
  for (int t = 0; t < 100; ++t) {
    const auto x = g.design(30, 3);
    const auto y = g.vec(30);
    const auto fit = solve_local(x, y, g.simplex(30), 0.0);
    REQUIRE(fit.well_posed);
    CHECK(rel(fit.beta, oracle::ols(x, y)) < 1e-10);
  }
}

TEST_CASE("uniform weights reproduce OLS for every gamma") {
  oracle::Gen g(42);
  for (double gamma : {0.0, 0.5, 1.0, 10.0}) {
    for (int t = 0; t < 25; ++t) {
      const auto x = g.design(25, 3);
      const auto y = g.vec(25);
      const auto fit = solve_local(x, y, uniform(25), gamma);
      REQUIRE(fit.well_posed);
      CHECK(rel(fit.beta, oracle::ols(x, y)) < 1e-10);
    }
  }
}

TEST_CASE("large gamma approaches weighted least squares") {
  oracle::Gen g(43);
  for (int t = 0; t < 25; ++t) {
    const auto x = g.design(40, 3);
    const auto y = g.vec(40);
    const auto w = g.simplex(40);
    const auto fit = solve_local(x, y, w, 1e8);
    REQUIRE(fit.well_posed);
    CHECK(rel(fit.beta, oracle::wls(x, y, w)) < 1e-4);
  }
}

TEST_CASE("gamma sweep moves from the OLS end to the WLS end") {
  oracle::Gen g(44);
  for (int t = 0; t < 20; ++t) {
    const auto x = g.design(30, 3);
    const auto y = g.vec(30);
    const auto w = g.simplex(30);
    const auto b_ols = oracle::ols(x, y), b_wls = oracle::wls(x, y, w);
    const double span = (b_ols - b_wls).norm();
    CHECK((solve_local(x, y, w, 0).beta - b_ols).norm() < 1e-10 * b_ols.norm());
    CHECK((solve_local(x, y, w, 1e6).beta - b_wls).norm() < 1e-4 * b_wls.norm() + 1e-12);
    for (double gamma : {1.0, 10.0, 1e3}) {
      const auto b = solve_local(x, y, w, gamma).beta;
      CHECK((b - b_ols).norm() <= span * (1 + 1e-9));
      CHECK((b - b_wls).norm() <= span * (1 + 1e-9));
    }
  }
}

TEST_CASE("duplicated column is ill-posed and carries no coefficients") {
  oracle::Gen g(45);
  Eigen::MatrixXd x = g.design(20, 3);
  x.col(2) = x.col(1);
  const auto fit = solve_local(x, g.vec(20), g.simplex(20), 0.0);
  CHECK_FALSE(fit.well_posed);
  CHECK(fit.beta.size() == 0);
  CHECK(std::isnan(fit.summary.rmse));
  CHECK_THROWS_AS(stability_bound(x, g.simplex(20), 0.0), std::domain_error);
}

TEST_CASE("fewer rows than columns is ill-posed") {
  oracle::Gen g(46);
  const auto x = g.design(2, 3);
  CHECK_FALSE(solve_local(x, g.vec(2), uniform(2), 1.0).well_posed);
  Eigen::MatrixXd one(1, 3);
  one << 1, 0.3, 0;
  CHECK_FALSE(solve_local(one, Eigen::VectorXd::Ones(1), uniform(1), 1.0).well_posed);
}

TEST_CASE("condition number uses the eigenvalue floor") {
  oracle::Gen g(47);
  const auto x = g.design(20, 3);
  const auto w = g.simplex(20);
  const auto fit = solve_local(x, g.vec(20), w, 1.0);
  const Eigen::MatrixXd m = modulated_normal_matrix(x, w, 1.0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  CHECK(fit.m_nor_condition == doctest::Approx(s(0) / s(2)).epsilon(1e-10));
  CHECK(fit.m_nor_condition >= 1.0);
}

TEST_CASE("stability bound dominates the exact operator norm") {
  oracle::Gen g(48);
  for (int t = 0; t < 20; ++t) {
    const auto x = g.design(25, 3);
    const auto w = g.simplex(25);
    const double gamma = g.uniform(0, 5);
    const Eigen::MatrixXd m = modulated_normal_matrix(x, w, gamma);
    Eigen::MatrixXd b = x.transpose();
    for (int j = 0; j < 25; ++j) b.col(j) *= 1 + 2 * gamma * w[j];
    const Eigen::MatrixXd a = m.inverse() * b;
    const double bound = stability_bound(x, w, gamma);
    CHECK(bound >= oracle::spectral_norm(a) * (1 - 1e-12));
    CHECK(bound == doctest::Approx(solve_local(x, g.vec(25), w, gamma).operator_norm_bound).epsilon(1e-14));
  }
}

TEST_CASE("orthonormal design at gamma = 0 has unit operator norm") {
  oracle::Gen g(49);
  Eigen::MatrixXd raw = g.design(12, 3);
  Eigen::MatrixXd q = raw.householderQr().householderQ() * Eigen::MatrixXd::Identity(12, 3);
  const double bound = stability_bound(q, g.simplex(12), 0.0);
  CHECK(bound >= 1.0 - 1e-12);
  CHECK(bound == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("perturbations never exceed the stability bound") {
  oracle::Gen g(50);
  int violations = 0;
  for (int t = 0; t < 20; ++t) {
    const auto x = g.design(20, 3);
    const auto w = g.simplex(20);
    const double gamma = g.uniform(0, 3);
    const double bound = stability_bound(x, w, gamma);
    for (int k = 0; k < 50; ++k) {
      const auto y1 = g.vec(20), y2 = g.vec(20);
      const auto b1 = solve_local(x, y1, w, gamma).beta, b2 = solve_local(x, y2, w, gamma).beta;
      if ((b1 - b2).norm() > bound * (y1 - y2).norm()) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("estimator is linear in y") {
  oracle::Gen g(51);
  for (int t = 0; t < 50; ++t) {
    const auto x = g.design(15, 3);
    const auto w = g.simplex(15);
    const auto y1 = g.vec(15), y2 = g.vec(15);
    const double a = g.uniform(-3, 3), b = g.uniform(-3, 3);
    const Eigen::VectorXd lhs = solve_local(x, a * y1 + b * y2, w, 1.0).beta;
    const Eigen::VectorXd rhs = a * solve_local(x, y1, w, 1.0).beta + b * solve_local(x, y2, w, 1.0).beta;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("fit summaries") {
  oracle::Gen g(52);
  const auto x = g.design(10, 3);
  const Eigen::Vector3d beta(0.5, -1.0, 2.0);
  const Eigen::VectorXd y = x * beta;
  const auto exact = solve_local(x, y, uniform(10), 1.0);
  CHECK(exact.summary.rmse < 1e-12);
  CHECK(exact.summary.r2 == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::VectorXd yc = g.vec(10);
  yc.array() -= yc.mean();
  const auto zero = local_fit_summaries(x, yc, Eigen::Vector3d::Zero());
  CHECK(std::abs(zero.r2) < 1e-15);
  CHECK(zero.rmse == doctest::Approx(std::sqrt(yc.squaredNorm() / 10)).epsilon(1e-15));

  const Eigen::VectorXd yr = g.vec(10);
  const Eigen::Vector3d b = g.vec(3);
  const auto s = local_fit_summaries(x, yr, b);
  double sse = 0, sst = 0;
  for (int i = 0; i < 10; ++i) {
    const double r = yr(i) - x.row(i).dot(b);
    sse += r * r;
    sst += (yr(i) - yr.mean()) * (yr(i) - yr.mean());
  }
  CHECK(s.rmse == doctest::Approx(std::sqrt(sse / 10)).epsilon(1e-14));
  CHECK(s.r2 == doctest::Approx(1 - sse / sst).epsilon(1e-14));
  CHECK(s.r2_defined);

  const auto flat = local_fit_summaries(x, Eigen::VectorXd::Constant(10, 3.0), b);
  CHECK_FALSE(flat.r2_defined);
  CHECK(flat.r2 == 0.0);
}

TEST_CASE("cond_wls2 special cases and closed-form oracle") {
  Eigen::MatrixXd c(6, 2);
  c.col(0).setOnes();
  c.col(1).setZero();
  CHECK(cond_wls2(c, uniform(6)) == doctest::Approx(1.0 / kKappaFloor).epsilon(1e-12));

  Eigen::MatrixXd bal(4, 2);
  bal << 1, 1, 1, -1, 1, 1, 1, -1;
  CHECK(cond_wls2(bal, uniform(4)) == doctest::Approx(1.0).epsilon(1e-15));

  oracle::Gen g(53);
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd x2 = g.design(20, 2);
    const auto w = g.simplex(20);
    double a = 0, b = 0, cc = 0;
    for (int j = 0; j < 20; ++j) {
      a += w[j];
      b += w[j] * x2(j, 1);
      cc += w[j] * x2(j, 1) * x2(j, 1);
    }
    const auto [hi, lo] = oracle::jacobi_eig2(a, b, cc);
    CHECK(cond_wls2(x2, w) == doctest::Approx(hi / std::max(lo, 1e-12)).epsilon(1e-9));
  }
}
