#include "gimbal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace gimbal::solver {

namespace {

/// Row scale 1 + 2 gamma w_j, so that M_nor = X^T diag(scale) X.
Eigen::VectorXd row_scale(std::span<const double> w, double gamma, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(w.size()) != rows) {
    throw std::invalid_argument("solver: weight vector length does not match design rows");
  }
  if (!(gamma >= 0.0)) throw std::invalid_argument("solver: gamma must be nonnegative");
  Eigen::VectorXd s(rows);
  for (Eigen::Index j = 0; j < rows; ++j) s(j) = 1.0 + 2.0 * gamma * w[static_cast<std::size_t>(j)];
  return s;
}

struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};

Spectrum spectrum(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending
  return {ev(0), ev(ev.size() - 1)};
}

bool singular(const Spectrum& s) { return !(s.max > 0.0) || s.min <= kSingularRatio * s.max; }

double condition(const Spectrum& s) { return s.max / std::max(s.min, kKappaFloor); }

}  // namespace

Eigen::MatrixXd modulated_normal_matrix(const Eigen::MatrixXd& x, std::span<const double> w,
                                        double gamma) {
  const Eigen::VectorXd s = row_scale(w, gamma, x.rows());
  return x.transpose() * s.asDiagonal() * x;
}

LocalFit solve_local(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     std::span<const double> w, double gamma) {
  if (y.size() != x.rows()) throw std::invalid_argument("solve_local: y length mismatch");
  const Eigen::VectorXd s = row_scale(w, gamma, x.rows());
  const Eigen::MatrixXd m_nor = x.transpose() * s.asDiagonal() * x;

  LocalFit fit;
  const Spectrum sp = spectrum(m_nor);
  fit.lambda_min = sp.min;
  fit.lambda_max = sp.max;
  fit.m_nor_condition = condition(sp);
  if (singular(sp)) return fit;

  Eigen::LLT<Eigen::MatrixXd> llt(m_nor);
  if (llt.info() != Eigen::Success) return fit;

  const Eigen::VectorXd rhs = x.transpose() * s.cwiseProduct(y);
  fit.beta = llt.solve(rhs);
  fit.well_posed = true;

  // ||B||_2^2 = lambda_max(B B^T) with B B^T = X^T diag(s^2) X.
  const Eigen::MatrixXd bbt = x.transpose() * s.cwiseAbs2().asDiagonal() * x;
  fit.operator_norm_bound = std::sqrt(std::max(spectrum(bbt).max, 0.0)) / sp.min;
  fit.summary = local_fit_summaries(x, y, fit.beta);
  return fit;
}

double stability_bound(const Eigen::MatrixXd& x, std::span<const double> w, double gamma) {
  const Eigen::VectorXd s = row_scale(w, gamma, x.rows());
  const Spectrum sp = spectrum(x.transpose() * s.asDiagonal() * x);
  if (singular(sp)) throw std::domain_error("stability_bound: normal matrix is singular");
  const Eigen::MatrixXd bbt = x.transpose() * s.cwiseAbs2().asDiagonal() * x;
  return std::sqrt(std::max(spectrum(bbt).max, 0.0)) / sp.min;
}

FitSummary local_fit_summaries(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& beta) {
  FitSummary out;
  out.residuals = y - x * beta;
  const double n = static_cast<double>(y.size());
  const double sse = out.residuals.squaredNorm();
  out.rmse = std::sqrt(sse / n);

  const bool constant = (y.array() == y(0)).all();
  if (constant) {
    out.r2 = 0.0;
    out.r2_defined = false;
    return out;
  }
  const double sst = (y.array() - y.mean()).square().sum();
  out.r2 = 1.0 - sse / sst;
  out.r2_defined = true;
  return out;
}

double cond_wls2(const Eigen::MatrixXd& x2, std::span<const double> w) {
  if (x2.cols() != 2) throw std::invalid_argument("cond_wls2: design must have two columns");
  if (static_cast<Eigen::Index>(w.size()) != x2.rows()) {
    throw std::invalid_argument("cond_wls2: weight vector length does not match design rows");
  }
  double g00 = 0.0;
  double g01 = 0.0;
  double g11 = 0.0;
  for (Eigen::Index j = 0; j < x2.rows(); ++j) {
    const double wj = w[static_cast<std::size_t>(j)];
    g00 += wj * x2(j, 0) * x2(j, 0);
    g01 += wj * x2(j, 0) * x2(j, 1);
    g11 += wj * x2(j, 1) * x2(j, 1);
  }
  const double mean = 0.5 * (g00 + g11);
  const double radius = std::hypot(0.5 * (g00 - g11), g01);
  const Spectrum sp{std::max(mean - radius, 0.0), mean + radius};
  return condition(sp);
}

}  // namespace gimbal::solver
