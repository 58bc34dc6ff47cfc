#include "acvopt/estimator.hpp"

#include <cmath>

namespace acvopt {

namespace {

void check_dims(const StrategyMatrices& mats, const CovariancePartition& part) {
  const Eigen::Index m = mats.g.size();
  if (mats.G.rows() != m || mats.G.cols() != m || part.c.size() != m || part.C.rows() != m ||
      part.C.cols() != m)
    fail(ErrorCode::DimensionMismatch, "strategy matrices and covariance partition disagree");
}

}  // namespace

VarianceWorkspace::VarianceWorkspace(int m)
    : a_(m, m), b_(m), alpha_(m), resid_(m), ldlt_(m) {}

void VarianceWorkspace::solve_alpha() {
  conditioning_flag_ = false;
  ldlt_.compute(a_);
  bool ok = (ldlt_.info() == Eigen::Success);
  if (ok) {
    alpha_ = ldlt_.solve(-b_);
    resid_.noalias() = a_ * alpha_;
    resid_ += b_;
    const double scale =
        std::max(a_.cwiseAbs().maxCoeff() * alpha_.cwiseAbs().maxCoeff(), b_.cwiseAbs().maxCoeff());
    if (!alpha_.allFinite() || resid_.cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1e-300))
      ok = false;
  }
  if (!ok) {
    // Near-singular Delta covariance: redundant models. Pseudo-inverse with a
    // relative eigenvalue cutoff keeps the solve well defined.
    conditioning_flag_ = true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a_);
    const Eigen::VectorXd& vals = eig.eigenvalues();
    const double cutoff = 1e-12 * vals.cwiseAbs().maxCoeff();
    Eigen::VectorXd proj = eig.eigenvectors().transpose() * (-b_);
    for (Eigen::Index k = 0; k < vals.size(); ++k)
      proj[k] = (std::abs(vals[k]) > cutoff) ? proj[k] / vals[k] : 0.0;
    alpha_ = eig.eigenvectors() * proj;
  }
}

double VarianceWorkspace::optimal(double n0, const StrategyMatrices& mats,
                                  const CovariancePartition& part) {
  a_ = mats.G.cwiseProduct(part.C);
  b_ = mats.g.cwiseProduct(part.c);
  solve_alpha();
  double variance = part.var_q0 / n0 + b_.dot(alpha_);
  if (variance < 0.0) {
    if (variance < -1e-10 * part.var_q0) conditioning_flag_ = true;
    variance = 0.0;
  }
  return variance;
}

Eigen::VectorXd alpha_opt(const StrategyMatrices& mats, const CovariancePartition& part) {
  check_dims(mats, part);
  VarianceWorkspace ws(static_cast<int>(mats.g.size()));
  ws.a_ = mats.G.cwiseProduct(part.C);
  ws.b_ = mats.g.cwiseProduct(part.c);
  ws.solve_alpha();
  return ws.alpha_;
}

double variance_with_alpha(const Eigen::VectorXd& alpha, double n0, const StrategyMatrices& mats,
                           const CovariancePartition& part) {
  check_dims(mats, part);
  if (alpha.size() != mats.g.size())
    fail(ErrorCode::DimensionMismatch, "alpha length mismatch");
  if (!(n0 > 0.0)) fail(ErrorCode::ZeroSubsetSize, "n0 must be positive");
  const Eigen::MatrixXd a = mats.G.cwiseProduct(part.C);
  const Eigen::VectorXd b = mats.g.cwiseProduct(part.c);
  return part.var_q0 / n0 + alpha.dot(a * alpha) + 2.0 * alpha.dot(b);
}

VarianceReport variance_optimal(double n0, const StrategyMatrices& mats,
                                const CovariancePartition& part) {
  check_dims(mats, part);
  if (!(n0 > 0.0)) fail(ErrorCode::ZeroSubsetSize, "n0 must be positive");
  VarianceWorkspace ws(static_cast<int>(mats.g.size()));
  VarianceReport report;
  report.variance = ws.optimal(n0, mats, part);
  report.alpha = ws.alpha();
  report.covariance_delta = mats.G.cwiseProduct(part.C);
  report.covariance_delta_q0 = mats.g.cwiseProduct(part.c);
  report.conditioning_flag = ws.conditioning_flag();
  return report;
}

McBaseline mc_baseline_variance(double var_q0, double budget, double w0) {
  if (!(w0 > 0.0)) fail(ErrorCode::NonpositiveCost, "w0 must be positive");
  const double n0 = std::floor(budget / w0);
  if (n0 < 1.0)
    fail(ErrorCode::BudgetTooSmall, "budget " + std::to_string(budget) +
                                        " buys no pilot sample at cost " + std::to_string(w0));
  McBaseline result;
  result.n0 = static_cast<long long>(n0);
  result.variance = var_q0 / n0;
  return result;
}

}  // namespace acvopt
