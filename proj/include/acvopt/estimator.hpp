#pragma once

#include <Eigen/Dense>

#include "acvopt/model_suite.hpp"
#include "acvopt/strategies.hpp"

namespace acvopt {

struct VarianceReport {
  double variance = 0.0;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd covariance_delta;     // Cov[Delta, Delta] = G o C
  Eigen::VectorXd covariance_delta_q0;  // Cov[Delta, Q0_hat] = g o c
  bool conditioning_flag = false;
};

struct McBaseline {
  long long n0 = 0;
  double variance = 0.0;
};

Eigen::VectorXd alpha_opt(const StrategyMatrices& mats, const CovariancePartition& part);

double variance_with_alpha(const Eigen::VectorXd& alpha, double n0, const StrategyMatrices& mats,
                           const CovariancePartition& part);

VarianceReport variance_optimal(double n0, const StrategyMatrices& mats,
                                const CovariancePartition& part);

McBaseline mc_baseline_variance(double var_q0, double budget, double w0);

// Scratch buffers for the optimizer's inner loop: same math as
// variance_optimal but without per-call allocation.
class VarianceWorkspace {
 public:
  explicit VarianceWorkspace(int m);

  double optimal(double n0, const StrategyMatrices& mats, const CovariancePartition& part);

  const Eigen::VectorXd& alpha() const { return alpha_; }
  bool conditioning_flag() const { return conditioning_flag_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd resid_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool conditioning_flag_ = false;

  friend Eigen::VectorXd alpha_opt(const StrategyMatrices&, const CovariancePartition&);
  void solve_alpha();
};

}  // namespace acvopt
