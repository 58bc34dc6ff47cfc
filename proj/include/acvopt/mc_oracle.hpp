#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "acvopt/model_suite.hpp"
#include "acvopt/recursion.hpp"
#include "acvopt/strategies.hpp"

namespace acvopt {

enum class SamplerKind { Gaussian, Monomial };

// Models with exactly known joint statistics. Gaussian suites draw joint
// output vectors with the suite's covariance; the monomial sampler evaluates
// Q_i(z) = z^(5-i) at shared z ~ U(0,1).
struct SyntheticSuite {
  ModelSuite suite;
  Eigen::VectorXd mean;
  SamplerKind sampler = SamplerKind::Gaussian;
};

SyntheticSuite gaussian_synthetic(const ModelSuite& suite);  // mean_i = i
SyntheticSuite gaussian_synthetic(const ModelSuite& suite, const Eigen::VectorXd& mean);
SyntheticSuite monomial_synthetic();

struct ExecutionPlan {
  StrategyKind kind = StrategyKind::GMF;
  Beta beta;
  std::vector<long long> counts;  // M+1 integer subset sizes
  Eigen::VectorXd alpha;
};

struct SimulationSummary {
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
  Eigen::VectorXd component_mean;  // sample mean of (Q0_hat, Delta_1..Delta_M)
  Eigen::MatrixXd component_cov;   // sample covariance of the same vector
  long long replicates = 0;
};

SimulationSummary simulate_estimator(const SyntheticSuite& synth, const ExecutionPlan& plan,
                                     long long replicates, std::uint64_t seed, int jobs = 1);

struct VerificationReport {
  double analytic = 0.0;
  double empirical = 0.0;
  double standard_error = 0.0;
  double zscore = 0.0;
  bool pass = false;
};

VerificationReport verify_against_analytic(const SyntheticSuite& synth, const ExecutionPlan& plan,
                                           long long replicates, std::uint64_t seed,
                                           int jobs = 1);

}  // namespace acvopt
