#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "acvopt/errors.hpp"

namespace acvopt {

// The problem statement: joint covariance of the high-fidelity model Q0 and
// the M low-fidelity models Q1..QM, per-evaluation costs, display labels.
struct ModelSuite {
  Eigen::MatrixXd covariance;       // (M+1) x (M+1)
  Eigen::VectorXd costs;            // M+1, strictly positive, index 0 = high fidelity
  std::vector<std::string> labels;  // M+1

  int m() const { return static_cast<int>(covariance.rows()) - 1; }  // low-fidelity count
};

// Blocks of the suite covariance as used by every variance formula:
// var_q0 = Cov[Q0,Q0], c_i = Cov[Q_i,Q0], C = low-fidelity block.
struct CovariancePartition {
  double var_q0 = 0.0;
  Eigen::VectorXd c;  // length M
  Eigen::MatrixXd C;  // M x M
};

ModelSuite validate_suite(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& costs,
                          std::vector<std::string> labels = {});

CovariancePartition partition_covariance(const ModelSuite& suite);

// Restriction of a suite to the given models. `models` must be strictly
// ascending and start with 0 (the high-fidelity model is always kept).
ModelSuite subset_suite(const ModelSuite& suite, const std::vector<int>& models);

}  // namespace acvopt
