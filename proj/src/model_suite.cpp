#include "acvopt/model_suite.hpp"

#include <cstdio>

namespace acvopt {

namespace {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6e", value);
  return buf;
}

}  // namespace

ModelSuite validate_suite(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& costs,
                          std::vector<std::string> labels) {
  const Eigen::Index n = covariance.rows();
  if (n < 1 || covariance.cols() != n)
    fail(ErrorCode::DimensionMismatch, "covariance must be a nonempty square matrix");
  if (costs.size() != n)
    fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(n) + " costs, got " +
                                           std::to_string(costs.size()));
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != n)
    fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(n) + " labels, got " +
                                           std::to_string(labels.size()));

  const double scale = covariance.cwiseAbs().maxCoeff();
  const double asymmetry = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > 1e-12 * scale)
    fail(ErrorCode::AsymmetricCovariance,
         "max |A - A^T| = " + format_double(asymmetry) + " exceeds 1e-12 relative");

  ModelSuite suite;
  suite.covariance = 0.5 * (covariance + covariance.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(suite.covariance,
                                                             Eigen::EigenvaluesOnly);
  const double lambda_min = eigensolver.eigenvalues().minCoeff();
  const double lambda_max = eigensolver.eigenvalues().maxCoeff();
  if (lambda_min < -1e-10 * std::max(lambda_max, 0.0))
    fail(ErrorCode::NotPositiveSemidefinite,
         "smallest eigenvalue " + format_double(lambda_min));

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(costs[i] > 0.0))
      fail(ErrorCode::NonpositiveCost,
           "cost[" + std::to_string(i) + "] = " + format_double(costs[i]));
  }
  suite.costs = costs;

  if (labels.empty()) {
    labels.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) labels.push_back("Q" + std::to_string(i));
  }
  suite.labels = std::move(labels);
  return suite;
}

CovariancePartition partition_covariance(const ModelSuite& suite) {
  const int m = suite.m();
  CovariancePartition part;
  part.var_q0 = suite.covariance(0, 0);
  part.c = suite.covariance.col(0).tail(m);
  part.C = suite.covariance.bottomRightCorner(m, m);
  return part;
}

ModelSuite subset_suite(const ModelSuite& suite, const std::vector<int>& models) {
  const int n = static_cast<int>(suite.covariance.rows());
  if (models.empty() || models.front() != 0)
    fail(ErrorCode::BadInput, "subset must contain model 0 first");
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (models[k] < 0 || models[k] >= n)
      fail(ErrorCode::BadInput, "subset model index out of range");
    if (k > 0 && models[k] <= models[k - 1])
      fail(ErrorCode::BadInput, "subset model indices must be strictly ascending");
  }

  const int sub_n = static_cast<int>(models.size());
  ModelSuite sub;
  sub.covariance.resize(sub_n, sub_n);
  sub.costs.resize(sub_n);
  sub.labels.reserve(models.size());
  for (int i = 0; i < sub_n; ++i) {
    sub.costs[i] = suite.costs[models[static_cast<std::size_t>(i)]];
    sub.labels.push_back(suite.labels[static_cast<std::size_t>(models[static_cast<std::size_t>(i)])]);
    for (int j = 0; j < sub_n; ++j)
      sub.covariance(i, j) = suite.covariance(models[static_cast<std::size_t>(i)],
                                              models[static_cast<std::size_t>(j)]);
  }
  return sub;
}

}  // namespace acvopt
