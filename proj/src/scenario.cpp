#include "acvopt/scenario.hpp"

#include <cmath>

namespace acvopt {

Scenario monomial_suite(MonomialScenario scenario) {
  const int d = 5;
  Eigen::MatrixXd cov(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      cov(i, j) = 1.0 / (11.0 - i - j) -
                  1.0 / ((6.0 - i) * (6.0 - j));

  Eigen::VectorXd costs(d);
  costs[0] = 1.0;
  for (int i = 1; i < d; ++i)
    costs[i] = std::pow(10.0, scenario == MonomialScenario::NoCostGap ? -i : -i - 1);

  Scenario out;
  out.suite = validate_suite(cov, costs);
  out.budget = 20.0;
  return out;
}

Eigen::MatrixXd sample_lkj_correlation(int dimension, double eta, Rng& rng) {
  if (dimension < 2) fail(ErrorCode::BadInput, "LKJ dimension must be at least 2");
  if (!(eta > 0.0)) fail(ErrorCode::BadInput, "LKJ eta must be positive");

  double beta = eta + (dimension - 2) / 2.0;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(dimension, dimension);
  const double r12 = 2.0 * rng.beta(beta, beta) - 1.0;
  corr(0, 1) = corr(1, 0) = r12;

  for (int k = 2; k < dimension; ++k) {
    beta -= 0.5;
    const double y = rng.beta(k / 2.0, beta);

    Eigen::VectorXd u(k);
    double norm2 = 0.0;
    do {
      for (int i = 0; i < k; ++i) u[i] = rng.normal();
      norm2 = u.squaredNorm();
    } while (!(norm2 > 0.0));
    u /= std::sqrt(norm2);

    const Eigen::MatrixXd head = corr.topLeftCorner(k, k);
    Eigen::VectorXd w = std::sqrt(y) * u;
    Eigen::LLT<Eigen::MatrixXd> llt(head);
    Eigen::VectorXd z;
    if (llt.info() == Eigen::Success) {
      z = llt.matrixL() * w;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(head);
      z = eig.eigenvectors() *
          eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
          eig.eigenvectors().transpose() * w;
    }
    corr.col(k).head(k) = z;
    corr.row(k).head(k) = z.transpose();
  }
  return corr;
}

Scenario random_scenario(const ScenarioConfig& config, Rng& rng) {
  const int d = config.num_models_total;
  if (d < 2 || d > 6)
    fail(ErrorCode::BadInput, "num_models_total must be in 2..6");

  const Eigen::MatrixXd corr = sample_lkj_correlation(d, config.eta, rng);

  Eigen::VectorXd variances(d);
  variances[0] = config.var_q0;
  for (int i = 1; i < d; ++i)
    variances[i] = rng.uniform(config.var_low_min, config.var_low_max);

  const Eigen::VectorXd scale = variances.cwiseSqrt();
  Eigen::MatrixXd cov(d, d);
  for (int i = 0; i < d; ++i) {
    cov(i, i) = variances[i];
    for (int j = i + 1; j < d; ++j) cov(i, j) = cov(j, i) = scale[i] * scale[j] * corr(i, j);
  }

  Eigen::VectorXd costs(d);
  costs[0] = config.w0_fraction * config.total_budget;
  for (int i = 1; i < d; ++i)
    costs[i] =
        costs[0] *
        std::pow(10.0, rng.uniform(config.log10_cost_ratio_min, config.log10_cost_ratio_max));

  Scenario out;
  out.suite = validate_suite(cov, costs);
  out.budget = config.total_budget;
  return out;
}

}  // namespace acvopt
