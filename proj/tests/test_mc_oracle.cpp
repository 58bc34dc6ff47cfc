#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "acvopt/estimator.hpp"
#include "acvopt/mc_oracle.hpp"
#include "acvopt/scenario.hpp"
#include "test_support.hpp"

using namespace acvopt;
using testsupport::capture_error;

namespace {

ExecutionPlan scalar_plan(double alpha_value) {
  ExecutionPlan plan;
  plan.kind = StrategyKind::GMF;
  plan.beta = {0};
  plan.counts = {10, 100};
  plan.alpha.resize(1);
  plan.alpha << alpha_value;
  return plan;
}

ModelSuite mlmc_suite() {
  Eigen::MatrixXd cov(3, 3);
  cov << 1.3, 0.8, 0.4,
         0.8, 2.0, 0.3,
         0.4, 0.3, 1.5;
  Eigen::VectorXd costs(3);
  costs << 1.0, 0.1, 0.01;
  return validate_suite(cov, costs);
}

Eigen::VectorXd optimal_alpha_for(const ModelSuite& suite, const ExecutionPlan& plan) {
  const Eigen::VectorXd counts_real =
      Eigen::Map<const Eigen::Matrix<long long, Eigen::Dynamic, 1>>(
          plan.counts.data(), static_cast<Eigen::Index>(plan.counts.size()))
          .cast<double>();
  const StrategyMatrices mats = build_strategy_matrices(plan.kind, counts_real, plan.beta);
  return alpha_opt(mats, partition_covariance(suite));
}

}  // namespace

TEST_CASE("the simulated scalar estimator matches its analytic variance") {
  const ModelSuite suite = testsupport::rho_suite(0.9, 0.1);
  const SyntheticSuite synth = gaussian_synthetic(suite);
  const VerificationReport report =
      verify_against_analytic(synth, scalar_plan(-0.9), 200000, 31337);
  CHECK(report.analytic == doctest::Approx(0.0271).epsilon(1e-12));
  CHECK(report.standard_error > 0.0);
  CHECK(std::abs(report.zscore) <= 4.0);
  CHECK(report.pass);

  // The empirical estimate discriminates: against corrupted references the
  // z-score blows up.
  const double z_corrupt =
      std::abs(report.empirical - 1.2 * report.analytic) / report.standard_error;
  CHECK(z_corrupt > 4.0);
  const double z_mc = std::abs(report.empirical - 0.1) / report.standard_error;
  CHECK(z_mc > 4.0);
}

TEST_CASE("a zero alpha reduces the plan to plain MC on the root model") {
  const ModelSuite suite = testsupport::rho_suite(0.9, 0.1);
  const SyntheticSuite synth = gaussian_synthetic(suite);
  const VerificationReport report =
      verify_against_analytic(synth, scalar_plan(0.0), 50000, 777);
  CHECK(report.analytic == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(report.pass);
}

TEST_CASE("the multilevel difference plan verifies against the hand value") {
  const ModelSuite suite = mlmc_suite();
  ExecutionPlan plan;
  plan.kind = StrategyKind::GRD;
  plan.beta = {0, 1};
  plan.counts = {10, 100, 1000};
  plan.alpha.resize(2);
  plan.alpha << -1.0, -1.0;
  const VerificationReport report =
      verify_against_analytic(gaussian_synthetic(suite), plan, 30000, 2024);
  CHECK(report.analytic == doctest::Approx(0.2005).epsilon(1e-12));
  CHECK(report.pass);
}

TEST_CASE("a GIS plan with optimal alpha verifies too") {
  const ModelSuite suite = mlmc_suite();
  ExecutionPlan plan;
  plan.kind = StrategyKind::GIS;
  plan.beta = {0, 0};
  plan.counts = {30, 50, 120};
  plan.alpha = optimal_alpha_for(suite, plan);
  const VerificationReport report =
      verify_against_analytic(gaussian_synthetic(suite), plan, 30000, 551);
  CHECK(report.pass);
}

TEST_CASE("estimator means stay unbiased for every strategy") {
  const ModelSuite suite = mlmc_suite();
  Eigen::VectorXd mean(3);
  mean << 2.5, -1.0, 0.75;
  const SyntheticSuite synth = gaussian_synthetic(suite, mean);

  for (StrategyKind kind : {StrategyKind::GMF, StrategyKind::GRD, StrategyKind::GIS}) {
    ExecutionPlan plan;
    plan.kind = kind;
    plan.beta = {0, 1};
    plan.counts = {25, 40, 90};
    plan.alpha = optimal_alpha_for(suite, plan);
    const SimulationSummary summary = simulate_estimator(synth, plan, 20000, 4096 + (int)kind);
    CHECK(std::abs(summary.mean - 2.5) <= 4.0 * summary.se_mean);
    CHECK(summary.replicates == 20000);
  }

  const SyntheticSuite monomial = monomial_synthetic();
  CHECK(monomial.suite.m() == 4);
  for (int i = 0; i < 5; ++i)
    CHECK(monomial.mean[i] == doctest::Approx(1.0 / (6.0 - i)).epsilon(1e-14));
  ExecutionPlan plan;
  plan.kind = StrategyKind::GMF;
  plan.beta = {0, 1, 2, 3};
  plan.counts = {20, 30, 60, 100, 200};
  plan.alpha = optimal_alpha_for(monomial.suite, plan);
  const SimulationSummary summary = simulate_estimator(monomial, plan, 20000, 8181);
  CHECK(std::abs(summary.mean - 1.0 / 6.0) <= 4.0 * summary.se_mean);

  const SyntheticSuite defaulted = gaussian_synthetic(suite);
  for (int i = 0; i < 3; ++i) CHECK(defaulted.mean[i] == static_cast<double>(i));
}

TEST_CASE("component covariances land on the allocation matrices") {
  const ModelSuite suite = testsupport::rho_suite(0.9, 0.1);
  const SyntheticSuite synth = gaussian_synthetic(suite);
  const SimulationSummary summary =
      simulate_estimator(synth, scalar_plan(-0.9), 200000, 90210);
  REQUIRE(summary.component_mean.size() == 2);
  REQUIRE(summary.component_cov.rows() == 2);
  // Var(Q0_hat) = var_q0/N0, Var(Delta_1) = G(0,0) C(0,0), Cov = g(0) c(0).
  CHECK(std::abs(summary.component_cov(0, 0) - 0.1) <= 0.003);
  CHECK(std::abs(summary.component_cov(1, 1) - 0.09) <= 0.003);
  CHECK(std::abs(summary.component_cov(0, 1) - 0.081) <= 0.003);
  CHECK(summary.component_cov(0, 1) == summary.component_cov(1, 0));
  CHECK(std::abs(summary.component_mean[0] - 0.0) <= 4.0 * std::sqrt(0.1 / 200000.0));
}

TEST_CASE("simulation rejects malformed plans") {
  const ModelSuite suite = mlmc_suite();
  const SyntheticSuite synth = gaussian_synthetic(suite);
  ExecutionPlan good;
  good.kind = StrategyKind::GRD;
  good.beta = {0, 1};
  good.counts = {10, 20, 30};
  good.alpha = Eigen::VectorXd::Zero(2);

  CHECK(capture_error([&] { simulate_estimator(synth, good, 999, 1); }) == ErrorCode::BadInput);

  ExecutionPlan bad = good;
  bad.counts = {10, 20};
  CHECK(capture_error([&] { simulate_estimator(synth, bad, 2000, 1); }) ==
        ErrorCode::InconsistentPlan);

  bad = good;
  bad.counts = {10, 0, 30};
  CHECK(capture_error([&] { simulate_estimator(synth, bad, 2000, 1); }) ==
        ErrorCode::InconsistentPlan);

  bad = good;
  bad.beta = {2, 1};
  CHECK(capture_error([&] { simulate_estimator(synth, bad, 2000, 1); }) ==
        ErrorCode::InconsistentPlan);

  bad = good;
  bad.alpha = Eigen::VectorXd::Zero(3);
  CHECK(capture_error([&] { simulate_estimator(synth, bad, 2000, 1); }) ==
        ErrorCode::InconsistentPlan);
}

TEST_CASE("results do not depend on the worker count") {
  const ModelSuite suite = mlmc_suite();
  const SyntheticSuite synth = gaussian_synthetic(suite);
  ExecutionPlan plan;
  plan.kind = StrategyKind::GIS;
  plan.beta = {0, 1};
  plan.counts = {15, 25, 50};
  plan.alpha = optimal_alpha_for(suite, plan);

  const SimulationSummary solo = simulate_estimator(synth, plan, 20000, 424242, 1);
  const SimulationSummary pooled = simulate_estimator(synth, plan, 20000, 424242, 3);
  CHECK(solo.mean == pooled.mean);
  CHECK(solo.variance == pooled.variance);
  CHECK(solo.se_variance == pooled.se_variance);
  CHECK(testsupport::exact_equal(solo.component_cov, pooled.component_cov));

  const SimulationSummary reseeded = simulate_estimator(synth, plan, 20000, 424243, 1);
  CHECK(solo.variance != reseeded.variance);
}
