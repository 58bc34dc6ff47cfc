#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "acvopt/model_suite.hpp"
#include "acvopt/rng.hpp"

namespace acvopt {

enum class MonomialScenario { NoCostGap, CostGap };

struct Scenario {
  ModelSuite suite;
  double budget = 0.0;
};

// The five-model monomial family Q_i(z) = z^(5-i), z ~ U(0,1), with
// closed-form covariance and a target cost of 20.
Scenario monomial_suite(MonomialScenario scenario);

struct ScenarioConfig {
  int num_models_total = 4;  // in {2..6}
  double eta = 1.0;
  double var_q0 = 1.0;
  double var_low_min = 0.1;
  double var_low_max = 1.5;
  double total_budget = 1.0;
  double w0_fraction = 0.01;
  double log10_cost_ratio_min = -6.0;
  double log10_cost_ratio_max = 0.0;
  std::uint64_t seed = 0;
};

// Onion-method LKJ sampler: rejection-free, exact for any eta > 0.
Eigen::MatrixXd sample_lkj_correlation(int dimension, double eta, Rng& rng);

Scenario random_scenario(const ScenarioConfig& config, Rng& rng);

}  // namespace acvopt
