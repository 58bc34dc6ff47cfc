#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <vector>

#include "acvopt/estimator.hpp"
#include "acvopt/model_suite.hpp"
#include "acvopt/strategies.hpp"

namespace acvopt {

enum class AlphaMode { Optimal, FixedMinusOne };

struct OptimizationOptions {
  double stage1_tolerance = 1e-10;
  int stage1_max_iters = 100;
  double stage2_tolerance = 1e-12;   // serves as both fatol and xatol
  int stage2_evals_per_model = 500;  // evaluation cap is 500 * M
  double penalty_scale = 1e16;
  double gradient_step = 1e-6;       // relative central-difference step
  Eigen::VectorXd initial_ratios;    // empty means r_i = i + 1
};

struct SubOptResult {
  std::vector<long long> counts;  // M+1 integer sample counts
  double variance = std::numeric_limits<double>::infinity();
  double actual_cost = 0.0;
  Eigen::VectorXd alpha;
  bool feasible = false;
  ErrorCode failure = ErrorCode::Infeasible;  // meaningful only when !feasible
  std::array<double, 3> stage_trace{};        // objective at start, stage 1, stage 2
  double relaxed_variance = std::numeric_limits<double>::infinity();
  Eigen::VectorXd relaxed_counts;
  bool conditioning_flag = false;
};

// Ratios r_i = N_i/N_0 (r_0 = 1) to real-valued counts that spend the budget
// exactly: N_0 = budget / (w_0 + sum_i w_i r_{i* u i}).
Eigen::VectorXd counts_from_ratios(const Eigen::VectorXd& r, double budget,
                                   const ModelSuite& suite, StrategyKind kind, const Beta& beta);

// Floor to integers, repair GMF |N_beta - N| > 1 violations by decrementing
// the smaller of the pair, recompute variance and cost. Throws Infeasible or
// DegenerateBudget when no valid integer allocation remains.
SubOptResult floor_allocation(const Eigen::VectorXd& relaxed_counts, const ModelSuite& suite,
                              StrategyKind kind, const Beta& beta,
                              double budget = std::numeric_limits<double>::infinity(),
                              AlphaMode alpha_mode = AlphaMode::Optimal);

SubOptResult optimize_suballocation(const ModelSuite& suite, StrategyKind kind, const Beta& beta,
                                    double budget, const OptimizationOptions& opts = {},
                                    AlphaMode alpha_mode = AlphaMode::Optimal,
                                    bool ordering_constraint = false);

}  // namespace acvopt
