#pragma once

#include <Eigen/Dense>
#include <string>

#include "acvopt/recursion.hpp"

namespace acvopt {

enum class StrategyKind { GMF, GRD, GIS };

const char* strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(const std::string& name);

// Sample-subset bookkeeping in the fixed order z0, z1*, z1, ..., zM*, zM,
// i.e. subset index 0 for z0, 2i-1 for zi*, 2i for zi. Union counts follow
// from subset and intersection sizes, so only those are stored.
struct AllocationCounts {
  double total = 0.0;
  Eigen::VectorXd subset;
  Eigen::MatrixXd intersect;

  int m() const { return static_cast<int>((subset.size() - 1) / 2); }
  double union_count(Eigen::Index s, Eigen::Index t) const {
    return subset[s] + subset[t] - intersect(s, t);
  }
};

struct StrategyMatrices {
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
};

// Explicit subset counts realizing a strategy's allocation, suitable for
// build_general_matrices and for laying out simulation sample streams.
AllocationCounts strategy_counts(StrategyKind kind, const Eigen::VectorXd& n, const Beta& beta);

StrategyMatrices build_general_matrices(const AllocationCounts& counts);

StrategyMatrices build_strategy_matrices(StrategyKind kind, const Eigen::VectorXd& n,
                                         const Beta& beta);

// Hot-path variant for the optimizer: writes into preallocated matrices and
// skips input validation (caller guarantees positive n and a valid beta).
void fill_strategy_matrices(StrategyKind kind, const Eigen::VectorXd& n, const Beta& beta,
                            StrategyMatrices& out);

Eigen::VectorXd eval_counts(StrategyKind kind, const Eigen::VectorXd& n, const Beta& beta);

double estimator_cost(const Eigen::VectorXd& eval_counts, const Eigen::VectorXd& costs);

}  // namespace acvopt
