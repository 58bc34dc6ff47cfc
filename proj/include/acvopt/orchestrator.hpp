#pragma once

#include <map>
#include <string>
#include <vector>

#include "acvopt/model_suite.hpp"
#include "acvopt/optimizer.hpp"
#include "acvopt/recursion.hpp"

namespace acvopt {

enum class FamilyKind { FixedChain, FixedZeros, KL, SR, MR };

struct AlgorithmSpec {
  std::string name;
  bool is_mc = false;
  StrategyKind kind = StrategyKind::GMF;
  FamilyKind family = FamilyKind::FixedZeros;
  AlphaMode alpha_mode = AlphaMode::Optimal;
  bool ordering_constraint = false;
};

// Table 1 names plus MC.
const std::vector<std::string>& algorithm_names();
AlgorithmSpec make_algorithm_spec(const std::string& name);

struct CandidateRecord {
  unsigned subset_mask = 0;  // bit j set <=> model j participates; bit 0 always
  Beta beta;                 // in original model indices
  double variance = 0.0;
  double actual_cost = 0.0;
  bool feasible = false;
};

struct AlgorithmResult {
  std::string algorithm;
  bool ams = false;
  SubOptResult best;
  unsigned subset_mask = 0;
  std::vector<int> subset;              // original model indices, ascending
  Beta beta;                            // winning beta, original indices
  std::vector<long long> counts_full;   // length M+1, zero for excluded models
  double runtime_ms = 0.0;
  std::vector<CandidateRecord> all_candidates;
};

AlgorithmResult run_algorithm(const AlgorithmSpec& spec, const ModelSuite& suite, double budget,
                              const OptimizationOptions& opts = {}, int jobs = 1);

AlgorithmResult run_with_model_selection(const AlgorithmSpec& spec, const ModelSuite& suite,
                                         double budget, const OptimizationOptions& opts = {},
                                         int jobs = 1);

std::vector<AlgorithmResult> compare_algorithms(const std::vector<AlgorithmSpec>& specs,
                                                const ModelSuite& suite, double budget, bool ams,
                                                const OptimizationOptions& opts = {},
                                                int jobs = 1);

// Ascending variance with the same deterministic tie-break compare_algorithms uses.
void sort_results(std::vector<AlgorithmResult>& results);

// D-bar: average fractional excess over the per-scenario best variance.
std::map<std::string, double> mean_relative_deviation(
    const std::map<std::string, std::vector<double>>& per_algorithm_variances);

}  // namespace acvopt
