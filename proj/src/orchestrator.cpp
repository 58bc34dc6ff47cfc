#include "acvopt/orchestrator.hpp"

#include <algorithm>
#include <chrono>

#include "acvopt/estimator.hpp"
#include "acvopt/parallel.hpp"

namespace acvopt {

namespace {

struct Task {
  unsigned mask = 0;
  std::vector<int> subset;  // original indices
  Beta beta_local;
  Beta beta_original;
};

Beta map_beta(const Beta& local, const std::vector<int>& subset) {
  Beta mapped(local.size());
  for (std::size_t k = 0; k < local.size(); ++k)
    mapped[k] = subset[static_cast<std::size_t>(local[k])];
  return mapped;
}

std::vector<Beta> family_betas(const AlgorithmSpec& spec, int m) {
  switch (spec.family) {
    case FamilyKind::FixedChain: {
      Beta chain(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) chain[static_cast<std::size_t>(i)] = i;
      return {chain};
    }
    case FamilyKind::FixedZeros:
      return {Beta(static_cast<std::size_t>(m), 0)};
    case FamilyKind::KL:
      return enumerate_trees(TreeFamily::KL, m);
    case FamilyKind::SR:
      return enumerate_trees(TreeFamily::SR, m);
    case FamilyKind::MR:
      return enumerate_trees(TreeFamily::MR, m);
  }
  fail(ErrorCode::BadInput, "unknown recursion family");
}

// True when lhs beats rhs under the deterministic tie-break:
// (variance, actual_cost, lexicographic beta, subset mask).
bool better_candidate(const SubOptResult& lhs, const Beta& lhs_beta, unsigned lhs_mask,
                      const SubOptResult& rhs, const Beta& rhs_beta, unsigned rhs_mask) {
  if (lhs.variance != rhs.variance) return lhs.variance < rhs.variance;
  if (lhs.actual_cost != rhs.actual_cost) return lhs.actual_cost < rhs.actual_cost;
  if (lhs_beta != rhs_beta)
    return std::lexicographical_compare(lhs_beta.begin(), lhs_beta.end(), rhs_beta.begin(),
                                        rhs_beta.end());
  return lhs_mask < rhs_mask;
}

SubOptResult mc_result(const ModelSuite& suite, double budget) {
  const McBaseline base = mc_baseline_variance(suite.covariance(0, 0), budget, suite.costs[0]);
  SubOptResult result;
  result.counts = {base.n0};
  result.variance = base.variance;
  result.actual_cost = static_cast<double>(base.n0) * suite.costs[0];
  if (result.actual_cost > budget) result.actual_cost = budget;
  result.alpha.resize(0);
  result.feasible = true;
  result.relaxed_variance = base.variance;
  result.relaxed_counts = Eigen::VectorXd::Constant(1, static_cast<double>(base.n0));
  result.stage_trace = {base.variance, base.variance, base.variance};
  return result;
}

AlgorithmResult reduce_tasks(const AlgorithmSpec& spec, const ModelSuite& suite, double budget,
                             const OptimizationOptions& opts, int jobs,
                             const std::vector<Task>& tasks, bool ams) {
  const auto start = std::chrono::steady_clock::now();
  const int m_total = suite.m();

  // Sub-suites are shared per subset; build them once.
  std::map<unsigned, ModelSuite> sub_suites;
  for (const auto& task : tasks)
    if (!task.subset.empty() && !sub_suites.count(task.mask))
      sub_suites.emplace(task.mask, subset_suite(suite, task.subset));

  std::vector<SubOptResult> outcomes(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t k) {
    const Task& task = tasks[k];
    if (task.beta_local.empty()) {
      try {
        outcomes[k] = mc_result(suite, budget);
      } catch (const Error& e) {
        outcomes[k].feasible = false;
        outcomes[k].failure = e.code();
      }
      return;
    }
    outcomes[k] = optimize_suballocation(sub_suites.at(task.mask), spec.kind, task.beta_local,
                                         budget, opts, spec.alpha_mode, spec.ordering_constraint);
  });

  AlgorithmResult result;
  result.algorithm = spec.name;
  result.ams = ams;
  result.all_candidates.reserve(tasks.size());

  std::size_t winner = tasks.size();
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    CandidateRecord rec;
    rec.subset_mask = tasks[k].mask;
    rec.beta = tasks[k].beta_original;
    rec.variance = outcomes[k].variance;
    rec.actual_cost = outcomes[k].actual_cost;
    rec.feasible = outcomes[k].feasible;
    result.all_candidates.push_back(std::move(rec));
    if (!outcomes[k].feasible) continue;
    if (winner == tasks.size() ||
        better_candidate(outcomes[k], tasks[k].beta_original, tasks[k].mask, outcomes[winner],
                         tasks[winner].beta_original, tasks[winner].mask))
      winner = k;
  }
  if (winner == tasks.size())
    fail(ErrorCode::AllInfeasible,
         "no feasible allocation for " + spec.name + " at budget " + std::to_string(budget));

  result.best = outcomes[winner];
  result.subset_mask = tasks[winner].mask;
  result.subset = tasks[winner].subset;
  result.beta = tasks[winner].beta_original;
  result.counts_full.assign(static_cast<std::size_t>(m_total) + 1, 0);
  for (std::size_t k = 0; k < result.best.counts.size(); ++k)
    result.counts_full[static_cast<std::size_t>(result.subset[k])] = result.best.counts[k];

  result.runtime_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return result;
}

std::vector<Task> tasks_for_subset(const AlgorithmSpec& spec, unsigned mask,
                                   const std::vector<int>& subset) {
  std::vector<Task> tasks;
  const int m_sub = static_cast<int>(subset.size()) - 1;
  if (m_sub == 0) {
    Task task;
    task.mask = mask;
    task.subset = subset;
    tasks.push_back(std::move(task));
    return tasks;
  }
  for (auto& beta : family_betas(spec, m_sub)) {
    Task task;
    task.mask = mask;
    task.subset = subset;
    task.beta_original = map_beta(beta, subset);
    task.beta_local = std::move(beta);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

}  // namespace

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names = {
      "MC",    "MLMC",  "WRDIFF", "GRDSR", "GRDMR",  "ACVIS", "GISSR",
      "GISMR", "MFMC",  "ACVMF",  "ACVKL", "ACVMFU", "GMFSR", "GMFMR"};
  return names;
}

AlgorithmSpec make_algorithm_spec(const std::string& name) {
  AlgorithmSpec spec;
  spec.name = name;
  if (name == "MC") {
    spec.is_mc = true;
  } else if (name == "MLMC") {
    spec.kind = StrategyKind::GRD;
    spec.family = FamilyKind::FixedChain;
    spec.alpha_mode = AlphaMode::FixedMinusOne;
  } else if (name == "WRDIFF") {
    spec.kind = StrategyKind::GRD;
    spec.family = FamilyKind::FixedChain;
  } else if (name == "GRDSR") {
    spec.kind = StrategyKind::GRD;
    spec.family = FamilyKind::SR;
  } else if (name == "GRDMR") {
    spec.kind = StrategyKind::GRD;
    spec.family = FamilyKind::MR;
  } else if (name == "ACVIS") {
    spec.kind = StrategyKind::GIS;
    spec.family = FamilyKind::FixedZeros;
  } else if (name == "GISSR") {
    spec.kind = StrategyKind::GIS;
    spec.family = FamilyKind::SR;
  } else if (name == "GISMR") {
    spec.kind = StrategyKind::GIS;
    spec.family = FamilyKind::MR;
  } else if (name == "MFMC") {
    spec.kind = StrategyKind::GMF;
    spec.family = FamilyKind::FixedChain;
    spec.ordering_constraint = true;
  } else if (name == "ACVMF") {
    spec.kind = StrategyKind::GMF;
    spec.family = FamilyKind::FixedZeros;
    spec.ordering_constraint = true;
  } else if (name == "ACVKL") {
    spec.kind = StrategyKind::GMF;
    spec.family = FamilyKind::KL;
    spec.ordering_constraint = true;
  } else if (name == "ACVMFU") {
    spec.kind = StrategyKind::GMF;
    spec.family = FamilyKind::FixedZeros;
  } else if (name == "GMFSR") {
    spec.kind = StrategyKind::GMF;
    spec.family = FamilyKind::SR;
  } else if (name == "GMFMR") {
    spec.kind = StrategyKind::GMF;
    spec.family = FamilyKind::MR;
  } else {
    std::string valid;
    for (const auto& n : algorithm_names()) valid += (valid.empty() ? "" : ", ") + n;
    fail(ErrorCode::BadInput, "unknown algorithm '" + name + "'; valid names: " + valid);
  }
  return spec;
}

AlgorithmResult run_algorithm(const AlgorithmSpec& spec, const ModelSuite& suite, double budget,
                              const OptimizationOptions& opts, int jobs) {
  const int m = suite.m();
  std::vector<int> full(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) full[static_cast<std::size_t>(i)] = i;
  const unsigned mask = (m >= 31) ? ~0u : ((1u << (m + 1)) - 1u);

  std::vector<Task> tasks;
  if (spec.is_mc) {
    Task task;
    task.mask = 1u;
    task.subset = {0};
    tasks.push_back(std::move(task));
  } else {
    if (m < 1)
      fail(ErrorCode::DimensionMismatch, spec.name + " needs at least one low-fidelity model");
    tasks = tasks_for_subset(spec, mask, full);
  }
  return reduce_tasks(spec, suite, budget, opts, jobs, tasks, false);
}

AlgorithmResult run_with_model_selection(const AlgorithmSpec& spec, const ModelSuite& suite,
                                         double budget, const OptimizationOptions& opts,
                                         int jobs) {
  if (spec.is_mc) {
    AlgorithmResult result = run_algorithm(spec, suite, budget, opts, jobs);
    result.ams = true;
    return result;
  }
  const int m = suite.m();
  std::vector<Task> tasks;
  for (unsigned sel = 0; sel < (1u << m); ++sel) {
    const unsigned mask = (sel << 1) | 1u;
    std::vector<int> subset = {0};
    for (int i = 1; i <= m; ++i)
      if (mask & (1u << i)) subset.push_back(i);
    auto subset_tasks = tasks_for_subset(spec, mask, subset);
    tasks.insert(tasks.end(), std::make_move_iterator(subset_tasks.begin()),
                 std::make_move_iterator(subset_tasks.end()));
  }
  return reduce_tasks(spec, suite, budget, opts, jobs, tasks, true);
}

std::vector<AlgorithmResult> compare_algorithms(const std::vector<AlgorithmSpec>& specs,
                                                const ModelSuite& suite, double budget, bool ams,
                                                const OptimizationOptions& opts, int jobs) {
  if (specs.empty()) fail(ErrorCode::BadInput, "no algorithms given");
  std::vector<AlgorithmResult> rows;
  rows.reserve(specs.size());
  for (const auto& spec : specs)
    rows.push_back(ams ? run_with_model_selection(spec, suite, budget, opts, jobs)
                       : run_algorithm(spec, suite, budget, opts, jobs));
  sort_results(rows);
  return rows;
}

void sort_results(std::vector<AlgorithmResult>& results) {
  std::stable_sort(results.begin(), results.end(),
                   [](const AlgorithmResult& a, const AlgorithmResult& b) {
                     return better_candidate(a.best, a.beta, a.subset_mask, b.best, b.beta,
                                             b.subset_mask);
                   });
}

std::map<std::string, double> mean_relative_deviation(
    const std::map<std::string, std::vector<double>>& per_algorithm_variances) {
  if (per_algorithm_variances.empty())
    fail(ErrorCode::EmptyScenarioSet, "no algorithms provided");
  const std::size_t scenarios = per_algorithm_variances.begin()->second.size();
  if (scenarios == 0) fail(ErrorCode::EmptyScenarioSet, "no scenarios provided");
  for (const auto& [name, values] : per_algorithm_variances)
    if (values.size() != scenarios)
      fail(ErrorCode::DimensionMismatch, "algorithm " + name + " is missing scenarios");

  std::map<std::string, double> dbar;
  for (const auto& [name, values] : per_algorithm_variances) dbar[name] = 0.0;
  for (std::size_t i = 0; i < scenarios; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [name, values] : per_algorithm_variances)
      best = std::min(best, values[i]);
    for (const auto& [name, values] : per_algorithm_variances)
      dbar[name] += (values[i] - best) / best;
  }
  for (auto& [name, total] : dbar) total /= static_cast<double>(scenarios);
  return dbar;
}

}  // namespace acvopt
