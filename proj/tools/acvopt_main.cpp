#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "acvopt/mc_oracle.hpp"
#include "acvopt/orchestrator.hpp"
#include "acvopt/parallel.hpp"
#include "acvopt/record_io.hpp"
#include "acvopt/scenario.hpp"

namespace {

using namespace acvopt;

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) fail(ErrorCode::BadInput, "cannot open output file " + out_path);
  out << text;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<AlgorithmSpec> parse_algorithms(const std::string& text) {
  std::vector<AlgorithmSpec> specs;
  if (text == "all") {
    for (const auto& name : algorithm_names()) specs.push_back(make_algorithm_spec(name));
    return specs;
  }
  for (const auto& name : split_csv(text)) {
    if (name.empty()) fail(ErrorCode::BadInput, "empty algorithm name in list '" + text + "'");
    specs.push_back(make_algorithm_spec(name));
  }
  return specs;
}

// Turn a saved ResultRecord back into a runnable plan on the matching sub-suite.
std::pair<ModelSuite, ExecutionPlan> plan_from_record(const ResultRecord& record,
                                                      const ModelSuite& suite) {
  std::vector<int> subset;
  for (int i = 0; i < 32; ++i)
    if (record.subset & (1u << i)) subset.push_back(i);
  for (int idx : subset)
    if (idx > suite.m()) fail(ErrorCode::BadInput, "subset mask references a model outside the suite");
  if (record.counts.size() != static_cast<std::size_t>(suite.m()) + 1)
    fail(ErrorCode::BadInput, "counts length must match the full suite");
  const int m_local = static_cast<int>(subset.size()) - 1;

  ExecutionPlan plan;
  plan.counts.resize(static_cast<std::size_t>(m_local) + 1);
  for (int t = 0; t <= m_local; ++t)
    plan.counts[static_cast<std::size_t>(t)] =
        record.counts[static_cast<std::size_t>(subset[static_cast<std::size_t>(t)])];

  const ModelSuite sub = subset_suite(suite, subset);
  if (m_local == 0) {
    plan.kind = StrategyKind::GMF;
    plan.alpha.resize(0);
    return {sub, plan};
  }
  const AlgorithmSpec spec = make_algorithm_spec(record.algorithm);
  if (spec.is_mc) fail(ErrorCode::BadInput, "MC record with more than one selected model");
  plan.kind = spec.kind;
  plan.beta.resize(static_cast<std::size_t>(m_local));
  if (record.beta.size() != static_cast<std::size_t>(m_local))
    fail(ErrorCode::BadInput, "beta length must match the subset size");
  for (int t = 0; t < m_local; ++t) {
    const auto it = std::find(subset.begin(), subset.end(), record.beta[static_cast<std::size_t>(t)]);
    if (it == subset.end()) fail(ErrorCode::BadInput, "beta references a model outside the subset");
    plan.beta[static_cast<std::size_t>(t)] = static_cast<int>(it - subset.begin());
  }
  if (record.alpha.size() != static_cast<std::size_t>(m_local))
    fail(ErrorCode::BadInput, "alpha length must match the subset size");
  plan.alpha.resize(m_local);
  for (int t = 0; t < m_local; ++t) plan.alpha(t) = record.alpha[static_cast<std::size_t>(t)];
  return {sub, plan};
}

std::pair<ModelSuite, ExecutionPlan> load_allocation(const std::string& path,
                                                     const ModelSuite& suite) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadInput, "cannot open allocation file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadInput, "invalid JSON in " + path + ": " + e.what());
  }
  if (j.contains("algorithm")) return plan_from_record(record_from_json(j), suite);
  if (!j.contains("kind"))
    fail(ErrorCode::BadInput, "allocation file needs either a ResultRecord or a raw plan with kind");
  ExecutionPlan plan;
  plan.kind = strategy_from_name(j.at("kind").get<std::string>());
  plan.beta = j.value("beta", Beta{});
  plan.counts = j.at("counts").get<std::vector<long long>>();
  const auto alpha = j.value("alpha", std::vector<double>{});
  plan.alpha.resize(static_cast<Eigen::Index>(alpha.size()));
  for (Eigen::Index i = 0; i < plan.alpha.size(); ++i)
    plan.alpha(i) = alpha[static_cast<std::size_t>(i)];
  return {suite, plan};
}

std::string report_json(const VerificationReport& report) {
  nlohmann::json j;
  j["analytic"] = report.analytic;
  j["empirical"] = report.empirical;
  j["stderr"] = report.standard_error;
  j["zscore"] = report.zscore;
  j["pass"] = report.pass;
  return j.dump(2) + "\n";
}

struct OptimizeArgs {
  std::string config;
  std::string algorithm;
  bool ams = false;
  std::uint64_t seed = 0;
  std::string out;
};

struct CompareArgs {
  std::string config;
  std::string algorithms = "all";
  std::string ams = "off";
  std::string out;
};

struct TreesArgs {
  int models = 0;
  std::string family;
};

struct SweepArgs {
  long long scenarios = 0;
  int models = 0;
  std::uint64_t seed = 0;
  std::string algorithms;
  std::string out;
  std::string dump_scenarios;
};

struct VerifyArgs {
  std::string config;
  std::string allocation;
  long long replicates = 200000;
  std::uint64_t seed = 0;
};

void cmd_optimize(const OptimizeArgs& args, int jobs) {
  const ProblemConfig cfg = load_problem(args.config);
  const AlgorithmSpec spec = make_algorithm_spec(args.algorithm);
  const AlgorithmResult result =
      args.ams ? run_with_model_selection(spec, cfg.suite, cfg.budget, {}, jobs)
               : run_algorithm(spec, cfg.suite, cfg.budget, {}, jobs);
  write_output(record_to_json(record_from_result(result)).dump(2) + "\n", args.out);
}

void cmd_compare(const CompareArgs& args, int jobs) {
  const ProblemConfig cfg = load_problem(args.config);
  const std::vector<AlgorithmSpec> specs = parse_algorithms(args.algorithms);
  std::vector<AlgorithmResult> rows;
  if (args.ams == "both") {
    rows = compare_algorithms(specs, cfg.suite, cfg.budget, false, {}, jobs);
    auto on = compare_algorithms(specs, cfg.suite, cfg.budget, true, {}, jobs);
    rows.insert(rows.end(), std::make_move_iterator(on.begin()), std::make_move_iterator(on.end()));
    sort_results(rows);
  } else if (args.ams == "on" || args.ams == "off") {
    rows = compare_algorithms(specs, cfg.suite, cfg.budget, args.ams == "on", {}, jobs);
  } else {
    fail(ErrorCode::BadInput, "--ams must be both, on, or off");
  }
  write_output(compare_csv(rows), args.out);
}

void cmd_trees(const TreesArgs& args) {
  TreeFamily family;
  if (args.family == "KL") {
    family = TreeFamily::KL;
  } else if (args.family == "SR") {
    family = TreeFamily::SR;
  } else if (args.family == "MR") {
    family = TreeFamily::MR;
  } else {
    fail(ErrorCode::BadInput, "--family must be KL, SR, or MR");
  }
  const auto betas = enumerate_trees(family, args.models);
  std::string out;
  for (const auto& beta : betas) {
    out += '(';
    for (std::size_t i = 0; i < beta.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(beta[i]);
    }
    out += ")\n";
  }
  out += "count " + std::to_string(betas.size()) + "\n";
  std::cout << out;
}

void cmd_sweep(const SweepArgs& args, int jobs) {
  if (args.scenarios < 1) fail(ErrorCode::EmptyScenarioSet, "--scenarios must be at least 1");
  if (args.algorithms.empty()) fail(ErrorCode::BadInput, "--algorithms is required");
  const std::vector<AlgorithmSpec> specs = parse_algorithms(args.algorithms);

  ScenarioConfig cfg;
  cfg.num_models_total = args.models + 1;
  cfg.seed = args.seed;

  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(args.scenarios) * specs.size());
  std::map<std::string, std::vector<double>> variances;
  std::string dump;
  for (long long i = 0; i < args.scenarios; ++i) {
    Rng rng(Rng::stream_seed(args.seed, static_cast<std::uint64_t>(i)));
    const Scenario sc = random_scenario(cfg, rng);
    if (!args.dump_scenarios.empty())
      dump += scenario_to_json(sc.suite, sc.budget, args.seed, i).dump() + "\n";
    for (const auto& spec : specs) {
      const AlgorithmResult result = run_algorithm(spec, sc.suite, sc.budget, {}, jobs);
      variances[spec.name].push_back(result.best.variance);
      rows.push_back({i, record_from_result(result)});
    }
  }
  const auto dbar = mean_relative_deviation(variances);
  if (!args.dump_scenarios.empty()) write_output(dump, args.dump_scenarios);
  write_output(sweep_csv(rows, dbar), args.out);
}

void cmd_verify(const VerifyArgs& args, int jobs) {
  const ProblemConfig cfg = load_problem(args.config);
  const auto [suite, plan] = load_allocation(args.allocation, cfg.suite);
  const SyntheticSuite synth = gaussian_synthetic(suite);
  const VerificationReport report =
      verify_against_analytic(synth, plan, args.replicates, args.seed, jobs);
  std::cout << report_json(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate control variate sample-allocation optimizer"};
  app.require_subcommand(1);
  int jobs = default_jobs();
  app.add_option("--jobs", jobs, "worker thread cap (default: ACVOPT_JOBS or 1)");

  OptimizeArgs opt_args;
  auto* opt = app.add_subcommand("optimize", "optimize one algorithm on a problem config");
  opt->add_option("config", opt_args.config, "problem config JSON")->required();
  opt->add_option("--algorithm", opt_args.algorithm, "algorithm name")->required();
  opt->add_flag("--ams", opt_args.ams, "sweep all model subsets");
  opt->add_option("--seed", opt_args.seed, "seed (reserved; optimization is deterministic)");
  opt->add_option("--out", opt_args.out, "output path (default stdout)");
  opt->add_option("--jobs", jobs, "worker thread cap");
  opt->callback([&] { cmd_optimize(opt_args, jobs); });

  CompareArgs cmp_args;
  auto* cmp = app.add_subcommand("compare", "rank algorithms on a problem config");
  cmp->add_option("config", cmp_args.config, "problem config JSON")->required();
  cmp->add_option("--algorithms", cmp_args.algorithms, "all or a comma-separated list");
  cmp->add_option("--ams", cmp_args.ams, "both, on, or off");
  cmp->add_option("--out", cmp_args.out, "output path (default stdout)");
  cmp->add_option("--jobs", jobs, "worker thread cap");
  cmp->callback([&] { cmd_compare(cmp_args, jobs); });

  TreesArgs tree_args;
  auto* trees = app.add_subcommand("trees", "list recursion trees for a family");
  trees->add_option("--models", tree_args.models, "number of low-fidelity models")->required();
  trees->add_option("--family", tree_args.family, "KL, SR, or MR")->required();
  trees->callback([&] { cmd_trees(tree_args); });

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "random-scenario sweep with D-bar summary");
  sweep->add_option("--scenarios", sweep_args.scenarios, "number of scenarios")->required();
  sweep->add_option("--models", sweep_args.models, "low-fidelity models per scenario")->required();
  sweep->add_option("--seed", sweep_args.seed, "scenario seed");
  sweep->add_option("--algorithms", sweep_args.algorithms, "comma-separated list or all")->required();
  sweep->add_option("--out", sweep_args.out, "output path (default stdout)");
  sweep->add_option("--dump-scenarios", sweep_args.dump_scenarios, "also write scenarios as JSONL");
  sweep->add_option("--jobs", jobs, "worker thread cap");
  sweep->callback([&] { cmd_sweep(sweep_args, jobs); });

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "simulate an allocation and test it against analytics");
  verify->add_option("config", verify_args.config, "problem config JSON")->required();
  verify->add_option("--allocation", verify_args.allocation, "ResultRecord or raw plan JSON")
      ->required();
  verify->add_option("--replicates", verify_args.replicates, "number of replicates");
  verify->add_option("--seed", verify_args.seed, "simulation seed");
  verify->add_option("--jobs", jobs, "worker thread cap");
  verify->callback([&] { cmd_verify(verify_args, jobs); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const acvopt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::AllInfeasible:
      case ErrorCode::BudgetTooSmall:
      case ErrorCode::Infeasible:
      case ErrorCode::DegenerateBudget:
        return 2;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
