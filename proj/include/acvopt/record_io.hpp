#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "acvopt/model_suite.hpp"
#include "acvopt/orchestrator.hpp"

namespace acvopt {

struct ProblemConfig {
  ModelSuite suite;
  double budget = 0.0;
};

ProblemConfig problem_from_json(const nlohmann::json& j);
ProblemConfig load_problem(const std::string& path);

struct ResultRecord {
  std::string algorithm;
  bool ams = false;
  unsigned subset = 0;  // bitmask, bit 0 always set
  std::vector<int> beta;
  std::vector<long long> counts;
  double variance = 0.0;
  double actual_cost = 0.0;
  std::vector<double> alpha;
  double runtime_ms = 0.0;
};

ResultRecord record_from_result(const AlgorithmResult& result);
nlohmann::json record_to_json(const ResultRecord& record);
ResultRecord record_from_json(const nlohmann::json& j);

// Re-derive the recorded variance from the record's allocation through the
// variance engine (round-trip check and `verify` support).
double reevaluate_record(const ResultRecord& record, const ModelSuite& suite);

std::string compare_csv(const std::vector<AlgorithmResult>& rows);

struct SweepRow {
  long long scenario = 0;
  ResultRecord record;
};

std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::map<std::string, double>& dbar);

nlohmann::json scenario_to_json(const ModelSuite& suite, double budget, std::uint64_t seed,
                                long long index);

}  // namespace acvopt
