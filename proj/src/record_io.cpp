#include "acvopt/record_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "acvopt/errors.hpp"
#include "acvopt/estimator.hpp"
#include "acvopt/strategies.hpp"

namespace acvopt {

namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::BadInput, std::string(key) + " must be a non-empty 2D array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) fail(ErrorCode::BadInput, std::string(key) + " rows must be arrays");
    if (r == 0) out.resize(rows, static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != out.cols())
      fail(ErrorCode::BadInput, std::string(key) + " rows have inconsistent lengths");
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) fail(ErrorCode::BadInput, std::string(key) + " must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = j[static_cast<std::size_t>(i)].get<double>();
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename Seq, typename Fn>
std::string join(const Seq& seq, Fn fn) {
  std::string out;
  bool first = true;
  for (const auto& item : seq) {
    if (!first) out += ';';
    out += fn(item);
    first = false;
  }
  return out;
}

std::vector<int> subset_from_mask(unsigned mask) {
  std::vector<int> subset;
  for (int i = 0; i < 32; ++i)
    if (mask & (1u << i)) subset.push_back(i);
  return subset;
}

}  // namespace

ProblemConfig problem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::BadInput, "config must be a JSON object");
  Eigen::MatrixXd covariance;
  if (j.contains("covariance")) {
    covariance = matrix_from_json(j.at("covariance"), "covariance");
  } else if (j.contains("correlation")) {
    if (!j.contains("variances"))
      fail(ErrorCode::BadInput, "correlation form requires a variances array");
    const Eigen::MatrixXd corr = matrix_from_json(j.at("correlation"), "correlation");
    const Eigen::VectorXd variances = vector_from_json(j.at("variances"), "variances");
    if (variances.size() != corr.rows())
      fail(ErrorCode::BadInput, "variances length must match correlation dimension");
    for (Eigen::Index i = 0; i < variances.size(); ++i)
      if (!(variances(i) > 0.0)) fail(ErrorCode::BadInput, "variances must be positive");
    const Eigen::VectorXd scale = variances.cwiseSqrt();
    covariance.resize(corr.rows(), corr.cols());
    for (Eigen::Index r = 0; r < corr.rows(); ++r) {
      covariance(r, r) = variances(r);
      for (Eigen::Index c = r + 1; c < corr.cols(); ++c) {
        const double v = scale(r) * scale(c) * corr(r, c);
        covariance(r, c) = v;
        covariance(c, r) = v;
      }
    }
  } else {
    fail(ErrorCode::BadInput, "config needs either covariance or correlation + variances");
  }
  if (!j.contains("costs")) fail(ErrorCode::BadInput, "config is missing costs");
  const Eigen::VectorXd costs = vector_from_json(j.at("costs"), "costs");
  if (!j.contains("target_cost")) fail(ErrorCode::BadInput, "config is missing target_cost");
  const double budget = j.at("target_cost").get<double>();

  std::vector<std::string> labels;
  if (j.contains("labels")) {
    for (const auto& item : j.at("labels")) labels.push_back(item.get<std::string>());
  }
  ProblemConfig cfg;
  cfg.suite = validate_suite(covariance, costs, labels);
  cfg.budget = budget;
  return cfg;
}

ProblemConfig load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadInput, "cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadInput, "invalid JSON in " + path + ": " + e.what());
  }
  return problem_from_json(j);
}

ResultRecord record_from_result(const AlgorithmResult& result) {
  ResultRecord record;
  record.algorithm = result.algorithm;
  record.ams = result.ams;
  record.subset = result.subset_mask;
  record.beta = result.beta;
  record.counts = result.counts_full;
  record.variance = result.best.variance;
  record.actual_cost = result.best.actual_cost;
  record.alpha.assign(result.best.alpha.begin(), result.best.alpha.end());
  record.runtime_ms = result.runtime_ms;
  return record;
}

nlohmann::json record_to_json(const ResultRecord& record) {
  nlohmann::json j;
  j["algorithm"] = record.algorithm;
  j["ams"] = record.ams;
  j["subset"] = record.subset;
  j["beta"] = record.beta;
  j["counts"] = record.counts;
  j["variance"] = record.variance;
  j["actual_cost"] = record.actual_cost;
  j["alpha"] = record.alpha;
  j["runtime_ms"] = record.runtime_ms;
  return j;
}

ResultRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::BadInput, "result record must be a JSON object");
  for (const char* key : {"algorithm", "ams", "subset", "beta", "counts", "variance",
                          "actual_cost", "alpha", "runtime_ms"})
    if (!j.contains(key)) fail(ErrorCode::BadInput, std::string("result record is missing ") + key);
  ResultRecord record;
  record.algorithm = j.at("algorithm").get<std::string>();
  record.ams = j.at("ams").get<bool>();
  record.subset = j.at("subset").get<unsigned>();
  record.beta = j.at("beta").get<std::vector<int>>();
  record.counts = j.at("counts").get<std::vector<long long>>();
  record.variance = j.at("variance").get<double>();
  record.actual_cost = j.at("actual_cost").get<double>();
  record.alpha = j.at("alpha").get<std::vector<double>>();
  record.runtime_ms = j.at("runtime_ms").get<double>();
  if (!(record.subset & 1u)) fail(ErrorCode::BadInput, "subset mask must include model 0");
  return record;
}

double reevaluate_record(const ResultRecord& record, const ModelSuite& suite) {
  const std::vector<int> subset = subset_from_mask(record.subset);
  for (int idx : subset)
    if (idx > suite.m()) fail(ErrorCode::BadInput, "subset mask references a model outside the suite");
  if (record.counts.size() != static_cast<std::size_t>(suite.m()) + 1)
    fail(ErrorCode::BadInput, "counts length must match the full suite");
  const int m_local = static_cast<int>(subset.size()) - 1;
  if (record.counts[0] < 1) fail(ErrorCode::BadInput, "N0 must be at least 1");
  const ModelSuite sub = subset_suite(suite, subset);
  const CovariancePartition part = partition_covariance(sub);
  if (m_local == 0) return part.var_q0 / static_cast<double>(record.counts[0]);

  if (record.beta.size() != static_cast<std::size_t>(m_local))
    fail(ErrorCode::BadInput, "beta length must match the subset size");
  Beta beta_local(static_cast<std::size_t>(m_local), 0);
  for (int t = 0; t < m_local; ++t) {
    const int target = record.beta[static_cast<std::size_t>(t)];
    const auto it = std::find(subset.begin(), subset.end(), target);
    if (it == subset.end()) fail(ErrorCode::BadInput, "beta references a model outside the subset");
    beta_local[static_cast<std::size_t>(t)] = static_cast<int>(it - subset.begin());
  }
  Eigen::VectorXd counts_local(m_local + 1);
  for (int t = 0; t <= m_local; ++t) {
    const long long n = record.counts[static_cast<std::size_t>(subset[static_cast<std::size_t>(t)])];
    if (n < 1) fail(ErrorCode::BadInput, "selected models need at least one sample");
    counts_local(t) = static_cast<double>(n);
  }
  const AlgorithmSpec spec = make_algorithm_spec(record.algorithm);
  const StrategyMatrices mats = build_strategy_matrices(spec.kind, counts_local, beta_local);
  if (record.alpha.size() != static_cast<std::size_t>(m_local))
    fail(ErrorCode::BadInput, "alpha length must match the subset size");
  Eigen::VectorXd alpha(m_local);
  for (int t = 0; t < m_local; ++t) alpha(t) = record.alpha[static_cast<std::size_t>(t)];
  return variance_with_alpha(alpha, counts_local(0), mats, part);
}

std::string compare_csv(const std::vector<AlgorithmResult>& rows) {
  std::string out = "algorithm,ams,subset,beta,counts,variance,actual_cost,alpha,runtime_ms\n";
  for (const auto& row : rows) {
    const ResultRecord r = record_from_result(row);
    out += r.algorithm;
    out += ',';
    out += r.ams ? "1" : "0";
    out += ',';
    out += std::to_string(r.subset);
    out += ',';
    out += join(r.beta, [](int b) { return std::to_string(b); });
    out += ',';
    out += join(r.counts, [](long long n) { return std::to_string(n); });
    out += ',';
    out += fmt(r.variance);
    out += ',';
    out += fmt(r.actual_cost);
    out += ',';
    out += join(r.alpha, fmt);
    out += ',';
    out += fmt(r.runtime_ms);
    out += '\n';
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::map<std::string, double>& dbar) {
  std::string out = "scenario,algorithm,subset,beta,counts,variance,actual_cost,alpha\n";
  for (const auto& row : rows) {
    const ResultRecord& r = row.record;
    out += std::to_string(row.scenario);
    out += ',';
    out += r.algorithm;
    out += ',';
    out += std::to_string(r.subset);
    out += ',';
    out += join(r.beta, [](int b) { return std::to_string(b); });
    out += ',';
    out += join(r.counts, [](long long n) { return std::to_string(n); });
    out += ',';
    out += fmt(r.variance);
    out += ',';
    out += fmt(r.actual_cost);
    out += ',';
    out += join(r.alpha, fmt);
    out += '\n';
  }
  out += '\n';
  out += "algorithm,dbar\n";
  for (const auto& [name, value] : dbar) {
    out += name;
    out += ',';
    out += fmt(value);
    out += '\n';
  }
  return out;
}

nlohmann::json scenario_to_json(const ModelSuite& suite, double budget, std::uint64_t seed,
                                long long index) {
  nlohmann::json j;
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < suite.covariance.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < suite.covariance.cols(); ++c) row.push_back(suite.covariance(r, c));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["costs"] = std::vector<double>(suite.costs.begin(), suite.costs.end());
  j["budget"] = budget;
  j["seed"] = seed;
  j["index"] = index;
  return j;
}

}  // namespace acvopt
