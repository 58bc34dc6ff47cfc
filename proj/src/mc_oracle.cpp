#include "acvopt/mc_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "acvopt/estimator.hpp"
#include "acvopt/parallel.hpp"
#include "acvopt/rng.hpp"

namespace acvopt {

namespace {

constexpr long long kChunk = 4096;

struct IndexRange {
  long long begin = 0;
  long long end = 0;
};

// Draw-index ranges for each of the 2M+1 subsets, in canonical order.
struct PlanLayout {
  long long total = 0;
  std::vector<std::vector<IndexRange>> subsets;
};

long long overlap(const IndexRange& a, const IndexRange& b) {
  return std::max(0ll, std::min(a.end, b.end) - std::max(a.begin, b.begin));
}

long long range_count(const std::vector<IndexRange>& ranges) {
  long long n = 0;
  for (const auto& r : ranges) n += r.end - r.begin;
  return n;
}

long long range_intersection(const std::vector<IndexRange>& a,
                             const std::vector<IndexRange>& b) {
  long long n = 0;
  for (const auto& ra : a)
    for (const auto& rb : b) n += overlap(ra, rb);
  return n;
}

PlanLayout build_layout(const ExecutionPlan& plan, int m) {
  PlanLayout layout;
  layout.subsets.resize(2 * static_cast<std::size_t>(m) + 1);
  const auto& n = plan.counts;

  if (plan.kind == StrategyKind::GMF) {
    // All subsets are prefixes of one shared draw sequence.
    layout.subsets[0] = {{0, n[0]}};
    for (int i = 1; i <= m; ++i) {
      const long long parent = n[static_cast<std::size_t>(plan.beta[i - 1])];
      layout.subsets[2 * static_cast<std::size_t>(i) - 1] = {{0, parent}};
      layout.subsets[2 * static_cast<std::size_t>(i)] = {{0, n[static_cast<std::size_t>(i)]}};
    }
    layout.total = *std::max_element(n.begin(), n.end());
  } else if (plan.kind == StrategyKind::GRD) {
    // One disjoint block of draws per model.
    std::vector<IndexRange> block(static_cast<std::size_t>(m) + 1);
    long long offset = 0;
    for (int j = 0; j <= m; ++j) {
      block[static_cast<std::size_t>(j)] = {offset, offset + n[static_cast<std::size_t>(j)]};
      offset += n[static_cast<std::size_t>(j)];
    }
    layout.subsets[0] = {block[0]};
    for (int i = 1; i <= m; ++i) {
      layout.subsets[2 * static_cast<std::size_t>(i) - 1] = {
          block[static_cast<std::size_t>(plan.beta[i - 1])]};
      layout.subsets[2 * static_cast<std::size_t>(i)] = {block[static_cast<std::size_t>(i)]};
    }
    layout.total = offset;
  } else {
    // GIS: private block per model; zi* is the parent's block, zi adds its own.
    std::vector<IndexRange> block(static_cast<std::size_t>(m) + 1);
    long long offset = 0;
    for (int j = 0; j <= m; ++j) {
      block[static_cast<std::size_t>(j)] = {offset, offset + n[static_cast<std::size_t>(j)]};
      offset += n[static_cast<std::size_t>(j)];
    }
    layout.subsets[0] = {block[0]};
    for (int i = 1; i <= m; ++i) {
      const auto& parent = block[static_cast<std::size_t>(plan.beta[i - 1])];
      layout.subsets[2 * static_cast<std::size_t>(i) - 1] = {parent};
      layout.subsets[2 * static_cast<std::size_t>(i)] = {parent,
                                                         block[static_cast<std::size_t>(i)]};
    }
    layout.total = offset;
  }
  return layout;
}

void validate_layout(const PlanLayout& layout, const ExecutionPlan& plan, int m) {
  Eigen::VectorXd n(m + 1);
  for (int i = 0; i <= m; ++i) n[i] = static_cast<double>(plan.counts[static_cast<std::size_t>(i)]);
  const AllocationCounts reference = strategy_counts(plan.kind, n, plan.beta);
  for (Eigen::Index s = 0; s < reference.subset.size(); ++s) {
    if (static_cast<double>(range_count(layout.subsets[static_cast<std::size_t>(s)])) !=
        reference.subset[s])
      fail(ErrorCode::InconsistentPlan, "subset " + std::to_string(s) + " size mismatch");
    for (Eigen::Index t = 0; t < reference.subset.size(); ++t) {
      const long long shared = range_intersection(layout.subsets[static_cast<std::size_t>(s)],
                                                  layout.subsets[static_cast<std::size_t>(t)]);
      if (static_cast<double>(shared) != reference.intersect(s, t))
        fail(ErrorCode::InconsistentPlan, "subsets " + std::to_string(s) + "," +
                                              std::to_string(t) + " intersection mismatch");
    }
  }
}

// Streaming mean/covariance of a vector sequence (Welford update, Chan merge).
struct MomentAccumulator {
  long long n = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;
  Eigen::VectorXd delta;

  explicit MomentAccumulator(int dim)
      : mean(Eigen::VectorXd::Zero(dim)),
        m2(Eigen::MatrixXd::Zero(dim, dim)),
        delta(dim) {}

  void add(const Eigen::VectorXd& v) {
    ++n;
    delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2.noalias() += delta * (v - mean).transpose();
  }

  void merge(const MomentAccumulator& other) {
    if (other.n == 0) return;
    if (n == 0) {
      n = other.n;
      mean = other.mean;
      m2 = other.m2;
      return;
    }
    const long long total = n + other.n;
    delta = other.mean - mean;
    const double w = static_cast<double>(n) * static_cast<double>(other.n) /
                     static_cast<double>(total);
    m2.noalias() += other.m2 + w * delta * delta.transpose();
    mean += delta * (static_cast<double>(other.n) / static_cast<double>(total));
    n = total;
  }
};

class Sampler {
 public:
  Sampler(const SyntheticSuite& synth, int dim) : synth_(synth), dim_(dim), draw_(dim) {
    if (synth.sampler == SamplerKind::Gaussian) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(synth.suite.covariance);
      root_ = eig.eigenvectors() *
              eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
              eig.eigenvectors().transpose();
      noise_.resize(dim);
    }
  }

  const Eigen::VectorXd& draw(Rng& rng) {
    if (synth_.sampler == SamplerKind::Gaussian) {
      for (int i = 0; i < dim_; ++i) noise_[i] = rng.normal();
      draw_.noalias() = root_ * noise_;
      draw_ += synth_.mean;
    } else {
      const double z = rng.uniform();
      for (int i = 0; i < dim_; ++i) draw_[i] = std::pow(z, 5 - i);
    }
    return draw_;
  }

 private:
  const SyntheticSuite& synth_;
  int dim_;
  Eigen::MatrixXd root_;
  Eigen::VectorXd noise_;
  Eigen::VectorXd draw_;
};

}  // namespace

SyntheticSuite gaussian_synthetic(const ModelSuite& suite) {
  Eigen::VectorXd mean(suite.covariance.rows());
  for (Eigen::Index i = 0; i < mean.size(); ++i) mean[i] = static_cast<double>(i);
  return gaussian_synthetic(suite, mean);
}

SyntheticSuite gaussian_synthetic(const ModelSuite& suite, const Eigen::VectorXd& mean) {
  if (mean.size() != suite.covariance.rows())
    fail(ErrorCode::DimensionMismatch, "mean length mismatch");
  SyntheticSuite synth;
  synth.suite = suite;
  synth.mean = mean;
  synth.sampler = SamplerKind::Gaussian;
  return synth;
}

SyntheticSuite monomial_synthetic() {
  Eigen::MatrixXd cov(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      cov(i, j) = 1.0 / (11.0 - i - j) - 1.0 / ((6.0 - i) * (6.0 - j));
  Eigen::VectorXd costs = Eigen::VectorXd::Ones(5);
  SyntheticSuite synth;
  synth.suite = validate_suite(cov, costs);
  synth.mean.resize(5);
  for (int i = 0; i < 5; ++i) synth.mean[i] = 1.0 / (6.0 - i);
  synth.sampler = SamplerKind::Monomial;
  return synth;
}

SimulationSummary simulate_estimator(const SyntheticSuite& synth, const ExecutionPlan& plan,
                                     long long replicates, std::uint64_t seed, int jobs) {
  const int m = static_cast<int>(synth.suite.covariance.rows()) - 1;
  if (replicates < 1000) fail(ErrorCode::BadInput, "need at least 1000 replicates");
  if (static_cast<int>(plan.counts.size()) != m + 1 ||
      static_cast<int>(plan.beta.size()) != m || plan.alpha.size() != m)
    fail(ErrorCode::InconsistentPlan, "plan shape does not match the suite");
  try {
    validate_beta(plan.beta, m);
  } catch (const Error& e) {
    fail(ErrorCode::InconsistentPlan, e.what());
  }
  for (long long c : plan.counts)
    if (c < 1) fail(ErrorCode::InconsistentPlan, "subset sizes must be at least 1");

  const PlanLayout layout = build_layout(plan, m);
  validate_layout(layout, plan, m);

  const long long chunks = (replicates + kChunk - 1) / kChunk;
  std::vector<MomentAccumulator> partial(static_cast<std::size_t>(chunks),
                                         MomentAccumulator(m + 1));

  parallel_for(static_cast<std::size_t>(chunks), jobs, [&](std::size_t chunk) {
    const long long first = static_cast<long long>(chunk) * kChunk;
    const long long count = std::min(kChunk, replicates - first);
    Rng rng(Rng::stream_seed(seed, static_cast<std::uint64_t>(chunk)));
    Sampler sampler(synth, m + 1);

    Eigen::MatrixXd draws(m + 1, layout.total);
    Eigen::VectorXd v(m + 1);
    auto& acc = partial[chunk];
    for (long long rep = 0; rep < count; ++rep) {
      for (long long d = 0; d < layout.total; ++d) draws.col(d) = sampler.draw(rng);

      auto subset_mean = [&](int s, int component) {
        double total = 0.0;
        for (const auto& range : layout.subsets[static_cast<std::size_t>(s)])
          for (long long d = range.begin; d < range.end; ++d) total += draws(component, d);
        return total / static_cast<double>(range_count(layout.subsets[static_cast<std::size_t>(s)]));
      };

      v[0] = subset_mean(0, 0);
      for (int i = 1; i <= m; ++i) v[i] = subset_mean(2 * i - 1, i) - subset_mean(2 * i, i);
      acc.add(v);
    }
  });

  MomentAccumulator total(m + 1);
  for (const auto& acc : partial) total.merge(acc);

  SimulationSummary summary;
  summary.replicates = total.n;
  summary.component_mean = total.mean;
  summary.component_cov = total.m2 / static_cast<double>(total.n - 1);

  Eigen::VectorXd weights(m + 1);
  weights[0] = 1.0;
  weights.tail(m) = plan.alpha;
  summary.mean = weights.dot(total.mean);
  summary.variance = weights.dot(summary.component_cov * weights);
  summary.se_mean = std::sqrt(summary.variance / static_cast<double>(total.n));
  summary.se_variance =
      summary.variance * std::sqrt(2.0 / static_cast<double>(total.n - 1));
  return summary;
}

VerificationReport verify_against_analytic(const SyntheticSuite& synth, const ExecutionPlan& plan,
                                           long long replicates, std::uint64_t seed, int jobs) {
  const int m = static_cast<int>(synth.suite.covariance.rows()) - 1;
  Eigen::VectorXd n(m + 1);
  for (int i = 0; i <= m; ++i) n[i] = static_cast<double>(plan.counts[static_cast<std::size_t>(i)]);
  const StrategyMatrices mats = build_strategy_matrices(plan.kind, n, plan.beta);
  const CovariancePartition part = partition_covariance(synth.suite);
  const double analytic = variance_with_alpha(plan.alpha, n[0], mats, part);

  const SimulationSummary summary = simulate_estimator(synth, plan, replicates, seed, jobs);

  VerificationReport report;
  report.analytic = analytic;
  report.empirical = summary.variance;
  report.standard_error = summary.se_variance;
  report.zscore = (summary.variance - analytic) / summary.se_variance;
  report.pass = std::abs(report.zscore) <= 4.0;
  return report;
}

}  // namespace acvopt
