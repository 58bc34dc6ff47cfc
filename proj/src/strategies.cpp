#include "acvopt/strategies.hpp"

#include <algorithm>

namespace acvopt {

namespace {

void check_inputs(const Eigen::VectorXd& n, const Beta& beta) {
  const int m = static_cast<int>(n.size()) - 1;
  if (m < 1) fail(ErrorCode::DimensionMismatch, "need at least one low-fidelity model");
  try {
    validate_beta(beta, m);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidBeta, e.what());
  }
  for (Eigen::Index i = 0; i < n.size(); ++i)
    if (!(n[i] > 0.0))
      fail(ErrorCode::ZeroSubsetSize, "N_" + std::to_string(i) + " must be positive");
}

}  // namespace

const char* strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::GMF: return "GMF";
    case StrategyKind::GRD: return "GRD";
    case StrategyKind::GIS: return "GIS";
  }
  return "?";
}

StrategyKind strategy_from_name(const std::string& name) {
  if (name == "GMF") return StrategyKind::GMF;
  if (name == "GRD") return StrategyKind::GRD;
  if (name == "GIS") return StrategyKind::GIS;
  fail(ErrorCode::BadInput, "unknown strategy kind '" + name + "'");
}

AllocationCounts strategy_counts(StrategyKind kind, const Eigen::VectorXd& n, const Beta& beta) {
  check_inputs(n, beta);
  const int m = static_cast<int>(n.size()) - 1;
  const Eigen::Index subsets = 2 * m + 1;

  AllocationCounts counts;
  counts.subset.resize(subsets);
  counts.intersect.resize(subsets, subsets);

  if (kind == StrategyKind::GMF) {
    // All subsets are prefixes of one master sample list.
    counts.subset[0] = n[0];
    for (int i = 1; i <= m; ++i) {
      counts.subset[2 * i - 1] = n[beta[static_cast<std::size_t>(i) - 1]];
      counts.subset[2 * i] = n[i];
    }
    for (Eigen::Index s = 0; s < subsets; ++s)
      for (Eigen::Index t = 0; t < subsets; ++t)
        counts.intersect(s, t) = std::min(counts.subset[s], counts.subset[t]);
    counts.total = counts.subset.maxCoeff();
    return counts;
  }

  if (kind == StrategyKind::GRD) {
    // One disjoint block per model; zi* is block beta_i, zi is block i.
    std::vector<int> block(static_cast<std::size_t>(subsets));
    block[0] = 0;
    for (int i = 1; i <= m; ++i) {
      block[static_cast<std::size_t>(2 * i - 1)] = beta[static_cast<std::size_t>(i) - 1];
      block[static_cast<std::size_t>(2 * i)] = i;
    }
    for (Eigen::Index s = 0; s < subsets; ++s)
      counts.subset[s] = n[block[static_cast<std::size_t>(s)]];
    for (Eigen::Index s = 0; s < subsets; ++s)
      for (Eigen::Index t = 0; t < subsets; ++t)
        counts.intersect(s, t) =
            block[static_cast<std::size_t>(s)] == block[static_cast<std::size_t>(t)]
                ? counts.subset[s]
                : 0.0;
    counts.total = n.sum();
    return counts;
  }

  // GIS: private blocks z'_j; z0 = {0}, zi* = {beta_i}, zi = {beta_i, i}.
  std::vector<std::vector<int>> blocks(static_cast<std::size_t>(subsets));
  blocks[0] = {0};
  for (int i = 1; i <= m; ++i) {
    const int parent = beta[static_cast<std::size_t>(i) - 1];
    blocks[static_cast<std::size_t>(2 * i - 1)] = {parent};
    blocks[static_cast<std::size_t>(2 * i)] = {parent, i};
  }
  for (Eigen::Index s = 0; s < subsets; ++s) {
    double size = 0.0;
    for (int b : blocks[static_cast<std::size_t>(s)]) size += n[b];
    counts.subset[s] = size;
  }
  for (Eigen::Index s = 0; s < subsets; ++s)
    for (Eigen::Index t = 0; t < subsets; ++t) {
      double shared = 0.0;
      for (int b : blocks[static_cast<std::size_t>(s)])
        for (int b2 : blocks[static_cast<std::size_t>(t)])
          if (b == b2) shared += n[b];
      counts.intersect(s, t) = shared;
    }
  counts.total = n.sum();
  return counts;
}

StrategyMatrices build_general_matrices(const AllocationCounts& counts) {
  const int m = counts.m();
  if (m < 1 || counts.subset.size() != 2 * m + 1 ||
      counts.intersect.rows() != counts.subset.size() ||
      counts.intersect.cols() != counts.subset.size())
    fail(ErrorCode::DimensionMismatch, "inconsistent AllocationCounts shapes");
  for (Eigen::Index s = 0; s < counts.subset.size(); ++s)
    if (!(counts.subset[s] > 0.0))
      fail(ErrorCode::ZeroSubsetSize, "subset " + std::to_string(s) + " is empty");

  StrategyMatrices mats;
  mats.G.resize(m, m);
  mats.g.resize(m);
  const auto& sz = counts.subset;
  const auto& ix = counts.intersect;
  for (int i = 1; i <= m; ++i) {
    const Eigen::Index si = 2 * i - 1, fi = 2 * i;
    for (int j = 1; j <= m; ++j) {
      const Eigen::Index sj = 2 * j - 1, fj = 2 * j;
      mats.G(i - 1, j - 1) = ix(si, sj) / (sz[si] * sz[sj]) - ix(si, fj) / (sz[si] * sz[fj]) -
                             ix(fi, sj) / (sz[fi] * sz[sj]) + ix(fi, fj) / (sz[fi] * sz[fj]);
    }
    mats.g[i - 1] = ix(si, 0) / (sz[si] * sz[0]) - ix(fi, 0) / (sz[fi] * sz[0]);
  }
  return mats;
}

StrategyMatrices build_strategy_matrices(StrategyKind kind, const Eigen::VectorXd& n,
                                         const Beta& beta) {
  check_inputs(n, beta);
  StrategyMatrices mats;
  fill_strategy_matrices(kind, n, beta, mats);
  return mats;
}

void fill_strategy_matrices(StrategyKind kind, const Eigen::VectorXd& n, const Beta& beta,
                            StrategyMatrices& mats) {
  const int m = static_cast<int>(n.size()) - 1;
  mats.G.resize(m, m);
  mats.g.resize(m);

  auto parent = [&](int i) { return beta[static_cast<std::size_t>(i) - 1]; };

  switch (kind) {
    case StrategyKind::GMF: {
      for (int i = 1; i <= m; ++i) {
        const double nbi = n[parent(i)], ni = n[i];
        for (int j = 1; j <= m; ++j) {
          const double nbj = n[parent(j)], nj = n[j];
          mats.G(i - 1, j - 1) = std::min(nbi, nbj) / (nbi * nbj) -
                                 std::min(nbi, nj) / (nbi * nj) -
                                 std::min(ni, nbj) / (ni * nbj) + std::min(ni, nj) / (ni * nj);
        }
        mats.g[i - 1] =
            std::min(nbi, n[0]) / (nbi * n[0]) - std::min(ni, n[0]) / (ni * n[0]);
      }
      break;
    }
    case StrategyKind::GRD: {
      for (int i = 1; i <= m; ++i) {
        const int bi = parent(i);
        for (int j = 1; j <= m; ++j) {
          const int bj = parent(j);
          double v = 0.0;
          if (bi == bj) v += 1.0 / n[bi];
          if (bi == j) v -= 1.0 / n[bi];
          if (i == bj) v -= 1.0 / n[i];
          if (i == j) v += 1.0 / n[i];
          mats.G(i - 1, j - 1) = v;
        }
        mats.g[i - 1] = (bi == 0) ? 1.0 / n[0] : 0.0;
      }
      break;
    }
    case StrategyKind::GIS: {
      for (int i = 1; i <= m; ++i) {
        const int bi = parent(i);
        const double si = n[bi] + n[i];
        for (int j = 1; j <= m; ++j) {
          const int bj = parent(j);
          const double sj = n[bj] + n[j];
          double v = 0.0;
          if (bi == bj) v += 1.0 / n[bi] - 1.0 / si - 1.0 / sj + n[bi] / (si * sj);
          if (bi == j) v += n[bi] / (si * sj) - 1.0 / sj;
          if (bj == i) v += n[bj] / (si * sj) - 1.0 / si;
          if (i == j) v += n[i] / (si * sj);
          mats.G(i - 1, j - 1) = v;
        }
        mats.g[i - 1] = (bi == 0) ? 1.0 / n[0] - 1.0 / si : 0.0;
      }
      break;
    }
  }
}

Eigen::VectorXd eval_counts(StrategyKind kind, const Eigen::VectorXd& n, const Beta& beta) {
  check_inputs(n, beta);
  const int m = static_cast<int>(n.size()) - 1;
  Eigen::VectorXd counts(m + 1);
  counts[0] = n[0];
  for (int i = 1; i <= m; ++i) {
    const double nb = n[beta[static_cast<std::size_t>(i) - 1]];
    counts[i] = (kind == StrategyKind::GMF) ? std::max(nb, n[i]) : nb + n[i];
  }
  return counts;
}

double estimator_cost(const Eigen::VectorXd& eval_counts, const Eigen::VectorXd& costs) {
  if (eval_counts.size() != costs.size())
    fail(ErrorCode::DimensionMismatch, "eval counts and costs differ in length");
  return eval_counts.dot(costs);
}

}  // namespace acvopt
