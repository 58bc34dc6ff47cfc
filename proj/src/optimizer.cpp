#include "acvopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace acvopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio_union(StrategyKind kind, double r_parent, double r_own) {
  return kind == StrategyKind::GMF ? std::max(r_parent, r_own) : r_parent + r_own;
}

// Euclidean projection onto the monotone nondecreasing cone (pool adjacent
// violators); the ordering constraint N_i <= N_{i+1} is exactly this cone in
// log-ratio space.
void project_nondecreasing(Eigen::VectorXd& s) {
  const int n = static_cast<int>(s.size());
  std::vector<double> val(static_cast<std::size_t>(n));
  std::vector<int> len(static_cast<std::size_t>(n));
  int blocks = 0;
  for (int i = 0; i < n; ++i) {
    val[static_cast<std::size_t>(blocks)] = s[i];
    len[static_cast<std::size_t>(blocks)] = 1;
    ++blocks;
    while (blocks > 1 && val[static_cast<std::size_t>(blocks) - 2] >
                             val[static_cast<std::size_t>(blocks) - 1]) {
      const auto a = static_cast<std::size_t>(blocks) - 2;
      const auto b = static_cast<std::size_t>(blocks) - 1;
      val[a] = (val[a] * len[a] + val[b] * len[b]) / (len[a] + len[b]);
      len[a] += len[b];
      --blocks;
    }
  }
  int idx = 0;
  for (int blk = 0; blk < blocks; ++blk)
    for (int j = 0; j < len[static_cast<std::size_t>(blk)]; ++j)
      s[idx++] = val[static_cast<std::size_t>(blk)];
}

// Objective machinery for one sub-optimization; owns all scratch so the inner
// loop never allocates.
class Evaluator {
 public:
  Evaluator(const ModelSuite& suite, StrategyKind kind, const Beta& beta, double budget,
            AlphaMode mode, bool ordering, double penalty_scale)
      : suite_(suite),
        kind_(kind),
        beta_(beta),
        budget_(budget),
        mode_(mode),
        ordering_(ordering),
        penalty_scale_(penalty_scale),
        m_(suite.m()),
        part_(partition_covariance(suite)),
        counts_(m_ + 1),
        branch_(m_, -1.0),
        ws_(m_) {
    mats_.G.resize(m_, m_);
    mats_.g.resize(m_);
  }

  // The GMF separation constraint |N_beta_i - N_i| > 1 has two disconnected
  // branches. Pin each pair to the branch the starting point sits on, the way
  // an SQP step linearizing the active constraint would; otherwise a long line
  // search step can tunnel across the excluded band into the wrong basin.
  void fix_branches(const Eigen::VectorXd& r0) {
    if (kind_ != StrategyKind::GMF) return;
    ratios_to_counts(r0, counts_);
    for (int i = 1; i <= m_; ++i) {
      const int b = beta_[static_cast<std::size_t>(i) - 1];
      branch_[static_cast<std::size_t>(i) - 1] = (counts_[b] > counts_[i]) ? 1.0 : -1.0;
    }
  }

  int m() const { return m_; }
  bool ordering() const { return ordering_; }
  const CovariancePartition& part() const { return part_; }

  void ratios_to_counts(const Eigen::VectorXd& r, Eigen::VectorXd& counts) const {
    double denom = suite_.costs[0];
    for (int i = 1; i <= m_; ++i) {
      const int b = beta_[static_cast<std::size_t>(i) - 1];
      const double rb = (b == 0) ? 1.0 : r[b - 1];
      denom += suite_.costs[i] * ratio_union(kind_, rb, r[i - 1]);
    }
    counts[0] = budget_ / denom;
    for (int i = 1; i <= m_; ++i) counts[i] = r[i - 1] * counts[0];
  }

  // Smallest constraint value C_i over all constraints at these counts.
  double constraint_min(const Eigen::VectorXd& counts) const {
    double worst = kInf;
    for (int i = 0; i <= m_; ++i) worst = std::min(worst, counts[i] - 1.0);
    if (kind_ == StrategyKind::GMF)
      for (int i = 1; i <= m_; ++i)
        worst = std::min(
            worst, branch_[static_cast<std::size_t>(i) - 1] *
                           (counts[beta_[static_cast<std::size_t>(i) - 1]] - counts[i]) -
                       1.0);
    if (ordering_)
      for (int i = 1; i < m_; ++i) worst = std::min(worst, counts[i + 1] - counts[i]);
    return worst;
  }

  double variance_at_counts(const Eigen::VectorXd& counts) {
    fill_strategy_matrices(kind_, counts, beta_, mats_);
    if (mode_ == AlphaMode::FixedMinusOne)
      return part_.var_q0 / counts[0] + mats_.G.cwiseProduct(part_.C).sum() -
             2.0 * mats_.g.cwiseProduct(part_.c).sum();
    return ws_.optimal(counts[0], mats_, part_);
  }

  // Raw objective: variance only, +inf off the positive orthant (stage 1
  // iterates stay feasible, so no penalty is ever involved).
  double raw(const Eigen::VectorXd& r) {
    if ((r.array() <= 0.0).any()) return kInf;
    ratios_to_counts(r, counts_);
    return variance_at_counts(counts_);
  }

  // Stage-2 objective: variance plus P_i = penalty_scale * (-C_i) summed over
  // every violated constraint.
  double penalized(const Eigen::VectorXd& r) {
    double outside = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (!(r[i] > 0.0)) outside += 1.0 - r[i];
    if (outside > 0.0) return penalty_scale_ * (1.0 + outside);

    ratios_to_counts(r, counts_);
    double violation = 0.0;
    for (int i = 0; i <= m_; ++i) violation += std::max(0.0, 1.0 - counts_[i]);
    if (kind_ == StrategyKind::GMF)
      for (int i = 1; i <= m_; ++i)
        violation += std::max(
            0.0, 1.0 - branch_[static_cast<std::size_t>(i) - 1] *
                           (counts_[beta_[static_cast<std::size_t>(i) - 1]] - counts_[i]));
    if (ordering_)
      for (int i = 1; i < m_; ++i) violation += std::max(0.0, counts_[i] - counts_[i + 1]);
    return variance_at_counts(counts_) + penalty_scale_ * violation;
  }

  // Approximate projection of a candidate ratio vector onto the feasible set:
  // isotonic regression for the ordering cone, per-coordinate clamps for the
  // count walls. Exactness is not needed; the line search only requires a
  // feasible point with sufficient decrease, so a few alternating passes plus
  // the exact final check suffice. Returns false when clamping cannot reach
  // feasibility.
  bool project_walls(Eigen::VectorXd& r) {
    if (!r.allFinite() || (r.array() <= 0.0).any()) return false;
    Eigen::VectorXd s;
    for (int pass = 0; pass < 4; ++pass) {
      if (ordering_) {
        s = r.array().log();
        project_nondecreasing(s);
        r = s.array().exp();
      }
      ratios_to_counts(r, counts_);
      if (!counts_.allFinite() || counts_[0] < 1.0) return false;
      if (constraint_min(counts_) >= 0.0) return true;
      const double n0 = counts_[0];
      const double gap = (1.0 + 1e-9) / n0;
      for (int i = 1; i <= m_; ++i)
        if (r[i - 1] < gap) r[i - 1] = gap;
      if (kind_ == StrategyKind::GMF) {
        for (int i = 1; i <= m_; ++i) {
          const int b = beta_[static_cast<std::size_t>(i) - 1];
          const double rb = (b == 0) ? 1.0 : r[b - 1];
          if (branch_[static_cast<std::size_t>(i) - 1] > 0.0) {
            if (r[i - 1] > rb - gap) r[i - 1] = rb - gap;
            if (!(r[i - 1] > 0.0)) return false;
          } else {
            if (r[i - 1] < rb + gap) r[i - 1] = rb + gap;
          }
        }
      }
    }
    ratios_to_counts(r, counts_);
    return counts_.allFinite() && counts_[0] >= 1.0 && constraint_min(counts_) >= 0.0;
  }

  // Boundary points count as feasible: the stage-2 penalty is zero at C_i = 0,
  // so the enforced region is the closure.
  bool feasible(const Eigen::VectorXd& r, double slack = 0.0) {
    if (!r.allFinite() || (r.array() <= 0.0).any()) return false;
    ratios_to_counts(r, counts_);
    if (!counts_.allFinite()) return false;
    return constraint_min(counts_) >= -slack;
  }

 private:
  const ModelSuite& suite_;
  StrategyKind kind_;
  const Beta& beta_;
  double budget_;
  AlphaMode mode_;
  bool ordering_;
  double penalty_scale_;
  int m_;
  CovariancePartition part_;
  Eigen::VectorXd counts_;
  std::vector<double> branch_;
  StrategyMatrices mats_;
  VarianceWorkspace ws_;
};

Eigen::VectorXd fd_gradient(Evaluator& ev, const Eigen::VectorXd& r, double rel_step) {
  Eigen::VectorXd grad(r.size());
  Eigen::VectorXd probe = r;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double h = rel_step * std::abs(r[i]);
    probe[i] = r[i] + h;
    const double fp = ev.raw(probe);
    probe[i] = r[i] - h;
    const double fm = ev.raw(probe);
    probe[i] = r[i];
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Stage 1: feasible-iterate gradient descent with Barzilai-Borwein step
// guesses and Armijo backtracking. The descent runs on s = log(r): optimal
// ratios routinely span several decades, and the log parameterization keeps a
// single scalar step useful for all coordinates (and r positive by
// construction). Gradients are central finite differences in r, chain-ruled.
Eigen::VectorXd stage1_descend(Evaluator& ev, const Eigen::VectorXd& start,
                               const OptimizationOptions& opts, double& final_value) {
  Eigen::VectorXd r = start;
  Eigen::VectorXd s = start.array().log();
  double f = ev.raw(r);
  auto log_gradient = [&](const Eigen::VectorXd& at) -> Eigen::VectorXd {
    const Eigen::VectorXd g = fd_gradient(ev, at, opts.gradient_step);
    return (g.array() * at.array()).matrix();
  };
  Eigen::VectorXd grad = log_gradient(r);
  Eigen::VectorXd prev_s = s, prev_grad = grad;
  bool have_prev = false;

  for (int iter = 0; iter < opts.stage1_max_iters; ++iter) {
    const double gnorm2 = grad.squaredNorm();
    if (!(gnorm2 > 0.0) || !std::isfinite(gnorm2)) break;

    double t;
    if (have_prev) {
      const Eigen::VectorXd ds = s - prev_s;
      const Eigen::VectorXd dg = grad - prev_grad;
      const double denom = ds.dot(dg);
      t = (denom > 0.0) ? ds.squaredNorm() / denom : 1.0 / std::sqrt(gnorm2);
    } else {
      t = 0.1 * std::max(s.cwiseAbs().maxCoeff(), 1.0) / std::sqrt(gnorm2);
    }

    Eigen::VectorXd cand_s, cand_r;
    double fc = kInf;
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      cand_s = s - t * grad;
      cand_r = cand_s.array().exp();
      // Slide along active walls instead of jamming against them.
      if (ev.project_walls(cand_r)) {
        cand_s = cand_r.array().log();
        const double move2 = (cand_s - s).squaredNorm();
        if (move2 == 0.0) break;
        fc = ev.raw(cand_r);
        // Armijo along the projection arc; reduces to the classical condition
        // when no constraint is active.
        if (fc <= f - 1e-4 * move2 / t) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) break;

    prev_s = s;
    prev_grad = grad;
    have_prev = true;
    const double drop = f - fc;
    s = cand_s;
    r = cand_r;
    f = fc;
    grad = log_gradient(r);
    if (drop <= opts.stage1_tolerance * std::max(1.0, std::abs(f))) break;
  }
  final_value = f;
  return r;
}

// Stage 2: Nelder-Mead with standard coefficients (reflection 1, expansion 2,
// contraction 0.5, shrink 0.5), both tolerances absolute, best-ever tracking.
Eigen::VectorXd stage2_simplex(Evaluator& ev, const Eigen::VectorXd& start,
                               const OptimizationOptions& opts, double& final_value) {
  const int n = static_cast<int>(start.size());
  const int max_evals = opts.stage2_evals_per_model * n;
  int evals = 0;

  Eigen::VectorXd best_x = start;
  double best_f = kInf;
  auto probe = [&](const Eigen::VectorXd& x) {
    const double fx = ev.penalized(x);
    ++evals;
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
    return fx;
  };

  std::vector<Eigen::VectorXd> sim(static_cast<std::size_t>(n) + 1, start);
  std::vector<double> fs(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k < n; ++k) {
    auto& v = sim[static_cast<std::size_t>(k) + 1];
    if (v[k] != 0.0)
      v[k] *= 1.05;
    else
      v[k] = 0.00025;
  }
  for (std::size_t k = 0; k < sim.size(); ++k) fs[k] = probe(sim[k]);

  std::vector<std::size_t> order(sim.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> s2(sim.size());
    std::vector<double> f2(fs.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      s2[k] = sim[order[k]];
      f2[k] = fs[order[k]];
    }
    sim.swap(s2);
    fs.swap(f2);
  };
  sort_simplex();

  Eigen::VectorXd centroid(n), xr(n), xe(n), xc(n);
  while (evals < max_evals) {
    double xspread = 0.0, fspread = 0.0;
    for (std::size_t k = 1; k < sim.size(); ++k) {
      xspread = std::max(xspread, (sim[k] - sim[0]).cwiseAbs().maxCoeff());
      fspread = std::max(fspread, std::abs(fs[k] - fs[0]));
    }
    if (xspread <= opts.stage2_tolerance && fspread <= opts.stage2_tolerance) break;

    centroid.setZero();
    for (std::size_t k = 0; k + 1 < sim.size(); ++k) centroid += sim[k];
    centroid /= static_cast<double>(n);
    const auto& worst = sim.back();

    xr = centroid + (centroid - worst);
    const double fr = probe(xr);
    bool shrink = false;
    if (fr < fs[0]) {
      xe = centroid + 2.0 * (centroid - worst);
      const double fe = probe(xe);
      if (fe < fr) {
        sim.back() = xe;
        fs.back() = fe;
      } else {
        sim.back() = xr;
        fs.back() = fr;
      }
    } else if (fr < fs[fs.size() - 2]) {
      sim.back() = xr;
      fs.back() = fr;
    } else if (fr < fs.back()) {
      xc = centroid + 0.5 * (centroid - worst);
      const double fc = probe(xc);
      if (fc <= fr) {
        sim.back() = xc;
        fs.back() = fc;
      } else {
        shrink = true;
      }
    } else {
      xc = centroid - 0.5 * (centroid - worst);
      const double fc = probe(xc);
      if (fc < fs.back()) {
        sim.back() = xc;
        fs.back() = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t k = 1; k < sim.size(); ++k) {
        sim[k] = sim[0] + 0.5 * (sim[k] - sim[0]);
        fs[k] = probe(sim[k]);
      }
    }
    sort_simplex();
  }

  final_value = best_f;
  return best_x;
}

}  // namespace

Eigen::VectorXd counts_from_ratios(const Eigen::VectorXd& r, double budget,
                                   const ModelSuite& suite, StrategyKind kind, const Beta& beta) {
  const int m = suite.m();
  if (static_cast<int>(r.size()) != m)
    fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(m) + " ratios");
  if (m == 0) {
    Eigen::VectorXd counts(1);
    counts[0] = budget / suite.costs[0];
    return counts;
  }
  try {
    validate_beta(beta, m);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidBeta, e.what());
  }
  double denom = suite.costs[0];
  for (int i = 1; i <= m; ++i) {
    const int b = beta[static_cast<std::size_t>(i) - 1];
    const double rb = (b == 0) ? 1.0 : r[b - 1];
    denom += suite.costs[i] * ratio_union(kind, rb, r[i - 1]);
  }
  Eigen::VectorXd counts(m + 1);
  counts[0] = budget / denom;
  for (int i = 1; i <= m; ++i) counts[i] = r[i - 1] * counts[0];
  return counts;
}

SubOptResult floor_allocation(const Eigen::VectorXd& relaxed_counts, const ModelSuite& suite,
                              StrategyKind kind, const Beta& beta, double budget,
                              AlphaMode alpha_mode) {
  const int m = suite.m();
  if (relaxed_counts.size() != m + 1)
    fail(ErrorCode::DimensionMismatch, "relaxed counts length mismatch");
  try {
    validate_beta(beta, m);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidBeta, e.what());
  }

  Eigen::VectorXd counts = relaxed_counts.array().floor();
  if (counts[0] < 1.0)
    fail(ErrorCode::DegenerateBudget, "N_0 floors to " + std::to_string(counts[0]));
  for (int i = 1; i <= m; ++i)
    if (counts[i] < 1.0)
      fail(ErrorCode::Infeasible, "N_" + std::to_string(i) + " floors below 1");

  if (kind == StrategyKind::GMF) {
    // Flooring can collapse a parent/child pair to within 1; decrement the
    // smaller of the two until every pair differs by more than 1.
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 1; i <= m; ++i) {
        const int b = beta[static_cast<std::size_t>(i) - 1];
        if (std::abs(counts[b] - counts[i]) > 1.0) continue;
        int victim;
        if (counts[b] < counts[i])
          victim = b;
        else if (counts[i] < counts[b])
          victim = i;
        else
          victim = (relaxed_counts[b] < relaxed_counts[i]) ? b : i;
        counts[victim] -= 1.0;
        if (counts[victim] < 1.0)
          fail(ErrorCode::Infeasible, "GMF separation cannot be repaired for pair (" +
                                          std::to_string(b) + "," + std::to_string(i) + ")");
        changed = true;
      }
    }
  }

  SubOptResult result;
  result.counts.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i)
    result.counts[static_cast<std::size_t>(i)] = static_cast<long long>(counts[i]);

  const Eigen::VectorXd evals = eval_counts(kind, counts, beta);
  double cost = estimator_cost(evals, suite.costs);
  if (cost > budget) {
    // Flooring only removes evaluations, so the true cost is below budget;
    // compute it as budget minus the nonnegative slack to keep that exact.
    const Eigen::VectorXd evals_rel = eval_counts(kind, relaxed_counts, beta);
    double slack = 0.0;
    for (int i = 0; i <= m; ++i) slack += suite.costs[i] * (evals_rel[i] - evals[i]);
    cost = budget - slack;
    if (cost > budget) cost = budget;
  }
  result.actual_cost = cost;

  const CovariancePartition part = partition_covariance(suite);
  const StrategyMatrices mats = build_strategy_matrices(kind, counts, beta);
  if (alpha_mode == AlphaMode::FixedMinusOne) {
    result.alpha = Eigen::VectorXd::Constant(m, -1.0);
    result.variance = variance_with_alpha(result.alpha, counts[0], mats, part);
  } else {
    VarianceReport report = variance_optimal(counts[0], mats, part);
    result.variance = report.variance;
    result.alpha = report.alpha;
    result.conditioning_flag = report.conditioning_flag;
  }
  result.feasible = true;
  return result;
}

namespace {

SubOptResult run_pipeline(const ModelSuite& suite, StrategyKind kind, const Beta& beta,
                          double budget, const OptimizationOptions& opts, AlphaMode alpha_mode,
                          bool ordering_constraint) {
  const int m = suite.m();

  Evaluator ev(suite, kind, beta, budget, alpha_mode, ordering_constraint, opts.penalty_scale);

  Eigen::VectorXd r0;
  if (opts.initial_ratios.size() == m) {
    r0 = opts.initial_ratios;
  } else {
    r0.resize(m);
    for (int i = 0; i < m; ++i) r0[i] = static_cast<double>(i) + 2.0;
  }

  ev.fix_branches(r0);

  SubOptResult result;
  result.stage_trace[0] = ev.penalized(r0);

  Eigen::VectorXd r_stage2_start = r0;
  if (ev.feasible(r0)) {
    double f1 = kInf;
    Eigen::VectorXd r1 = stage1_descend(ev, r0, opts, f1);
    // A stage-1 exit violating any constraint by more than 1e-8 is discarded
    // and stage 2 restarts from the fixed initial point.
    if (ev.feasible(r1, 1e-8)) {
      r_stage2_start = r1;
      result.stage_trace[1] = f1;
    } else {
      result.stage_trace[1] = result.stage_trace[0];
    }
  } else {
    result.stage_trace[1] = result.stage_trace[0];
  }

  double f2 = kInf;
  const Eigen::VectorXd r_best = stage2_simplex(ev, r_stage2_start, opts, f2);
  result.stage_trace[2] = f2;

  const Eigen::VectorXd relaxed = counts_from_ratios(r_best, budget, suite, kind, beta);
  result.relaxed_counts = relaxed;
  result.relaxed_variance = ev.variance_at_counts(relaxed);

  try {
    SubOptResult floored = floor_allocation(relaxed, suite, kind, beta, budget, alpha_mode);
    floored.stage_trace = result.stage_trace;
    floored.relaxed_variance = result.relaxed_variance;
    floored.relaxed_counts = result.relaxed_counts;
    return floored;
  } catch (const Error& e) {
    result.feasible = false;
    result.failure = e.code();
    return result;
  }
}

}  // namespace

SubOptResult optimize_suballocation(const ModelSuite& suite, StrategyKind kind, const Beta& beta,
                                    double budget, const OptimizationOptions& opts,
                                    AlphaMode alpha_mode, bool ordering_constraint) {
  const int m = suite.m();
  if (m < 1) fail(ErrorCode::DimensionMismatch, "sub-optimization needs at least one surrogate");
  try {
    validate_beta(beta, m);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidBeta, e.what());
  }
  if (!(budget > 0.0)) fail(ErrorCode::BudgetTooSmall, "budget must be positive");

  SubOptResult result = run_pipeline(suite, kind, beta, budget, opts, alpha_mode,
                                     ordering_constraint);
  // Every ordering-feasible allocation is feasible without the ordering
  // constraint, and the constrained trajectory sometimes lands in a deeper
  // basin. Probing it keeps the unconstrained GMF result at least as good as
  // its constrained counterpart on the same tree, which the algorithm
  // domination relations rely on.
  if (!ordering_constraint && kind == StrategyKind::GMF && m >= 2) {
    SubOptResult probe = run_pipeline(suite, kind, beta, budget, opts, alpha_mode, true);
    if (probe.feasible && (!result.feasible || probe.variance < result.variance)) return probe;
  }
  return result;
}

}  // namespace acvopt
