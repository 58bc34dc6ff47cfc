#include "acvopt/recursion.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace acvopt {

namespace {

std::string beta_to_string(const Beta& beta) {
  std::string out = "(";
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(beta[i]);
  }
  out += ")";
  return out;
}

// Depth of each node in the zero-rooted tree; beta assumed valid.
std::vector<int> node_depths(const Beta& beta) {
  const int m = static_cast<int>(beta.size());
  std::vector<int> depth(static_cast<std::size_t>(m) + 1, -1);
  depth[0] = 0;
  for (int i = 1; i <= m; ++i) {
    int node = i;
    std::vector<int> chain;
    while (depth[static_cast<std::size_t>(node)] < 0) {
      chain.push_back(node);
      node = beta[static_cast<std::size_t>(node) - 1];
    }
    int d = depth[static_cast<std::size_t>(node)];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      depth[static_cast<std::size_t>(*it)] = ++d;
  }
  return depth;
}

std::uint64_t binomial(int n, int k) {
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i)
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return result;
}

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t result = 1;
  for (int i = 0; i < exp; ++i) result *= base;
  return result;
}

}  // namespace

void validate_beta(const Beta& beta, int m) {
  if (static_cast<int>(beta.size()) != m)
    fail(ErrorCode::DimensionMismatch, "beta has length " + std::to_string(beta.size()) +
                                           ", expected " + std::to_string(m));
  for (int i = 1; i <= m; ++i) {
    const int target = beta[static_cast<std::size_t>(i) - 1];
    if (target < 0 || target > m)
      fail(ErrorCode::OutOfRangeTarget, "beta_" + std::to_string(i) + " = " +
                                            std::to_string(target) + " not in 0.." +
                                            std::to_string(m));
  }

  // Walk each chain toward the root; any revisit before reaching 0 is a cycle.
  std::vector<int> state(static_cast<std::size_t>(m) + 1, 0);  // 0 unseen, 1 on path, 2 done
  state[0] = 2;
  for (int i = 1; i <= m; ++i) {
    if (state[static_cast<std::size_t>(i)] == 2) continue;
    std::vector<int> path;
    int node = i;
    while (state[static_cast<std::size_t>(node)] == 0) {
      state[static_cast<std::size_t>(node)] = 1;
      path.push_back(node);
      node = beta[static_cast<std::size_t>(node) - 1];
    }
    if (state[static_cast<std::size_t>(node)] == 1) {
      std::string cycle;
      bool in_cycle = false;
      for (int p : path) {
        if (p == node) in_cycle = true;
        if (in_cycle) cycle += std::to_string(p) + "->";
      }
      cycle += std::to_string(node);
      fail(ErrorCode::CyclicAssignment, "cycle " + cycle + " in beta " + beta_to_string(beta));
    }
    for (int p : path) state[static_cast<std::size_t>(p)] = 2;
  }
}

Beta kl_beta(int k, int l, int m) {
  if (m < 1) fail(ErrorCode::OutOfRange, "M must be >= 1");
  if (k < 1 || k > m)
    fail(ErrorCode::OutOfRange, "K = " + std::to_string(k) + " not in 1.." + std::to_string(m));
  if (l < 0 || l > k)
    fail(ErrorCode::OutOfRange, "L = " + std::to_string(l) + " not in 0.." + std::to_string(k));
  Beta beta(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) beta[static_cast<std::size_t>(i) - 1] = (i <= k) ? 0 : l;
  return beta;
}

std::vector<Beta> enumerate_trees(TreeFamily family, int m) {
  if (m < 1) fail(ErrorCode::OutOfRange, "M must be >= 1");

  if (family == TreeFamily::KL) {
    std::set<Beta> seen;
    for (int k = 1; k <= m; ++k)
      for (int l = 0; l <= k; ++l) seen.insert(kl_beta(k, l, m));
    return {seen.begin(), seen.end()};
  }

  // Odometer over parent assignments emits betas in lexicographic order.
  std::vector<Beta> trees;
  Beta beta(static_cast<std::size_t>(m), 0);
  const bool depth_limited = (family == TreeFamily::SR);
  while (true) {
    bool valid = true;
    try {
      validate_beta(beta, m);
    } catch (const Error&) {
      valid = false;
    }
    if (valid && depth_limited) {
      const auto depth = node_depths(beta);
      for (int d : depth)
        if (d > 2) {
          valid = false;
          break;
        }
    }
    if (valid) trees.push_back(beta);

    int pos = m - 1;
    while (pos >= 0 && beta[static_cast<std::size_t>(pos)] == m) {
      beta[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++beta[static_cast<std::size_t>(pos)];
  }
  return trees;
}

std::uint64_t count_trees(TreeFamily family, int m) {
  if (m < 1) fail(ErrorCode::OutOfRange, "M must be >= 1");
  switch (family) {
    case TreeFamily::KL:
      return 1 + static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m - 1) / 2;
    case TreeFamily::SR: {
      std::uint64_t total = 0;
      for (int k = 1; k <= m; ++k)
        total += binomial(m, k) * ipow(static_cast<std::uint64_t>(k), m - k);
      return total;
    }
    case TreeFamily::MR:
      return ipow(static_cast<std::uint64_t>(m) + 1, m - 1);
  }
  fail(ErrorCode::BadInput, "unknown tree family");
}

}  // namespace acvopt
