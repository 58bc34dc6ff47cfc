#pragma once

#include <cstdint>
#include <vector>

#include "acvopt/errors.hpp"

namespace acvopt {

// A recursion assignment for M low-fidelity models: beta[i-1] names the model
// whose samples seed model i's correction pair. Entries live in {0, ..., M}
// and the directed graph i -> beta_i must reach 0 without cycles.
using Beta = std::vector<int>;

enum class TreeFamily { KL, SR, MR };

void validate_beta(const Beta& beta, int m);

Beta kl_beta(int k, int l, int m);

std::vector<Beta> enumerate_trees(TreeFamily family, int m);

std::uint64_t count_trees(TreeFamily family, int m);

}  // namespace acvopt
