#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "matchmarket/assignment.hpp"
#include "matchmarket/error.hpp"
#include "matchmarket/market.hpp"

namespace matchmarket {

/// Welfare-maximizing matching: max sum_i u_i over the matching polytope.
/// The optimum is attained at an integral vertex, which is what is returned.
struct FairSolution {
  FractionalMatching matching;
  double value = 0.0;
  Assignment assignment;
  AssignmentDuals duals;
};

inline FairSolution solve_fair(const MarketInstance& inst) {
  FairSolution sol;
  sol.assignment = max_weight_matching(inst.weights());
  sol.duals = matching_duals(inst.weights(), sol.assignment);
  sol.matching = FractionalMatching::from(inst, sol.assignment.to_matrix(inst.n()));
  sol.value = sol.matching.total_utility();
  return sol;
}

/// Exact optimum by enumerating every partial injection of the smaller side
/// into the larger one. Test oracle; limited to min(m, n) <= 8.
inline double brute_force_fair(const MarketInstance& inst) {
  const bool transpose = inst.m() > inst.n();
  const Matrix w = transpose ? inst.weights().transposed() : inst.weights();
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  if (rows > 8) throw Error(ErrorCode::TooLarge, "brute force limited to min(m,n) <= 8");

  std::vector<char> taken(cols, 0);
  double best = 0.0;
  auto dfs = [&](auto&& self, std::size_t i, double acc) -> void {
    if (i == rows) {
      best = std::max(best, acc);
      return;
    }
    self(self, i + 1, acc);
    for (std::size_t j = 0; j < cols; ++j) {
      if (taken[j]) continue;
      taken[j] = 1;
      self(self, i + 1, acc + w(i, j));
      taken[j] = 0;
    }
  };
  dfs(dfs, 0, 0.0);
  return best;
}

}  // namespace matchmarket
