#pragma once

#include <vector>

#include "streamopt/types.hpp"

namespace streamopt {

struct Feasibility {
  bool ok = true;
  std::vector<Violation> violations;
};

// Checks every policy constraint against the instance:
//   q_row_sum     sum_j q[i][l][j] == k_i
//   q_support     q zero off the placement set
//   q_box         0 <= q <= 1
//   p_simplex     p[l][j] rows on the probability simplex
//   b_simplex     b[i] rows on the probability simplex
//   w_box         0 <= w <= 1
//   w_budget      sum_nu w[j][nu] <= 1
//   rho_stability per-stream utilization < 1 (slack margin)
//   t_positive    t_i > 0
//   t_rate_cap    t_i below every active effective service rate (slack margin)
//   mgf_window    geometric tail ratio stays below 1 at t_i (slack margin)
//   queue_margin  queue transform denominator stays positive at t_i (slack margin)
// Equality and support checks use a 1e-9 absolute tolerance; strict
// inequalities are enforced with the solver's slack_delta margin.
// Throws DimensionError if shapes do not match.
Feasibility validate_policy(const Instance& inst, const PolicyVars& pol);

}  // namespace streamopt
