#pragma once

#include <vector>

#include "streamopt/types.hpp"

namespace streamopt {

// Euclidean projection onto { x : sum_{i in support} x_i = total,
// 0 <= x_i <= cap, x_i = 0 off support }. Exact threshold search over
// the piecewise-linear dual. Throws std::invalid_argument when
// total > cap * |support| (beyond 1e-12) or total < 0.
std::vector<double> project_capped_simplex(const std::vector<double>& v, double total,
                                           double cap,
                                           const std::vector<int>& support);

// Convenience overload with full support.
std::vector<double> project_capped_simplex(const std::vector<double>& v, double total,
                                           double cap);

// Euclidean projection onto { x : 0 <= x_i <= cap, sum x_i <= budget }.
// Clips to the box; if the clipped sum exceeds the budget the budget
// face binds and the capped-simplex projection applies.
std::vector<double> project_box_budget(const std::vector<double>& v, double cap,
                                       double budget);

// Clamps the policy's exponent t_i into [slack_delta, upper] where
// upper comes from t_feasible_upper. Throws EmptyIntervalError when the
// interval is empty.
double project_t(const Instance& inst, const PolicyVars& pol, int i);

}  // namespace streamopt
