#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "streamopt/analytics.hpp"
#include "streamopt/projection.hpp"

namespace streamopt {

std::vector<double> project_capped_simplex(const std::vector<double>& v, double total,
                                           double cap,
                                           const std::vector<int>& support) {
  const size_t s = support.size();
  std::vector<double> out(v.size(), 0.0);
  if (total < -1e-12) throw std::invalid_argument("projection: total must be nonnegative");
  if (total > cap * static_cast<double>(s) + 1e-12) {
    throw std::invalid_argument("projection: total exceeds cap * support size");
  }
  if (s == 0) return out;
  total = std::clamp(total, 0.0, cap * static_cast<double>(s));

  std::vector<double> vs(s);
  for (size_t k = 0; k < s; ++k) vs[k] = v[support[k]];

  // x_i(th) = clamp(v_i - th, 0, cap); phi(th) = sum x_i(th) is piecewise
  // linear and nonincreasing with breakpoints at v_i and v_i - cap.
  std::vector<double> bp;
  bp.reserve(2 * s);
  for (double val : vs) {
    bp.push_back(val);
    bp.push_back(val - cap);
  }
  std::sort(bp.begin(), bp.end());

  auto phi = [&](double th) {
    double sum = 0;
    for (double val : vs) sum += std::clamp(val - th, 0.0, cap);
    return sum;
  };

  const double lo = bp.front() - 1.0;  // phi(lo) = cap * s
  const double hi = bp.back() + 1.0;   // phi(hi) = 0
  int klo = -1;
  int khi = static_cast<int>(bp.size());
  while (khi - klo > 1) {
    const int mid = (klo + khi) / 2;
    if (phi(bp[mid]) >= total) {
      klo = mid;
    } else {
      khi = mid;
    }
  }
  const double a = klo >= 0 ? bp[klo] : lo;
  const double b = khi < static_cast<int>(bp.size()) ? bp[khi] : hi;
  const double fa = phi(a);
  const double seg_mid = 0.5 * (a + b);
  int nfree = 0;
  for (double val : vs) {
    if (val - cap < seg_mid && seg_mid < val) ++nfree;
  }
  const double theta = nfree > 0 ? a + (fa - total) / nfree : seg_mid;

  for (size_t k = 0; k < s; ++k) out[support[k]] = std::clamp(vs[k] - theta, 0.0, cap);

  // Spread residual rounding error over the strictly interior coords.
  double sum = 0;
  for (size_t k = 0; k < s; ++k) sum += out[support[k]];
  double diff = total - sum;
  if (std::abs(diff) > 1e-12 * std::max(1.0, total)) {
    std::vector<int> interior;
    for (size_t k = 0; k < s; ++k) {
      const double x = out[support[k]];
      if (x > 1e-12 && x < cap - 1e-12) interior.push_back(support[k]);
    }
    if (!interior.empty()) {
      const double bump = diff / static_cast<double>(interior.size());
      for (int idx : interior) out[idx] = std::clamp(out[idx] + bump, 0.0, cap);
    }
  }
  return out;
}

std::vector<double> project_capped_simplex(const std::vector<double>& v, double total,
                                           double cap) {
  std::vector<int> support(v.size());
  std::iota(support.begin(), support.end(), 0);
  return project_capped_simplex(v, total, cap, support);
}

std::vector<double> project_box_budget(const std::vector<double>& v, double cap,
                                       double budget) {
  std::vector<double> out(v.size());
  double sum = 0;
  for (size_t k = 0; k < v.size(); ++k) {
    out[k] = std::clamp(v[k], 0.0, cap);
    sum += out[k];
  }
  if (sum <= budget) return out;
  return project_capped_simplex(v, budget, cap);
}

double project_t(const Instance& inst, const PolicyVars& pol, int i) {
  const double upper = t_feasible_upper(inst, pol, i);
  return std::clamp(pol.t[i], inst.solver.slack_delta, upper);
}

}  // namespace streamopt
