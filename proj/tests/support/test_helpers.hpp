#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "streamopt/analytics.hpp"
#include "streamopt/optimizer.hpp"
#include "streamopt/types.hpp"
#include "streamopt/validate.hpp"

namespace streamopt::testing {

// Oracle-side generator, independent of the library's Rng.
using OracleRng = std::mt19937_64;

inline double unif(OracleRng& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int unif_int(OracleRng& g, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

struct InstanceOpts {
  int servers = 3;
  int streams_per_server = 2;
  int videos = 3;
  int levels = 2;
  int code_n = 3;
  int code_k = 2;
  double rate_lo = 0.001;  // per-video arrival rate range
  double rate_hi = 0.004;
  int segments_lo = 5;
  int segments_hi = 15;
};

// Small random instance with generous feasibility margins: every level
// is servable from every server at the uniform bandwidth split.
inline Instance make_test_instance(OracleRng& g, const InstanceOpts& o = {}) {
  Instance inst;
  for (int j = 0; j < o.servers; ++j) {
    ServerSpec s;
    s.server_id = j + 1;
    s.alpha_base = unif(g, 6.0, 14.0);
    s.beta_base = unif(g, 0.005, 0.02);
    s.num_streams = o.streams_per_server;
    inst.servers.push_back(s);
  }
  inst.ladder.sizes.resize(o.levels);
  double sz = unif(g, 0.8, 1.2);
  for (int l = 0; l < o.levels; ++l) {
    inst.ladder.sizes[l] = sz;
    sz *= unif(g, 1.4, 1.9);
  }
  for (int i = 0; i < o.videos; ++i) {
    VideoSpec v;
    v.video_id = i + 1;
    v.arrival_rate = unif(g, o.rate_lo, o.rate_hi);
    v.num_segments = unif_int(g, o.segments_lo, o.segments_hi);
    v.code_n = std::min(o.code_n, o.servers);
    v.code_k = std::min(o.code_k, v.code_n);
    std::vector<int> all(o.servers);
    for (int j = 0; j < o.servers; ++j) all[j] = j;
    std::shuffle(all.begin(), all.end(), g);
    std::vector<int> place(all.begin(), all.begin() + v.code_n);
    std::sort(place.begin(), place.end());
    v.placement.assign(o.levels, place);
    inst.videos.push_back(v);
  }
  inst.streaming.segment_seconds = 5.0;
  inst.streaming.startup_delay = unif(g, 5.0, 8.0);
  inst.solver = SolverConfig{};
  inst.finalize();
  return inst;
}

// Multiplicative jitter on the uniform start, repaired back to the
// feasible set, with t redrawn inside its per-video window.
inline PolicyVars random_feasible_policy(const Instance& inst, OracleRng& g,
                                         double t_frac_lo = 0.2,
                                         double t_frac_hi = 0.8) {
  PolicyVars pol = make_uniform_policy(inst);
  auto jitter = [&](double& x) { x *= unif(g, 0.3, 1.7); };
  for (auto& vid : pol.q)
    for (auto& row : vid)
      for (double& x : row) jitter(x);
  for (auto& lvl : pol.p)
    for (auto& row : lvl)
      for (double& x : row) jitter(x);
  for (auto& row : pol.b)
    for (double& x : row) jitter(x);
  for (auto& row : pol.w)
    for (double& x : row) jitter(x);
  pol = feasibility_repair(inst, pol);
  for (int i = 0; i < inst.num_videos(); ++i) {
    const double up = t_feasible_upper(inst, pol, i);
    pol.t[i] = up * unif(g, t_frac_lo, t_frac_hi);
  }
  return pol;
}

// One server, one stream, full bandwidth: the lone stream is a
// textbook M/G/1 queue fed by every request. Two videos with 5 and 10
// segments; arrival rates chosen by the caller set the load.
inline Instance make_single_queue_instance(double lam1, double lam2) {
  Instance inst;
  ServerSpec s;
  s.server_id = 1;
  s.alpha_base = 10.0;
  s.beta_base = 0.01;
  s.num_streams = 1;
  inst.servers.push_back(s);
  inst.ladder.sizes = {1.0};
  for (int i = 0; i < 2; ++i) {
    VideoSpec v;
    v.video_id = i + 1;
    v.arrival_rate = i == 0 ? lam1 : lam2;
    v.num_segments = i == 0 ? 5 : 10;
    v.code_n = 1;
    v.code_k = 1;
    v.placement = {{0}};
    inst.videos.push_back(v);
  }
  inst.streaming.segment_seconds = 5.0;
  inst.streaming.startup_delay = 6.0;
  inst.finalize();
  return inst;
}

inline PolicyVars make_single_queue_policy(const Instance& inst) {
  PolicyVars pol = make_uniform_policy(inst);
  pol.w[0][0] = 1.0;
  return pol;  // q, p, b are already degenerate (single option each)
}

// Brute-force projection onto { sum_{i in support} x = total,
// 0 <= x_i <= cap } by enumerating active sets (3^n states), checking
// the KKT conditions of each candidate. Dimension must stay small.
inline std::vector<double> oracle_capped_simplex(const std::vector<double>& v,
                                                 double total, double cap,
                                                 const std::vector<int>& support) {
  const int n = static_cast<int>(support.size());
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  const double tol = 1e-9;
  long states = 1;
  for (int i = 0; i < n; ++i) states *= 3;
  for (long s = 0; s < states; ++s) {
    long code = s;
    std::vector<int> state(n);  // 0 at zero, 1 interior, 2 at cap
    for (int i = 0; i < n; ++i) {
      state[i] = static_cast<int>(code % 3);
      code /= 3;
    }
    double sum_interior = 0;
    int n_interior = 0, n_cap = 0;
    for (int i = 0; i < n; ++i) {
      if (state[i] == 1) {
        sum_interior += v[support[i]];
        ++n_interior;
      } else if (state[i] == 2) {
        ++n_cap;
      }
    }
    double mu;
    if (n_interior > 0) {
      mu = (sum_interior + cap * n_cap - total) / n_interior;
    } else {
      if (std::abs(cap * n_cap - total) > tol) continue;
      mu = 0;  // free multiplier; KKT checks below pick a valid corner
    }
    bool ok = true;
    std::vector<double> x(v.size(), 0.0);
    for (int i = 0; i < n && ok; ++i) {
      const double vi = v[support[i]];
      if (state[i] == 1) {
        const double xi = vi - mu;
        if (xi < -tol || xi > cap + tol) ok = false;
        x[support[i]] = std::clamp(xi, 0.0, cap);
      } else if (state[i] == 0) {
        if (n_interior > 0 && vi - mu > tol) ok = false;
      } else {
        if (n_interior > 0 && vi - mu < cap - tol) ok = false;
        x[support[i]] = cap;
      }
    }
    if (!ok) continue;
    double sum = 0, dist = 0;
    for (int i = 0; i < n; ++i) {
      sum += x[support[i]];
      const double d = x[support[i]] - v[support[i]];
      dist += d * d;
    }
    if (std::abs(sum - total) > 1e-7) continue;
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

// Brute-force projection onto { 0 <= x_i <= cap, sum x <= budget }:
// either the budget is slack (pure clip) or it binds and the
// capped-simplex oracle applies at sum == budget.
inline std::vector<double> oracle_box_budget(const std::vector<double>& v, double cap,
                                             double budget) {
  std::vector<double> clip(v.size());
  double sum = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    clip[i] = std::clamp(v[i], 0.0, cap);
    sum += clip[i];
  }
  if (sum <= budget + 1e-12) return clip;
  std::vector<int> support(v.size());
  for (size_t i = 0; i < v.size(); ++i) support[i] = static_cast<int>(i);
  return oracle_capped_simplex(v, budget, cap, support);
}

// Golden-section minimizer for smooth single-minimum profiles.
template <typename F>
double golden_section(F f, double lo, double hi, int iters = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iters; ++k) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct MeanVar {
  double mean = 0;
  double var = 0;  // sample variance
  long n = 0;
};

inline MeanVar mean_var(const std::vector<double>& xs) {
  MeanVar mv;
  mv.n = static_cast<long>(xs.size());
  if (mv.n == 0) return mv;
  double s = 0;
  for (double x : xs) s += x;
  mv.mean = s / static_cast<double>(mv.n);
  double ss = 0;
  for (double x : xs) ss += (x - mv.mean) * (x - mv.mean);
  mv.var = mv.n > 1 ? ss / static_cast<double>(mv.n - 1) : 0;
  return mv;
}

inline bool close_rel(double a, double b, double tol, double floor = 1e-12) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace streamopt::testing
