#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "streamopt/optimizer.hpp"
#include "streamopt/projection.hpp"
#include "streamopt/validate.hpp"

namespace streamopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Worst margined strict-constraint slack (<= 0 means feasible with the
// configured slack margin). Mirrors the strict checks of
// validate_policy but returns a scalar and never throws, so the line
// search can probe infeasible candidates cheaply. Segment-count classes
// share transform evaluations.
double strict_slack(const Instance& inst, const PolicyVars& pol) {
  const double delta = inst.solver.slack_delta;
  const double tau = inst.streaming.segment_seconds;
  const int m = inst.num_servers();
  const int V = inst.levels();
  const int D = inst.total_streams();
  const int r = inst.num_videos();

  std::vector<int> class_L;
  {
    std::set<int> lengths;
    for (const VideoSpec& vid : inst.videos) lengths.insert(vid.num_segments);
    class_L.assign(lengths.begin(), lengths.end());
  }
  const int ncls = static_cast<int>(class_L.size());
  std::vector<int> lclass(r);
  for (int i = 0; i < r; ++i) {
    lclass[i] = static_cast<int>(
        std::lower_bound(class_L.begin(), class_L.end(), inst.videos[i].num_segments) -
        class_L.begin());
  }

  struct SlackStream {
    double lambda = 0;
    double rho = 0;
    std::vector<double> alpha, beta;  // per level
    std::vector<double> xg;           // ncls * V arrival mass
  };
  std::vector<SlackStream> st(D);
  for (int j = 0; j < m; ++j) {
    for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
      SlackStream& s = st[inst.stream_offset(j) + nu];
      const double w = pol.w[j][nu];
      s.alpha.assign(V, 0.0);
      s.beta.assign(V, 0.0);
      s.xg.assign(static_cast<size_t>(ncls) * V, 0.0);
      for (int l = 0; l < V; ++l) {
        const double a = inst.ladder.sizes[l];
        s.alpha[l] = w > 0 ? inst.servers[j].alpha_base * w / a : 0.0;
        s.beta[l] = inst.servers[j].beta_base * a;
      }
    }
  }
  for (int i = 0; i < r; ++i) {
    const VideoSpec& vid = inst.videos[i];
    for (int l = 0; l < V; ++l) {
      const double rate = vid.arrival_rate * pol.b[i][l];
      if (!(rate > 0)) continue;
      for (int j : vid.placement[l]) {
        const double qv = pol.q[i][l][j];
        if (!(qv > 0)) continue;
        for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
          const double x = rate * qv * pol.p[l][j][nu];
          if (!(x > 0)) continue;
          SlackStream& s = st[inst.stream_offset(j) + nu];
          if (!(s.alpha[l] > 0)) return kInf;  // mass on zero bandwidth share
          s.xg[static_cast<size_t>(lclass[i]) * V + l] += x;
          s.lambda += x;
          s.rho += x * vid.num_segments * (s.beta[l] + 1.0 / s.alpha[l]);
        }
      }
    }
  }

  double worst = -kInf;
  for (const SlackStream& s : st) {
    if (s.lambda > 0) worst = std::max(worst, s.rho - (1.0 - delta));
  }

  for (int i = 0; i < r; ++i) {
    const VideoSpec& vid = inst.videos[i];
    const double t = pol.t[i];
    if (!(t > 0)) return kInf;
    std::set<int> touched;
    for (int l = 0; l < V; ++l) {
      for (int j : vid.placement[l]) {
        if (!(pol.q[i][l][j] > 0)) continue;
        for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
          if (!(pol.p[l][j][nu] > 0)) continue;
          const int sidx = inst.stream_offset(j) + nu;
          const SlackStream& s = st[sidx];
          if (!(s.alpha[l] > 0)) return kInf;
          worst = std::max(worst, t - s.alpha[l] * (1.0 - delta));
          worst = std::max(worst,
                           s.alpha[l] * std::expm1((s.beta[l] - tau) * t) + t + delta * t);
          touched.insert(sidx);
        }
      }
    }
    for (int sidx : touched) {
      const SlackStream& s = st[sidx];
      if (!(s.lambda > 0) || s.rho >= 1) continue;
      double g = 0;
      for (int cls = 0; cls < ncls; ++cls) {
        for (int l = 0; l < V; ++l) {
          const double x = s.xg[static_cast<size_t>(cls) * V + l];
          if (!(x > 0)) continue;
          if (!(t < s.alpha[l])) return kInf;  // mixture transform undefined
          const double logm =
              std::log(s.alpha[l]) - std::log(s.alpha[l] - t) + s.beta[l] * t;
          g += x * std::exp(class_L[cls] * logm);
        }
      }
      if (!std::isfinite(g)) return kInf;
      worst = std::max(worst, g - s.lambda - t + delta * t);
    }
  }
  return worst;
}

// Flattened copy of one block, indexed as documented for grad_block.
std::vector<double> block_values(const Instance& inst, const PolicyVars& pol,
                                 BlockId block) {
  const int r = inst.num_videos();
  const int m = inst.num_servers();
  const int V = inst.levels();
  const int D = inst.total_streams();
  std::vector<double> out;
  switch (block) {
    case BlockId::Q_ACCESS:
      out.reserve(static_cast<size_t>(r) * V * m);
      for (int i = 0; i < r; ++i)
        for (int l = 0; l < V; ++l)
          for (int j = 0; j < m; ++j) out.push_back(pol.q[i][l][j]);
      break;
    case BlockId::P_STREAM:
      out.reserve(static_cast<size_t>(V) * D);
      for (int l = 0; l < V; ++l)
        for (int j = 0; j < m; ++j)
          for (int nu = 0; nu < inst.servers[j].num_streams; ++nu)
            out.push_back(pol.p[l][j][nu]);
      break;
    case BlockId::T_AUX:
      out = pol.t;
      break;
    case BlockId::B_QUALITY:
      out.reserve(static_cast<size_t>(r) * V);
      for (int i = 0; i < r; ++i)
        for (int l = 0; l < V; ++l) out.push_back(pol.b[i][l]);
      break;
    case BlockId::W_BANDWIDTH:
      out.reserve(D);
      for (int j = 0; j < m; ++j)
        for (int nu = 0; nu < inst.servers[j].num_streams; ++nu)
          out.push_back(pol.w[j][nu]);
      break;
  }
  return out;
}

// Closed-form minimizer of grad^T (x - x0) + reg/2 ||x - x0||^2 over the
// block's own constraint set.
PolicyVars prox_target(const Instance& inst, const PolicyVars& pol, BlockId block,
                       const std::vector<double>& grad) {
  const int r = inst.num_videos();
  const int m = inst.num_servers();
  const int V = inst.levels();
  const int D = inst.total_streams();
  PolicyVars out = pol;
  switch (block) {
    case BlockId::Q_ACCESS: {
      const double reg = inst.solver.reg.q;
      for (int i = 0; i < r; ++i) {
        for (int l = 0; l < V; ++l) {
          std::vector<double> v(m, 0.0);
          for (int j : inst.videos[i].placement[l]) {
            v[j] = pol.q[i][l][j] - grad[(static_cast<size_t>(i) * V + l) * m + j] / reg;
          }
          out.q[i][l] = project_capped_simplex(v, inst.videos[i].code_k, 1.0,
                                               inst.videos[i].placement[l]);
        }
      }
      break;
    }
    case BlockId::P_STREAM: {
      const double reg = inst.solver.reg.p;
      for (int l = 0; l < V; ++l) {
        for (int j = 0; j < m; ++j) {
          const int d = inst.servers[j].num_streams;
          std::vector<double> v(d);
          for (int nu = 0; nu < d; ++nu) {
            v[nu] = pol.p[l][j][nu] -
                    grad[static_cast<size_t>(l) * D + inst.stream_offset(j) + nu] / reg;
          }
          out.p[l][j] = project_capped_simplex(v, 1.0, 1.0);
        }
      }
      break;
    }
    case BlockId::T_AUX: {
      const double reg = inst.solver.reg.t;
      for (int i = 0; i < r; ++i) {
        out.t[i] = pol.t[i] - grad[i] / reg;
        out.t[i] = project_t(inst, out, i);
      }
      break;
    }
    case BlockId::B_QUALITY: {
      const double reg = inst.solver.reg.b;
      for (int i = 0; i < r; ++i) {
        std::vector<double> v(V);
        for (int l = 0; l < V; ++l) {
          v[l] = pol.b[i][l] - grad[static_cast<size_t>(i) * V + l] / reg;
        }
        out.b[i] = project_capped_simplex(v, 1.0, 1.0);
      }
      break;
    }
    case BlockId::W_BANDWIDTH: {
      const double reg = inst.solver.reg.w;
      for (int j = 0; j < m; ++j) {
        const int d = inst.servers[j].num_streams;
        std::vector<double> v(d);
        for (int nu = 0; nu < d; ++nu) {
          v[nu] = pol.w[j][nu] - grad[inst.stream_offset(j) + nu] / reg;
        }
        out.w[j] = project_box_budget(v, 1.0, 1.0);
      }
      break;
    }
  }
  return out;
}

PolicyVars blend(const Instance& inst, const PolicyVars& base, const PolicyVars& hat,
                 double gamma, BlockId block) {
  PolicyVars out = base;
  const int r = inst.num_videos();
  const int m = inst.num_servers();
  const int V = inst.levels();
  switch (block) {
    case BlockId::Q_ACCESS:
      for (int i = 0; i < r; ++i)
        for (int l = 0; l < V; ++l)
          for (int j = 0; j < m; ++j)
            out.q[i][l][j] = base.q[i][l][j] + gamma * (hat.q[i][l][j] - base.q[i][l][j]);
      break;
    case BlockId::P_STREAM:
      for (int l = 0; l < V; ++l)
        for (int j = 0; j < m; ++j)
          for (int nu = 0; nu < inst.servers[j].num_streams; ++nu)
            out.p[l][j][nu] =
                base.p[l][j][nu] + gamma * (hat.p[l][j][nu] - base.p[l][j][nu]);
      break;
    case BlockId::T_AUX:
      for (int i = 0; i < r; ++i) out.t[i] = base.t[i] + gamma * (hat.t[i] - base.t[i]);
      break;
    case BlockId::B_QUALITY:
      for (int i = 0; i < r; ++i)
        for (int l = 0; l < V; ++l)
          out.b[i][l] = base.b[i][l] + gamma * (hat.b[i][l] - base.b[i][l]);
      break;
    case BlockId::W_BANDWIDTH:
      for (int j = 0; j < m; ++j)
        for (int nu = 0; nu < inst.servers[j].num_streams; ++nu)
          out.w[j][nu] = base.w[j][nu] + gamma * (hat.w[j][nu] - base.w[j][nu]);
      break;
  }
  return out;
}

double l2_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

PolicyVars nova_step(const Instance& inst, const PolicyVars& pol, double theta,
                     BlockId block, TraceRow* row) {
  const std::vector<double> grad = grad_block(inst, pol, theta, block);
  const PolicyVars hat = prox_target(inst, pol, block, grad);
  const double obj0 = objective_value(inst, pol, theta);
  const double accept_tol = 1e-12 * std::max(1.0, std::abs(obj0));

  double gamma = inst.solver.step_gamma;
  constexpr int kMaxHalvings = 60;
  int halvings = 0;
  while (halvings <= kMaxHalvings) {
    const PolicyVars cand = blend(inst, pol, hat, gamma, block);
    const double slack = strict_slack(inst, cand);
    if (slack <= 0) {
      bool ok = true;
      double obj = 0;
      try {
        obj = objective_value(inst, cand, theta);
      } catch (const DomainError&) {
        ok = false;
      }
      if (ok && std::isfinite(obj) && obj <= obj0 + accept_tol) {
        if (row) {
          row->block = block;
          row->objective = obj;
          row->inner_steps = halvings;
          row->max_slack = slack;
        }
        return cand;
      }
    }
    gamma *= 0.5;
    ++halvings;
  }
  if (row) {
    row->block = block;
    row->objective = obj0;
    row->inner_steps = halvings;
    row->max_slack = strict_slack(inst, pol);
  }
  return pol;
}

OptimizeResult alternating_optimize(const Instance& inst, double theta,
                                    const PolicyVars& init,
                                    const std::vector<BlockId>& free_blocks) {
  const Feasibility feas = validate_policy(inst, init);
  if (!feas.ok) throw FeasibilityError(feas.violations);

  auto is_free = [&](BlockId b) {
    return std::find(free_blocks.begin(), free_blocks.end(), b) != free_blocks.end();
  };

  OptimizeResult res;
  res.policy = init;
  double obj = objective_value(inst, init, theta);
  for (int outer = 1; outer <= inst.solver.max_outer_iters; ++outer) {
    const double prev = obj;
    for (BlockId block : kBlockOrder) {
      if (!is_free(block)) continue;
      TraceRow row;
      res.policy = nova_step(inst, res.policy, theta, block, &row);
      row.outer = outer;
      obj = row.objective;
      res.trace.push_back(row);
    }
    res.outer_iters = outer;
    if (std::abs(prev - obj) <= inst.solver.epsilon) {
      res.converged = true;
      break;
    }
  }
  res.objective = obj;
  for (size_t k = 0; k < kBlockOrder.size(); ++k) {
    const BlockId block = kBlockOrder[k];
    if (!is_free(block)) {
      res.stationarity[k] = 0;
      continue;
    }
    const std::vector<double> grad = grad_block(inst, res.policy, theta, block);
    const PolicyVars hat = prox_target(inst, res.policy, block, grad);
    res.stationarity[k] = l2_diff(block_values(inst, hat, block),
                                  block_values(inst, res.policy, block));
  }
  return res;
}

OptimizeResult alternating_optimize(const Instance& inst, double theta,
                                    const PolicyVars& init) {
  return alternating_optimize(
      inst, theta,
      init, {kBlockOrder.begin(), kBlockOrder.end()});
}

PolicyVars feasibility_repair(const Instance& inst, const PolicyVars& raw) {
  check_policy_shape(inst, raw);
  PolicyVars pol = raw;
  const int r = inst.num_videos();
  const int m = inst.num_servers();
  const int V = inst.levels();
  const double delta = inst.solver.slack_delta;
  const double tau = inst.streaming.segment_seconds;

  for (int j = 0; j < m; ++j) {
    pol.w[j] = project_box_budget(raw.w[j], 1.0, 1.0);
  }
  for (int l = 0; l < V; ++l) {
    for (int j = 0; j < m; ++j) {
      pol.p[l][j] = project_capped_simplex(raw.p[l][j], 1.0, 1.0);
    }
  }

  // A (level, stream) row admits an exponent only when the geometric
  // ratio margin holds somewhere, probed at the smallest exponent. A
  // level is servable from j only if every stream that p makes
  // reachable passes; otherwise access mass must move elsewhere.
  auto window_ok = [&](int l, int j, int nu) {
    const double w = pol.w[j][nu];
    if (!(w > 0)) return false;
    const double a = inst.ladder.sizes[l];
    const double alpha = inst.servers[j].alpha_base * w / a;
    const double beta = inst.servers[j].beta_base * a;
    if (!(delta < alpha * (1.0 - delta))) return false;
    return alpha * std::expm1((beta - tau) * delta) + delta <= -delta * delta;
  };
  std::vector<std::vector<char>> servable(V, std::vector<char>(m, 1));
  for (int l = 0; l < V; ++l) {
    for (int j = 0; j < m; ++j) {
      for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
        if (pol.p[l][j][nu] > 0 && !window_ok(l, j, nu)) {
          servable[l][j] = 0;
          break;
        }
      }
    }
  }

  for (int i = 0; i < r; ++i) {
    const VideoSpec& vid = inst.videos[i];
    for (int l = 0; l < V; ++l) {
      std::vector<int> support;
      for (int j : vid.placement[l]) {
        if (servable[l][j]) support.push_back(j);
      }
      if (static_cast<int>(support.size()) < vid.code_k) {
        throw EmptyIntervalError(
            "video " + std::to_string(vid.video_id) + " level " + std::to_string(l + 1) +
            ": only " + std::to_string(support.size()) +
            " placed servers can sustain the level, need " + std::to_string(vid.code_k));
      }
      std::vector<double> v(m, 0.0);
      for (int j : support) v[j] = raw.q[i][l][j];
      pol.q[i][l] = project_capped_simplex(v, vid.code_k, 1.0, support);
    }
    pol.b[i] = project_capped_simplex(raw.b[i], 1.0, 1.0);
  }
  for (int i = 0; i < r; ++i) {
    pol.t[i] = project_t(inst, pol, i);
  }
  return pol;
}

}  // namespace streamopt
