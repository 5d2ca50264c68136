#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamopt/analytics.hpp"
#include "streamopt/simulator.hpp"

namespace streamopt {

double Rng::uniform() {
  // 53-bit mantissa draw mapped to (0, 1] so log() is always finite.
  return ((engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::exponential(double rate) {
  if (!(rate > 0)) throw DomainError("exponential rate must be positive");
  return -std::log(uniform()) / rate;
}

double Rng::shifted_exp(double alpha, double beta) {
  return beta + exponential(alpha);
}

int Rng::categorical(const std::vector<double>& weights) {
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw DomainError("categorical weight is negative");
    total += w;
  }
  if (!(total > 0)) throw DomainError("categorical weights sum to zero");
  double u = uniform() * total;
  int last_positive = -1;
  for (size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0) {
      last_positive = static_cast<int>(k);
      u -= weights[k];
      if (u <= 0) return last_positive;
    }
  }
  return last_positive;  // float fallthrough lands on the last usable cell
}

uint64_t Rng::split(uint64_t seed, uint64_t stream) {
  // splitmix64 round on a stream-offset state.
  uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::pair<int, int>> sample_selection(const Instance& inst,
                                                  const PolicyVars& pol, int i, int l,
                                                  Rng& rng) {
  const VideoSpec& vid = inst.videos[i];
  const std::vector<int>& servers = vid.placement[l];
  const int k = vid.code_k;

  double row_sum = 0;
  for (int j : servers) row_sum += pol.q[i][l][j];
  if (std::abs(row_sum - k) > 1e-9) {
    throw FeasibilityError({Violation{
        "q_row_sum", "video " + std::to_string(vid.video_id) + " level " +
                         std::to_string(l + 1),
        row_sum, static_cast<double>(k)}});
  }

  // Systematic sampling over a uniformly random server order gives
  // exactly k distinct picks with the q marginals.
  std::vector<int> perm = servers;
  for (size_t a = perm.size(); a > 1; --a) {
    const size_t b = static_cast<size_t>(rng.uniform() * a);
    std::swap(perm[a - 1], perm[std::min(b, a - 1)]);
  }
  const double u = rng.uniform();  // thresholds u, u+1, ..., u+k-1 in (0, k]
  std::vector<int> picked;
  picked.reserve(k);
  double cum = 0;
  double threshold = u;
  std::vector<char> taken(perm.size(), 0);
  for (size_t a = 0; a < perm.size() && static_cast<int>(picked.size()) < k; ++a) {
    cum += std::min(1.0, pol.q[i][l][perm[a]]);
    while (threshold <= cum && static_cast<int>(picked.size()) < k) {
      picked.push_back(perm[a]);
      taken[a] = 1;
      threshold += 1.0;
    }
  }
  // Float shortfall at the tail of the walk: fill from untaken servers
  // with the largest marginals.
  while (static_cast<int>(picked.size()) < k) {
    int best = -1;
    for (size_t a = 0; a < perm.size(); ++a) {
      if (taken[a]) continue;
      if (best < 0 || pol.q[i][l][perm[a]] > pol.q[i][l][perm[best]]) {
        best = static_cast<int>(a);
      }
    }
    taken[best] = 1;
    picked.push_back(perm[best]);
  }

  std::vector<std::pair<int, int>> selection;
  selection.reserve(k);
  for (int j : picked) {
    selection.push_back({j, rng.categorical(pol.p[l][j])});
  }
  return selection;
}

double stall_from_downloads(const std::vector<double>& d, double startup, double tau) {
  double t = 0;
  for (size_t u = 0; u < d.size(); ++u) {
    t = std::max(u == 0 ? startup : t + tau, d[u]);
  }
  // The recursion keeps t at or above the no-stall playout schedule, so
  // the difference is nonnegative up to rounding in the subtraction.
  return std::max(0.0, t - startup - (static_cast<double>(d.size()) - 1) * tau);
}

namespace {

struct CellStat {
  long n = 0;
  double sum = 0;
  double sumsq = 0;
};

struct RepOutcome {
  double mean_stall = 0;
  double quality = 0;
  long counted = 0;
  std::vector<CellStat> cell;          // (i * V + l)
  std::vector<double> wait_sum;        // per stream
  std::vector<long> wait_n;            // per stream
  std::vector<double> busy;            // per stream, capped at horizon
  double horizon = 0;
  std::vector<RequestTrace> trace;
};

RepOutcome run_replication(const Instance& inst, const PolicyVars& pol,
                           const SimConfig& cfg, uint64_t seed, long id_base) {
  Rng rng(seed);
  const int r = inst.num_videos();
  const int V = inst.levels();
  const int D = inst.total_streams();
  const double tau = inst.streaming.segment_seconds;
  const double startup = inst.streaming.startup_delay;
  const double total_rate = inst.total_arrival_rate();

  std::vector<double> video_weights(r);
  for (int i = 0; i < r; ++i) video_weights[i] = inst.videos[i].arrival_rate;

  // Superposed Poisson arrivals: exponential gaps at the total rate, the
  // video drawn by rate share.
  const long n = cfg.num_requests;
  std::vector<double> arrival(n);
  std::vector<int> video(n);
  double clock = 0;
  for (long req = 0; req < n; ++req) {
    clock += rng.exponential(total_rate);
    arrival[req] = clock;
    video[req] = rng.categorical(video_weights);
  }

  RepOutcome out;
  out.horizon = n > 0 ? arrival[n - 1] : 0;
  out.cell.assign(static_cast<size_t>(r) * V, CellStat{});
  out.wait_sum.assign(D, 0.0);
  out.wait_n.assign(D, 0);
  out.busy.assign(D, 0.0);

  const long warm = static_cast<long>(cfg.warmup_fraction * n);
  const double seg_total = static_cast<double>(inst.total_segments());

  std::vector<double> avail(D, 0.0);  // server-side stream free time
  std::vector<double> done;
  double stall_sum = 0;
  double quality_sum = 0;

  for (long req = 0; req < n; ++req) {
    const int i = video[req];
    const VideoSpec& vid = inst.videos[i];
    const int L = vid.num_segments;
    const int level = rng.categorical(pol.b[i]);
    const auto selection = sample_selection(inst, pol, i, level, rng);
    const bool counted = req >= warm;

    done.assign(L, 0.0);  // client completion per chunk, relative to arrival
    for (const auto& [j, nu] : selection) {
      const int s = inst.stream_offset(j) + nu;
      const EffectiveService svc =
          effective_params(inst.servers[j], pol.w[j][nu], inst.ladder.sizes[level]);
      const double start = std::max(avail[s], arrival[req]);
      if (counted) {
        out.wait_sum[s] += start - arrival[req];
        out.wait_n[s] += 1;
      }
      double c = start;
      for (int u = 0; u < L; ++u) {
        c += rng.shifted_exp(svc.alpha, svc.beta);
        done[u] = std::max(done[u], c - arrival[req]);
      }
      out.busy[s] += std::max(0.0, std::min(c, out.horizon) - std::min(start, out.horizon));
      avail[s] = c;
    }

    const double stall = stall_from_downloads(done, startup, tau);
    if (counted) {
      stall_sum += stall;
      quality_sum += (L / seg_total) * inst.ladder.sizes[level];
      ++out.counted;
      CellStat& cs = out.cell[static_cast<size_t>(i) * V + level];
      cs.n += 1;
      cs.sum += stall;
      cs.sumsq += stall * stall;
    }
    if (cfg.record_trace) {
      RequestTrace tr;
      tr.request_id = id_base + req;
      tr.video = vid.video_id;
      tr.level = level + 1;
      tr.arrival = arrival[req];
      tr.selection = selection;
      tr.stall = stall;
      out.trace.push_back(std::move(tr));
    }
  }
  out.mean_stall = out.counted > 0 ? stall_sum / out.counted : 0;
  out.quality = out.counted > 0 ? quality_sum / out.counted : 0;
  return out;
}

}  // namespace

SimReport run_simulation(const Instance& inst, const PolicyVars& pol,
                         const SimConfig& cfg) {
  check_policy_shape(inst, pol);
  if (cfg.num_requests <= 0) throw ConfigError("simulation needs a positive request count");
  if (cfg.replications <= 0) throw ConfigError("simulation needs at least 1 replication");
  if (cfg.warmup_fraction < 0 || cfg.warmup_fraction >= 1) {
    throw ConfigError("warmup fraction must lie in [0, 1)");
  }

  const int r = inst.num_videos();
  const int V = inst.levels();
  const int m = inst.num_servers();
  const int D = inst.total_streams();

  SimReport rep;
  rep.seed = cfg.seed;
  rep.replications = cfg.replications;
  const StreamLoad load = stream_arrival_rates(inst, pol);
  for (const auto& row : load.rho) {
    for (double rho : row) {
      if (rho >= 1) rep.unstable = true;
    }
  }

  std::vector<double> rep_means;
  std::vector<CellStat> cell(static_cast<size_t>(r) * V);
  std::vector<double> wait_sum(D, 0.0);
  std::vector<long> wait_n(D, 0);
  std::vector<double> busy(D, 0.0);
  double horizon = 0;
  double quality_sum = 0;

  for (int rr = 0; rr < cfg.replications; ++rr) {
    RepOutcome out = run_replication(inst, pol, cfg, Rng::split(cfg.seed, rr),
                                     static_cast<long>(rr) * cfg.num_requests);
    rep_means.push_back(out.mean_stall);
    quality_sum += out.quality;
    rep.counted_requests += out.counted;
    for (size_t c = 0; c < cell.size(); ++c) {
      cell[c].n += out.cell[c].n;
      cell[c].sum += out.cell[c].sum;
      cell[c].sumsq += out.cell[c].sumsq;
    }
    for (int s = 0; s < D; ++s) {
      wait_sum[s] += out.wait_sum[s];
      wait_n[s] += out.wait_n[s];
      busy[s] += out.busy[s];
    }
    horizon += out.horizon;
    if (cfg.record_trace) {
      rep.trace.insert(rep.trace.end(), out.trace.begin(), out.trace.end());
    }
  }

  const int R = cfg.replications;
  rep.mean_stall = std::accumulate(rep_means.begin(), rep_means.end(), 0.0) / R;
  if (R > 1) {
    double var = 0;
    for (double x : rep_means) var += (x - rep.mean_stall) * (x - rep.mean_stall);
    var /= (R - 1);
    rep.mean_stall_se = std::sqrt(var / R);
  }
  rep.avg_quality = quality_sum / R;

  std::map<int, double> vid_sum;
  std::map<int, long> vid_n;
  for (int i = 0; i < r; ++i) {
    const int id = inst.videos[i].video_id;
    for (int l = 0; l < V; ++l) {
      const CellStat& cs = cell[static_cast<size_t>(i) * V + l];
      if (cs.n == 0) continue;
      const double mean = cs.sum / cs.n;
      rep.per_file_level_stall[{id, l + 1}] = mean;
      if (cs.n > 1) {
        const double var = std::max(0.0, (cs.sumsq - cs.n * mean * mean) / (cs.n - 1));
        rep.per_file_level_se[{id, l + 1}] = std::sqrt(var / cs.n);
      }
      rep.per_file_level_count[{id, l + 1}] = cs.n;
      vid_sum[id] += cs.sum;
      vid_n[id] += cs.n;
    }
  }
  for (const auto& [id, s] : vid_sum) rep.per_file_stall[id] = s / vid_n[id];

  rep.mean_wait.resize(m);
  rep.utilization.resize(m);
  for (int j = 0; j < m; ++j) {
    const int d = inst.servers[j].num_streams;
    rep.mean_wait[j].assign(d, 0.0);
    rep.utilization[j].assign(d, 0.0);
    for (int nu = 0; nu < d; ++nu) {
      const int s = inst.stream_offset(j) + nu;
      if (wait_n[s] > 0) rep.mean_wait[j][nu] = wait_sum[s] / wait_n[s];
      if (horizon > 0) rep.utilization[j][nu] = busy[s] / horizon;
    }
  }
  return rep;
}

BoundComparison compare_bound(const Instance& inst, const PolicyVars& pol,
                              const SimReport& sim) {
  const BoundReport analytic = bound_report(inst, pol, inst.solver.theta);

  BoundComparison cmp;
  const int V = inst.levels();
  for (int i = 0; i < inst.num_videos(); ++i) {
    const int id = inst.videos[i].video_id;
    for (int l = 0; l < V; ++l) {
      const auto it = sim.per_file_level_count.find({id, l + 1});
      if (it == sim.per_file_level_count.end()) continue;
      BoundComparison::Row row;
      row.video = id;
      row.level = l + 1;
      row.samples = it->second;
      row.empirical = sim.per_file_level_stall.at({id, l + 1});
      const auto se_it = sim.per_file_level_se.find({id, l + 1});
      if (se_it != sim.per_file_level_se.end()) row.se = se_it->second;
      row.bound = analytic.per_file_quality_bound[i][l];
      cmp.rows.push_back(row);
    }
  }
  cmp.weighted_empirical = sim.mean_stall;
  cmp.weighted_se = sim.mean_stall_se;
  cmp.weighted_bound = analytic.weighted_mean_stall;
  cmp.bound_holds =
      cmp.weighted_bound >= cmp.weighted_empirical - 3 * cmp.weighted_se - 1e-9;
  return cmp;
}

BoundComparison validate_bound(const Instance& inst, const PolicyVars& pol,
                               const SimConfig& cfg) {
  return compare_bound(inst, pol, run_simulation(inst, pol, cfg));
}

}  // namespace streamopt
