#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "streamopt/analytics.hpp"

namespace streamopt {

namespace {

constexpr double kLogOverflow = 700.0;  // exp beyond this exceeds double range

std::string stream_tag(int j, int nu) {
  std::ostringstream os;
  os << "stream (" << j << "," << nu << ")";
  return os.str();
}

double log_mgf_checked(double alpha, double beta, double t, const std::string& where) {
  if (!(alpha > 0)) throw DomainError(where + ": service rate is zero (no bandwidth share)");
  if (t >= alpha) {
    throw DomainError(where + ": exponent " + std::to_string(t) +
                      " reaches service rate " + std::to_string(alpha));
  }
  return std::log(alpha) - std::log(alpha - t) + beta * t;
}

double pow_mgf(double log_m, int count, const std::string& where) {
  const double e = log_m * count;
  if (e > kLogOverflow) throw DomainError(where + ": file transform overflows");
  return std::exp(e);
}

// sum_{v=1..L} exp(v*y); removable singularity at y == 0.
double geo_tail(int L, double y) {
  if (std::abs(y) < 1e-9) {
    double sum = 0;
    for (int v = 1; v <= L; ++v) sum += std::exp(v * y);
    return sum;
  }
  if (y * L > kLogOverflow) return std::numeric_limits<double>::infinity();
  return std::exp(y) * std::expm1(L * y) / std::expm1(y);
}

// d/dy of geo_tail: sum_{v=1..L} v exp(v*y).
double geo_tail_dy(int L, double y) {
  if (std::abs(y) < 1e-9) {
    double sum = 0;
    for (int v = 1; v <= L; ++v) sum += v * std::exp(v * y);
    return sum;
  }
  const double z = std::exp(y);
  const double zL = std::exp(L * y);
  const double em = std::expm1(y);
  return z * (1.0 - (L + 1) * zL + L * zL * z) / (em * em);
}

// Mixture view of one stream: every (video, level) component with
// positive mass, ungrouped. Backs the single-point operations.
struct DirectComp {
  double x = 0;  // arrival mass lambda_i * b * q * p
  int segments = 0;
  double alpha = 0;
  double beta = 0;
};

struct DirectStream {
  int j = 0;
  int nu = 0;
  double lambda = 0;
  double rho = 0;
  std::vector<DirectComp> comps;

  static DirectStream build(const Instance& inst, const PolicyVars& pol, int j, int nu) {
    DirectStream st;
    st.j = j;
    st.nu = nu;
    const int V = inst.levels();
    const double w = pol.w[j][nu];
    for (int i = 0; i < inst.num_videos(); ++i) {
      const VideoSpec& vid = inst.videos[i];
      for (int l = 0; l < V; ++l) {
        const double x = vid.arrival_rate * pol.b[i][l] * pol.q[i][l][j] * pol.p[l][j][nu];
        if (!(x > 0)) continue;
        DirectComp c;
        c.x = x;
        c.segments = vid.num_segments;
        const EffectiveService svc =
            effective_params(inst.servers[j], w, inst.ladder.sizes[l]);
        c.alpha = svc.alpha;
        c.beta = svc.beta;
        st.comps.push_back(c);
        st.lambda += x;
        st.rho += x * c.segments * (c.beta + 1.0 / c.alpha);
      }
    }
    return st;
  }

  // lambda * file-service transform at exponent t.
  double load_mgf(double t) const {
    double g = 0;
    const std::string where = stream_tag(j, nu);
    for (const DirectComp& c : comps) {
      const double lm = log_mgf_checked(c.alpha, c.beta, t, where);
      g += c.x * pow_mgf(lm, c.segments, where);
    }
    return g;
  }

  // Queue factor (1-rho) t B / (t - lambda (B - 1)); 1 on an empty stream.
  double queue_factor(double t) const {
    if (t == 0) return 1.0;
    if (lambda <= 0) return 1.0;
    if (rho >= 1) throw DomainError(stream_tag(j, nu) + ": utilization at or above 1");
    const double g = load_mgf(t);
    const double denom = t + lambda - g;
    if (denom <= 0) {
      throw DomainError(stream_tag(j, nu) + ": queue transform margin exhausted");
    }
    return (1.0 - rho) * t * (g / lambda) / denom;
  }
};

}  // namespace

EffectiveService effective_params(const ServerSpec& server, double w, double a) {
  if (!(w > 0)) throw DomainError("bandwidth share must be positive");
  if (!(a > 0)) throw DomainError("chunk size must be positive");
  return {server.alpha_base * w / a, server.beta_base * a};
}

double chunk_log_mgf(const EffectiveService& svc, double t) {
  return log_mgf_checked(svc.alpha, svc.beta, t, "chunk transform");
}

double chunk_mgf(const EffectiveService& svc, double t) {
  return std::exp(chunk_log_mgf(svc, t));
}

StreamLoad stream_arrival_rates(const Instance& inst, const PolicyVars& pol) {
  check_policy_shape(inst, pol);
  const int m = inst.num_servers();
  const int V = inst.levels();
  StreamLoad load;
  load.lambda.resize(m);
  load.rho.resize(m);
  for (int j = 0; j < m; ++j) {
    load.lambda[j].assign(inst.servers[j].num_streams, 0.0);
    load.rho[j].assign(inst.servers[j].num_streams, 0.0);
  }
  for (int i = 0; i < inst.num_videos(); ++i) {
    const VideoSpec& vid = inst.videos[i];
    for (int l = 0; l < V; ++l) {
      const double rate_l = vid.arrival_rate * pol.b[i][l];
      if (!(rate_l > 0)) continue;
      for (int j : vid.placement[l]) {
        const double qv = pol.q[i][l][j];
        if (!(qv > 0)) continue;
        for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
          const double x = rate_l * qv * pol.p[l][j][nu];
          if (!(x > 0)) continue;
          load.lambda[j][nu] += x;
          const double w = pol.w[j][nu];
          if (w > 0) {
            const EffectiveService svc =
                effective_params(inst.servers[j], w, inst.ladder.sizes[l]);
            load.rho[j][nu] += x * vid.num_segments * (svc.beta + 1.0 / svc.alpha);
          } else {
            load.rho[j][nu] = std::numeric_limits<double>::infinity();
          }
          load.total_lambda += x;
        }
      }
    }
  }
  return load;
}

double utilization(const Instance& inst, const PolicyVars& pol, int j, int nu) {
  return DirectStream::build(inst, pol, j, nu).rho;
}

double file_service_mgf(const Instance& inst, const PolicyVars& pol, int j, int nu,
                        double t) {
  const DirectStream st = DirectStream::build(inst, pol, j, nu);
  if (!(st.lambda > 0)) {
    throw DomainError(stream_tag(j, nu) + ": no arrival mass, mixture undefined");
  }
  return st.load_mgf(t) / st.lambda;
}

double download_mgf(const Instance& inst, const PolicyVars& pol, int /*i*/, int j,
                    int nu, int l, int u, double t) {
  if (u < 0) throw DomainError("chunk index must be nonnegative");
  if (t < 0) throw DomainError("exponent must be nonnegative");
  const DirectStream st = DirectStream::build(inst, pol, j, nu);
  const double factor = st.queue_factor(t);
  if (u == 0) return factor;
  const EffectiveService svc =
      effective_params(inst.servers[j], pol.w[j][nu], inst.ladder.sizes[l]);
  const double lm = chunk_log_mgf(svc, t);
  return factor * pow_mgf(lm, u, stream_tag(j, nu));
}

double mean_waiting_time(const Instance& inst, const PolicyVars& pol, int j, int nu) {
  const DirectStream st = DirectStream::build(inst, pol, j, nu);
  if (!(st.lambda > 0)) return 0.0;
  if (st.rho >= 1) {
    throw DomainError(stream_tag(j, nu) + ": utilization at or above 1");
  }
  double second_moment = 0;
  for (const DirectComp& c : st.comps) {
    const double mean_chunk = c.beta + 1.0 / c.alpha;
    const double mean_file = c.segments * mean_chunk;
    const double var_file = c.segments / (c.alpha * c.alpha);
    second_moment += (c.x / st.lambda) * (var_file + mean_file * mean_file);
  }
  return st.lambda * second_moment / (2.0 * (1.0 - st.rho));
}

double segment_tail_H(const Instance& inst, const PolicyVars& pol, int i, int j, int nu,
                      int l, double t) {
  if (!(t > 0)) throw DomainError("exponent must be positive");
  const DirectStream st = DirectStream::build(inst, pol, j, nu);
  const double factor = st.queue_factor(t);
  const EffectiveService svc =
      effective_params(inst.servers[j], pol.w[j][nu], inst.ladder.sizes[l]);
  const double lm = chunk_log_mgf(svc, t);
  const double tau = inst.streaming.segment_seconds;
  const double y = lm - t * tau;
  const double startup = std::exp(-t * (inst.streaming.startup_delay - tau));
  return startup * factor * geo_tail(inst.videos[i].num_segments, y);
}

double stall_bound(const Instance& inst, const PolicyVars& pol, int i, int l) {
  const double t = pol.t[i];
  if (!(t > 0)) throw DomainError("exponent must be positive");
  const VideoSpec& vid = inst.videos[i];
  double s = 0;
  for (int j : vid.placement[l]) {
    const double qv = pol.q[i][l][j];
    if (!(qv > 0)) continue;
    for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
      const double pv = pol.p[l][j][nu];
      if (!(pv > 0)) continue;
      s += qv * pv * (1.0 + segment_tail_H(inst, pol, i, j, nu, l, t));
    }
  }
  if (!(s > 0)) throw DomainError("video has no stream mass at this level");
  return std::log(s) / t;
}

double objective_value(const Instance& inst, const PolicyVars& pol, double theta) {
  return Evaluation(inst, pol, /*with_partials=*/false).objective(theta);
}

double average_quality(const Instance& inst, const PolicyVars& pol) {
  check_policy_shape(inst, pol);
  const double lam_total = inst.total_arrival_rate();
  const double seg_total = static_cast<double>(inst.total_segments());
  double sum = 0;
  for (int i = 0; i < inst.num_videos(); ++i) {
    const VideoSpec& vid = inst.videos[i];
    double quality = 0;
    for (int l = 0; l < inst.levels(); ++l) {
      quality += pol.b[i][l] * inst.ladder.sizes[l];
    }
    sum += (vid.arrival_rate / lam_total) * (vid.num_segments / seg_total) * quality;
  }
  return sum;
}

double t_feasible_upper(const Instance& inst, const PolicyVars& pol, int i) {
  check_policy_shape(inst, pol);
  const double delta = inst.solver.slack_delta;
  const double tau = inst.streaming.segment_seconds;
  const VideoSpec& vid = inst.videos[i];
  const int V = inst.levels();

  // Streams this video can hit, with the per-level rows it uses there.
  struct Touched {
    DirectStream mix;
    std::vector<EffectiveService> rows;  // per level, alpha 0 when unused
  };
  std::vector<Touched> touched;
  std::set<std::pair<int, int>> seen;
  for (int l = 0; l < V; ++l) {
    for (int j : vid.placement[l]) {
      if (!(pol.q[i][l][j] > 0)) continue;
      for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
        if (!(pol.p[l][j][nu] > 0)) continue;
        if (!seen.insert({j, nu}).second) continue;
        Touched tc;
        tc.mix = DirectStream::build(inst, pol, j, nu);
        tc.rows.assign(V, EffectiveService{});
        touched.push_back(std::move(tc));
      }
    }
  }
  for (Touched& tc : touched) {
    const int j = tc.mix.j;
    const int nu = tc.mix.nu;
    for (int l = 0; l < V; ++l) {
      if (pol.q[i][l][j] > 0 && pol.p[l][j][nu] > 0) {
        tc.rows[l] = effective_params(inst.servers[j], pol.w[j][nu], inst.ladder.sizes[l]);
      }
    }
  }
  if (touched.empty()) {
    throw EmptyIntervalError("video " + std::to_string(vid.video_id) +
                             ": no stream mass, exponent interval undefined");
  }

  // Hard cap from every service rate the exponent must stay below.
  double cap = std::numeric_limits<double>::infinity();
  for (const Touched& tc : touched) {
    for (const EffectiveService& svc : tc.rows) {
      if (svc.alpha > 0) cap = std::min(cap, svc.alpha);
    }
    for (const DirectComp& c : tc.mix.comps) cap = std::min(cap, c.alpha);
  }
  cap *= 1.0 - delta;

  auto feasible = [&](double t) {
    for (const Touched& tc : touched) {
      if (tc.mix.rho > 1.0 - delta) return false;
      for (const EffectiveService& svc : tc.rows) {
        if (!(svc.alpha > 0)) continue;
        if (t > svc.alpha * (1.0 - delta)) return false;
        // geometric ratio below 1: alpha (e^{(beta - tau) t} - 1) + t < 0
        if (svc.alpha * std::expm1((svc.beta - tau) * t) + t > -delta * t) return false;
      }
      for (const DirectComp& c : tc.mix.comps) {
        if (t > c.alpha * (1.0 - delta)) return false;
      }
      if (tc.mix.lambda > 0) {
        double g;
        try {
          g = tc.mix.load_mgf(t);
        } catch (const DomainError&) {
          return false;
        }
        if (g - tc.mix.lambda - t > -delta * t) return false;
      }
    }
    return true;
  };

  const double lo_start = delta;
  if (!(cap > lo_start) || !feasible(lo_start)) {
    throw EmptyIntervalError("video " + std::to_string(vid.video_id) +
                             ": no feasible exponent above the slack margin");
  }
  if (feasible(cap)) return cap;
  double lo = lo_start;
  double hi = cap;
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

BoundReport bound_report(const Instance& inst, const PolicyVars& pol, double theta) {
  return Evaluation(inst, pol, /*with_partials=*/false).report(theta);
}

// ---------------------------------------------------------------------------
// Evaluation

Evaluation::Evaluation(const Instance& inst, const PolicyVars& pol, bool with_partials)
    : inst_(inst), pol_(pol), V_(inst.levels()) {
  check_policy_shape(inst, pol);
  const int r = inst.num_videos();

  std::set<int> lengths;
  for (const VideoSpec& vid : inst.videos) lengths.insert(vid.num_segments);
  class_L_.assign(lengths.begin(), lengths.end());
  lclass_.resize(r);
  for (int i = 0; i < r; ++i) {
    lclass_[i] = static_cast<int>(
        std::lower_bound(class_L_.begin(), class_L_.end(), inst.videos[i].num_segments) -
        class_L_.begin());
  }

  build_streams();
  build_pairs(with_partials);
}

void Evaluation::build_streams() {
  const int m = inst_.num_servers();
  const int r = inst_.num_videos();
  const int ncls = num_classes();
  streams_.clear();
  loads_.lambda.assign(m, {});
  loads_.rho.assign(m, {});
  loads_.total_lambda = 0;

  for (int j = 0; j < m; ++j) {
    const int d = inst_.servers[j].num_streams;
    loads_.lambda[j].assign(d, 0.0);
    loads_.rho[j].assign(d, 0.0);
    for (int nu = 0; nu < d; ++nu) {
      Stream st;
      st.j = j;
      st.nu = nu;
      const double w = pol_.w[j][nu];
      st.alpha.assign(V_, 0.0);
      st.beta.assign(V_, 0.0);
      for (int l = 0; l < V_; ++l) {
        const double a = inst_.ladder.sizes[l];
        st.alpha[l] = w > 0 ? inst_.servers[j].alpha_base * w / a : 0.0;
        st.beta[l] = inst_.servers[j].beta_base * a;
      }
      st.xg.assign(static_cast<size_t>(ncls) * V_, 0.0);
      double drho_dw = 0;
      for (int i = 0; i < r; ++i) {
        const VideoSpec& vid = inst_.videos[i];
        for (int l = 0; l < V_; ++l) {
          const double qv = pol_.q[i][l][j];
          if (!(qv > 0)) continue;
          const double x = vid.arrival_rate * pol_.b[i][l] * qv * pol_.p[l][j][nu];
          if (!(x > 0)) continue;
          if (!(st.alpha[l] > 0)) {
            throw DomainError(stream_tag(j, nu) +
                              ": arrival mass on a stream with zero bandwidth share");
          }
          st.xg[static_cast<size_t>(lclass_[i]) * V_ + l] += x;
          st.lambda += x;
          st.rho += x * vid.num_segments * (st.beta[l] + 1.0 / st.alpha[l]);
          drho_dw += -x * vid.num_segments / (st.alpha[l] * w);
        }
      }
      st.drho_dw = drho_dw;
      loads_.lambda[j][nu] = st.lambda;
      loads_.rho[j][nu] = st.rho;
      loads_.total_lambda += st.lambda;
      streams_.push_back(std::move(st));
    }
  }
}

void Evaluation::build_pairs(bool with_partials) {
  const int r = inst_.num_videos();
  const double tau = inst_.streaming.segment_seconds;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const int ncls = num_classes();

  touched_.assign(r, {});
  pair_offset_.assign(r + 1, 0);
  eds_.assign(r, 0.0);
  srow_.assign(static_cast<size_t>(r) * V_, 0.0);
  bound_.assign(static_cast<size_t>(r) * V_, 0.0);

  for (int i = 0; i < r; ++i) {
    const VideoSpec& vid = inst_.videos[i];
    std::set<int> streams_of_i;
    for (int l = 0; l < V_; ++l) {
      for (int j : vid.placement[l]) {
        if (!with_partials && !(pol_.q[i][l][j] > 0)) continue;
        for (int nu = 0; nu < inst_.servers[j].num_streams; ++nu) {
          // Partials need every stream the video could shift mass onto,
          // not just the ones it currently loads.
          if (with_partials || pol_.p[l][j][nu] > 0) {
            streams_of_i.insert(inst_.stream_offset(j) + nu);
          }
        }
      }
    }
    touched_[i].assign(streams_of_i.begin(), streams_of_i.end());
    pair_offset_[i + 1] = pair_offset_[i] + static_cast<int>(touched_[i].size());
  }
  pairs_.assign(pair_offset_[r], Pair{});

  for (int i = 0; i < r; ++i) {
    const VideoSpec& vid = inst_.videos[i];
    const double t = pol_.t[i];
    if (!(t > 0)) {
      throw DomainError("video " + std::to_string(vid.video_id) +
                        ": exponent must be positive");
    }
    eds_[i] = std::exp(-t * (inst_.streaming.startup_delay - tau));
    const int L = vid.num_segments;

    for (size_t k = 0; k < touched_[i].size(); ++k) {
      const int s = touched_[i][k];
      const Stream& st = streams_[s];
      Pair& pr = pairs_[pair_offset_[i] + k];
      pr.stream = s;
      pr.logM.assign(V_, nan);
      pr.mx.assign(V_, 0.0);
      pr.mxL.assign(V_, 0.0);
      pr.qp.assign(V_, 0.0);
      pr.H.assign(V_, 0.0);
      pr.geo.assign(V_, 0.0);
      pr.dgeo.assign(V_, 0.0);
      const std::string where = stream_tag(st.j, st.nu);

      // Pairs where the video currently has no mass on the stream exist only
      // to price directions that would activate them. Transform failures on
      // such pairs block the direction instead of aborting the evaluation.
      bool active = false;
      for (int l = 0; l < V_ && !active; ++l) {
        active = pol_.q[i][l][st.j] > 0 && pol_.p[l][st.j][st.nu] > 0;
      }
      bool usable = true;

      // Levels needed: active mixture levels plus this video's rows. With
      // partials, also rows the video could activate (placement levels);
      // those stay NaN when the exponent leaves the transform domain, which
      // marks the direction as blocked for the gradient.
      for (int l = 0; l < V_; ++l) {
        bool needed = pol_.q[i][l][st.j] > 0 && pol_.p[l][st.j][st.nu] > 0;
        if (!needed) {
          for (int cls = 0; cls < ncls && !needed; ++cls) {
            needed = st.xg[static_cast<size_t>(cls) * V_ + l] > 0;
          }
        }
        if (needed) {
          if (active) {
            pr.logM[l] = log_mgf_checked(st.alpha[l], st.beta[l], t, where);
          } else if (st.alpha[l] > t) {
            pr.logM[l] = std::log(st.alpha[l]) - std::log(st.alpha[l] - t) + st.beta[l] * t;
          } else {
            usable = false;  // mixture component undefined at this exponent
          }
        } else if (with_partials && inst_.placed(i, l, st.j) && st.alpha[l] > t) {
          pr.logM[l] = std::log(st.alpha[l]) - std::log(st.alpha[l] - t) + st.beta[l] * t;
        }
      }

      double G = 0;
      for (int cls = 0; cls < ncls && usable; ++cls) {
        const int Lc = class_L_[cls];
        for (int l = 0; l < V_; ++l) {
          const double x = st.xg[static_cast<size_t>(cls) * V_ + l];
          if (!(x > 0)) continue;
          if (!active && pr.logM[l] * Lc > kLogOverflow) {
            usable = false;
            break;
          }
          const double m = pow_mgf(pr.logM[l], Lc, where);
          pr.mx[l] += x * m;
          pr.mxL[l] += x * m * Lc;
          G += x * m;
        }
      }
      if (!usable) {
        std::fill(pr.mx.begin(), pr.mx.end(), 0.0);
        std::fill(pr.mxL.begin(), pr.mxL.end(), 0.0);
        G = 0;
      }
      pr.G = G;
      const double lam = st.lambda;
      const double denom = t + lam - G;
      if (lam > 0) {
        if (!usable || st.rho >= 1 || denom <= 0) {
          if (active && st.rho >= 1) {
            throw DomainError(where + ": utilization at or above 1");
          }
          if (active) {
            throw DomainError(where + ": queue transform margin exhausted");
          }
          pr.pk = nan;
          continue;
        }
        pr.pk = (1.0 - st.rho) * t * (G / lam) / denom;
        if (with_partials) {
          pr.dpk_dG = (1.0 - st.rho) * t * (t + lam) / (lam * denom * denom);
          pr.dpk_dLam = -(1.0 - st.rho) * t * G * (denom + lam) / (lam * lam * denom * denom);
          pr.dpk_dRho = -t * G / (lam * denom);
          double gp = 0;
          for (int l = 0; l < V_; ++l) {
            if (pr.mxL[l] > 0) gp += pr.mxL[l] * (1.0 / (st.alpha[l] - t) + st.beta[l]);
          }
          pr.Gp = gp;
          pr.dpk_dt = (1.0 - st.rho) / lam *
                      ((G + t * gp) * denom - t * G * (1.0 - gp)) / (denom * denom);
        }
      } else {
        pr.pk = 1.0;
      }

      for (int l = 0; l < V_; ++l) {
        const double qp = pol_.q[i][l][st.j] * pol_.p[l][st.j][st.nu];
        pr.qp[l] = qp;
        const bool potential = with_partials && !std::isnan(pr.logM[l]) &&
                               inst_.placed(i, l, st.j);
        if (!(qp > 0) && !potential) continue;
        const double y = pr.logM[l] - t * tau;
        pr.geo[l] = geo_tail(L, y);
        if (with_partials) pr.dgeo[l] = geo_tail_dy(L, y);
        pr.H[l] = eds_[i] * pr.pk * pr.geo[l];
        if (qp > 0) {
          if (!std::isfinite(pr.H[l])) {
            throw DomainError(where + ": tail sum overflows; exponent too large");
          }
          srow_[idx(i, l)] += qp * (1.0 + pr.H[l]);
        }
      }
    }

    for (int l = 0; l < V_; ++l) {
      const double s = srow_[idx(i, l)];
      if (!(s > 0)) {
        throw DomainError("video " + std::to_string(vid.video_id) +
                          ": no stream mass at level " + std::to_string(l + 1));
      }
      bound_[idx(i, l)] = std::log(s) / t;
    }
  }
}

double Evaluation::objective(double theta) const {
  const double lam_total = inst_.total_arrival_rate();
  double quality = 0;
  double stall = 0;
  for (int i = 0; i < inst_.num_videos(); ++i) {
    const VideoSpec& vid = inst_.videos[i];
    if (!(vid.arrival_rate > 0)) continue;
    const double c = vid.arrival_rate / lam_total;
    for (int l = 0; l < V_; ++l) {
      const double bl = pol_.b[i][l];
      quality += c * bl * vid.num_segments * inst_.ladder.sizes[l];
      stall += c * bl * bound_[idx(i, l)];
    }
  }
  return theta * (-quality) + (1.0 - theta) * stall;
}

double Evaluation::average_quality() const {
  const double lam_total = inst_.total_arrival_rate();
  const double seg_total = static_cast<double>(inst_.total_segments());
  double sum = 0;
  for (int i = 0; i < inst_.num_videos(); ++i) {
    const VideoSpec& vid = inst_.videos[i];
    double quality = 0;
    for (int l = 0; l < V_; ++l) quality += pol_.b[i][l] * inst_.ladder.sizes[l];
    sum += (vid.arrival_rate / lam_total) * (vid.num_segments / seg_total) * quality;
  }
  return sum;
}

BoundReport Evaluation::report(double theta) const {
  BoundReport rep;
  rep.theta = theta;
  const int r = inst_.num_videos();
  rep.per_file_quality_bound.assign(r, std::vector<double>(V_, 0.0));
  const double lam_total = inst_.total_arrival_rate();
  for (int i = 0; i < r; ++i) {
    const double c = inst_.videos[i].arrival_rate / lam_total;
    for (int l = 0; l < V_; ++l) {
      rep.per_file_quality_bound[i][l] = bound_[idx(i, l)];
      rep.weighted_mean_stall += c * pol_.b[i][l] * bound_[idx(i, l)];
    }
  }
  rep.average_quality = average_quality();
  rep.objective = objective(theta);
  rep.loads = loads_;
  return rep;
}

}  // namespace streamopt
