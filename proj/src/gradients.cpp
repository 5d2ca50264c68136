#include <cmath>
#include <limits>
#include <vector>

#include "streamopt/analytics.hpp"
#include "streamopt/optimizer.hpp"

namespace streamopt {

namespace {

// Gradient value used for directions that leave the transform domain
// (e.g. mass onto a level whose service rate is below the exponent).
// Large enough that the projected step zeroes the coordinate.
constexpr double kBlockedDirection = 1e30;

double finite_or_blocked(double g) { return std::isfinite(g) ? g : kBlockedDirection; }

struct GradContext {
  const Instance& inst;
  const PolicyVars& pol;
  const Evaluation& ev;
  double theta;

  int r, m, V, D, ncls;
  std::vector<std::vector<std::pair<int, int>>> at_stream;  // stream -> (video, pair slot)
  std::vector<double> coef;   // (1-theta) c_i b_il / (t_i S_il), index i*V+l
  std::vector<double> e1;     // per pair slot: sum_l coef*qp*eds*geo
  std::vector<double> a_lam;  // per stream
  std::vector<double> a_rho;  // per stream
  std::vector<double> a_g;    // per stream: ncls*V entries
  std::vector<double> dudx;   // per stream: ncls*V entries

  GradContext(const Instance& inst_, const PolicyVars& pol_, const Evaluation& ev_,
              double theta_)
      : inst(inst_), pol(pol_), ev(ev_), theta(theta_) {
    r = inst.num_videos();
    m = inst.num_servers();
    V = inst.levels();
    D = inst.total_streams();
    ncls = ev.num_classes();

    at_stream.assign(D, {});
    int total_pairs = 0;
    for (int i = 0; i < r; ++i) {
      const auto& touched = ev.touched(i);
      for (size_t k = 0; k < touched.size(); ++k) {
        at_stream[touched[k]].push_back({i, total_pairs + static_cast<int>(k)});
      }
      total_pairs += static_cast<int>(touched.size());
    }

    const double lam_total = inst.total_arrival_rate();
    coef.assign(static_cast<size_t>(r) * V, 0.0);
    for (int i = 0; i < r; ++i) {
      const VideoSpec& vid = inst.videos[i];
      if (!(vid.arrival_rate > 0)) continue;
      const double c = vid.arrival_rate / lam_total;
      for (int l = 0; l < V; ++l) {
        coef[static_cast<size_t>(i) * V + l] =
            (1.0 - theta) * c * pol.b[i][l] / (pol.t[i] * ev.row_sum(i, l));
      }
    }

    e1.assign(total_pairs, 0.0);
    a_lam.assign(D, 0.0);
    a_rho.assign(D, 0.0);
    a_g.assign(static_cast<size_t>(D) * ncls * V, 0.0);

    int slot = 0;
    for (int i = 0; i < r; ++i) {
      const auto& touched = ev.touched(i);
      const double eds = ev.startup_factor(i);
      for (size_t k = 0; k < touched.size(); ++k, ++slot) {
        const Evaluation::Pair& pr = ev.pair(i, static_cast<int>(k));
        double sum = 0;
        for (int l = 0; l < V; ++l) {
          const double qp = pr.qp[l];
          if (qp > 0) sum += coef[static_cast<size_t>(i) * V + l] * qp * eds * pr.geo[l];
        }
        e1[slot] = sum;
        const int s = pr.stream;
        a_lam[s] += sum * pr.dpk_dLam;
        a_rho[s] += sum * pr.dpk_dRho;
        if (sum != 0) {
          const double e1g = sum * pr.dpk_dG;
          for (int cls = 0; cls < ncls; ++cls) {
            const int Lc = ev.class_segments(cls);
            for (int l = 0; l < V; ++l) {
              a_g[(static_cast<size_t>(s) * ncls + cls) * V + l] +=
                  e1g * std::exp(Lc * pr.logM[l]);
            }
          }
        }
      }
    }

    dudx.assign(static_cast<size_t>(D) * ncls * V, 0.0);
    for (int s = 0; s < D; ++s) {
      const Evaluation::Stream& st = ev.streams()[s];
      for (int cls = 0; cls < ncls; ++cls) {
        const int Lc = ev.class_segments(cls);
        for (int l = 0; l < V; ++l) {
          const double sc =
              st.alpha[l] > 0 ? Lc * (st.beta[l] + 1.0 / st.alpha[l])
                              : std::numeric_limits<double>::quiet_NaN();
          dudx[(static_cast<size_t>(s) * ncls + cls) * V + l] =
              a_lam[s] + sc * a_rho[s] + a_g[(static_cast<size_t>(s) * ncls + cls) * V + l];
        }
      }
    }
  }

  double chain(int s, int cls, int l) const {
    return dudx[(static_cast<size_t>(s) * ncls + cls) * V + l];
  }
};

}  // namespace

const char* block_name(BlockId block) {
  switch (block) {
    case BlockId::Q_ACCESS: return "q";
    case BlockId::P_STREAM: return "p";
    case BlockId::T_AUX: return "t";
    case BlockId::B_QUALITY: return "b";
    case BlockId::W_BANDWIDTH: return "w";
  }
  return "?";
}

std::vector<double> grad_block_analytic(const Instance& inst, const PolicyVars& pol,
                                        double theta, BlockId block) {
  const Evaluation ev(inst, pol, /*with_partials=*/true);
  const GradContext ctx(inst, pol, ev, theta);
  const int r = ctx.r;
  const int m = ctx.m;
  const int V = ctx.V;
  const int D = ctx.D;
  const double lam_total = inst.total_arrival_rate();
  const double tau = inst.streaming.segment_seconds;
  const double startup = inst.streaming.startup_delay;

  std::vector<double> grad;
  switch (block) {
    case BlockId::Q_ACCESS: {
      grad.assign(static_cast<size_t>(r) * V * m, 0.0);
      for (int i = 0; i < r; ++i) {
        const VideoSpec& vid = inst.videos[i];
        const double eds = ev.startup_factor(i);
        const int cls = ev.level_class(i);
        for (size_t k = 0; k < ev.touched(i).size(); ++k) {
          const Evaluation::Pair& pr = ev.pair(i, static_cast<int>(k));
          const Evaluation::Stream& st = ev.streams()[pr.stream];
          const int j = st.j;
          const int nu = st.nu;
          for (int l = 0; l < V; ++l) {
            if (!inst.placed(i, l, j)) continue;
            const double pv = pol.p[l][j][nu];
            if (!(pv > 0)) continue;
            double g = 0;
            if (std::isnan(pr.logM[l])) {
              g = kBlockedDirection;  // level unusable at this exponent
            } else {
              const double h = eds * pr.pk * pr.geo[l];
              g = ctx.coef[static_cast<size_t>(i) * V + l] * pv * (1.0 + h);
              g += vid.arrival_rate * pol.b[i][l] * pv *
                   finite_or_blocked(ctx.chain(pr.stream, cls, l));
            }
            grad[(static_cast<size_t>(i) * V + l) * m + j] += g;
          }
        }
      }
      break;
    }
    case BlockId::P_STREAM: {
      grad.assign(static_cast<size_t>(V) * D, 0.0);
      // Arrival mass per (server, level, class) feeding the chain term.
      std::vector<double> xq(static_cast<size_t>(m) * V * ctx.ncls, 0.0);
      for (int i = 0; i < r; ++i) {
        const VideoSpec& vid = inst.videos[i];
        if (!(vid.arrival_rate > 0)) continue;
        const int cls = ev.level_class(i);
        for (int l = 0; l < V; ++l) {
          const double rate = vid.arrival_rate * pol.b[i][l];
          if (!(rate > 0)) continue;
          for (int j : vid.placement[l]) {
            const double qv = pol.q[i][l][j];
            if (qv > 0) xq[(static_cast<size_t>(j) * V + l) * ctx.ncls + cls] += rate * qv;
          }
        }
      }
      for (int i = 0; i < r; ++i) {
        const double eds = ev.startup_factor(i);
        for (size_t k = 0; k < ev.touched(i).size(); ++k) {
          const Evaluation::Pair& pr = ev.pair(i, static_cast<int>(k));
          const Evaluation::Stream& st = ev.streams()[pr.stream];
          for (int l = 0; l < V; ++l) {
            const double qv = pol.q[i][l][st.j];
            if (!(qv > 0)) continue;
            double g;
            if (std::isnan(pr.logM[l])) {
              g = kBlockedDirection;
            } else {
              const double h = eds * pr.pk * pr.geo[l];
              g = ctx.coef[static_cast<size_t>(i) * V + l] * qv * (1.0 + h);
            }
            grad[static_cast<size_t>(l) * D + pr.stream] += g;
          }
        }
      }
      for (int j = 0; j < m; ++j) {
        for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
          const int s = inst.stream_offset(j) + nu;
          for (int l = 0; l < V; ++l) {
            double g = 0;
            for (int cls = 0; cls < ctx.ncls; ++cls) {
              const double mass = xq[(static_cast<size_t>(j) * V + l) * ctx.ncls + cls];
              if (mass > 0) g += mass * finite_or_blocked(ctx.chain(s, cls, l));
            }
            grad[static_cast<size_t>(l) * D + s] += g;
          }
        }
      }
      break;
    }
    case BlockId::T_AUX: {
      grad.assign(r, 0.0);
      for (int i = 0; i < r; ++i) {
        const VideoSpec& vid = inst.videos[i];
        if (!(vid.arrival_rate > 0)) continue;
        const double c = vid.arrival_rate / lam_total;
        const double t = pol.t[i];
        const double eds = ev.startup_factor(i);
        std::vector<double> ds_dt(V, 0.0);  // dS_il/dt
        for (size_t k = 0; k < ev.touched(i).size(); ++k) {
          const Evaluation::Pair& pr = ev.pair(i, static_cast<int>(k));
          const Evaluation::Stream& st = ev.streams()[pr.stream];
          for (int l = 0; l < V; ++l) {
            const double qp = pr.qp[l];
            if (!(qp > 0)) continue;
            const double yp = 1.0 / (st.alpha[l] - t) + st.beta[l] - tau;
            const double dh = -(startup - tau) * eds * pr.pk * pr.geo[l] +
                              eds * (pr.dpk_dt * pr.geo[l] + pr.pk * pr.dgeo[l] * yp);
            ds_dt[l] += qp * dh;
          }
        }
        double g = 0;
        for (int l = 0; l < V; ++l) {
          const double bl = pol.b[i][l];
          if (!(bl > 0)) continue;
          const double s = ev.row_sum(i, l);
          g += bl * (-std::log(s) / (t * t) + ds_dt[l] / (t * s));
        }
        grad[i] = (1.0 - theta) * c * g;
      }
      break;
    }
    case BlockId::B_QUALITY: {
      grad.assign(static_cast<size_t>(r) * V, 0.0);
      for (int i = 0; i < r; ++i) {
        const VideoSpec& vid = inst.videos[i];
        if (!(vid.arrival_rate > 0)) continue;
        const double c = vid.arrival_rate / lam_total;
        const int cls = ev.level_class(i);
        for (int l = 0; l < V; ++l) {
          double g = -theta * c * vid.num_segments * inst.ladder.sizes[l] +
                     (1.0 - theta) * c * std::log(ev.row_sum(i, l)) / pol.t[i];
          for (size_t k = 0; k < ev.touched(i).size(); ++k) {
            const Evaluation::Pair& pr = ev.pair(i, static_cast<int>(k));
            const double qp = pr.qp[l];
            if (qp > 0) {
              g += vid.arrival_rate * qp * finite_or_blocked(ctx.chain(pr.stream, cls, l));
            }
          }
          grad[static_cast<size_t>(i) * V + l] = g;
        }
      }
      break;
    }
    case BlockId::W_BANDWIDTH: {
      grad.assign(D, 0.0);
      for (int s = 0; s < D; ++s) {
        const Evaluation::Stream& st = ev.streams()[s];
        const double w = pol.w[st.j][st.nu];
        if (!(w > 0)) continue;
        double g = 0;
        for (const auto& [i, slot] : ctx.at_stream[s]) {
          // Find this pair in the video's touched list.
          const auto& touched = ev.touched(i);
          int k = 0;
          while (touched[k] != s) ++k;
          const Evaluation::Pair& pr = ev.pair(i, k);
          const double t = pol.t[i];
          const double eds = ev.startup_factor(i);
          double dG_dw = 0;
          for (int l = 0; l < V; ++l) {
            if (pr.mxL[l] > 0) dG_dw += pr.mxL[l] * (-t / ((st.alpha[l] - t) * w));
          }
          const double dpk_dw = pr.dpk_dG * dG_dw + pr.dpk_dRho * st.drho_dw;
          for (int l = 0; l < V; ++l) {
            const double qp = pr.qp[l];
            if (!(qp > 0)) continue;
            const double dy_dw = -t / ((st.alpha[l] - t) * w);
            const double dh = eds * (dpk_dw * pr.geo[l] + pr.pk * pr.dgeo[l] * dy_dw);
            g += ctx.coef[static_cast<size_t>(i) * V + l] * qp * dh;
          }
        }
        grad[s] = g;
      }
      break;
    }
  }
  for (double& g : grad) {
    if (!std::isfinite(g)) g = kBlockedDirection;
  }
  return grad;
}

std::vector<double> grad_block_fd(const Instance& inst, const PolicyVars& pol,
                                  double theta, BlockId block) {
  const int r = inst.num_videos();
  const int m = inst.num_servers();
  const int V = inst.levels();
  const int D = inst.total_streams();

  PolicyVars work = pol;
  auto coord = [&](int flat) -> double* {
    switch (block) {
      case BlockId::Q_ACCESS:
        return &work.q[flat / (V * m)][(flat / m) % V][flat % m];
      case BlockId::P_STREAM: {
        const int l = flat / D;
        int rest = flat % D;
        int j = 0;
        while (rest >= inst.servers[j].num_streams) rest -= inst.servers[j++].num_streams;
        return &work.p[l][j][rest];
      }
      case BlockId::T_AUX:
        return &work.t[flat];
      case BlockId::B_QUALITY:
        return &work.b[flat / V][flat % V];
      case BlockId::W_BANDWIDTH: {
        int rest = flat;
        int j = 0;
        while (rest >= inst.servers[j].num_streams) rest -= inst.servers[j++].num_streams;
        return &work.w[j][rest];
      }
    }
    return nullptr;
  };

  size_t size = 0;
  switch (block) {
    case BlockId::Q_ACCESS: size = static_cast<size_t>(r) * V * m; break;
    case BlockId::P_STREAM: size = static_cast<size_t>(V) * D; break;
    case BlockId::T_AUX: size = r; break;
    case BlockId::B_QUALITY: size = static_cast<size_t>(r) * V; break;
    case BlockId::W_BANDWIDTH: size = D; break;
  }

  std::vector<double> grad(size, 0.0);
  for (size_t flat = 0; flat < size; ++flat) {
    if (block == BlockId::Q_ACCESS) {
      const int i = static_cast<int>(flat) / (V * m);
      const int l = (static_cast<int>(flat) / m) % V;
      const int j = static_cast<int>(flat) % m;
      if (!inst.placed(i, l, j)) continue;  // off support, pinned at 0
    }
    double* x = coord(static_cast<int>(flat));
    const double x0 = *x;
    double h = 1e-6 * std::max(std::abs(x0), 0.01);
    double value = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt < 3 && !std::isfinite(value); ++attempt) {
      try {
        *x = x0 + h;
        const double up = objective_value(inst, work, theta);
        *x = x0 - h;
        const double down = objective_value(inst, work, theta);
        value = (up - down) / (2 * h);
      } catch (const DomainError&) {
        h *= 0.1;
      }
      *x = x0;
    }
    grad[flat] = value;
  }
  return grad;
}

std::vector<double> grad_block(const Instance& inst, const PolicyVars& pol, double theta,
                               BlockId block) {
  if (inst.solver.fd_gradients) return grad_block_fd(inst, pol, theta, block);
  return grad_block_analytic(inst, pol, theta, block);
}

}  // namespace streamopt
