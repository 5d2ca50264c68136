#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "streamopt/analytics.hpp"
#include "streamopt/validate.hpp"

namespace streamopt {

namespace {

constexpr double kEqTol = 1e-9;

std::string video_level_tag(const Instance& inst, int i, int l) {
  return "video " + std::to_string(inst.videos[i].video_id) + " level " +
         std::to_string(l + 1);
}

std::string stream_tag(const Instance& inst, int j, int nu) {
  return "server " + std::to_string(inst.servers[j].server_id) + " stream " +
         std::to_string(nu + 1);
}

}  // namespace

Feasibility validate_policy(const Instance& inst, const PolicyVars& pol) {
  check_policy_shape(inst, pol);
  Feasibility out;
  auto add = [&out](const std::string& constraint, const std::string& where, double value,
                    double bound) {
    out.ok = false;
    out.violations.push_back({constraint, where, value, bound});
  };

  const int r = inst.num_videos();
  const int m = inst.num_servers();
  const int V = inst.levels();
  const double delta = inst.solver.slack_delta;

  for (int i = 0; i < r; ++i) {
    const VideoSpec& vid = inst.videos[i];
    for (int l = 0; l < V; ++l) {
      double sum = 0;
      for (int j = 0; j < m; ++j) {
        const double qv = pol.q[i][l][j];
        sum += qv;
        if (qv < -kEqTol || qv > 1.0 + kEqTol) {
          add("q_box", video_level_tag(inst, i, l) + " server " +
                           std::to_string(inst.servers[j].server_id),
              qv, 1.0);
        }
        if (qv > kEqTol && !inst.placed(i, l, j)) {
          add("q_support", video_level_tag(inst, i, l) + " server " +
                               std::to_string(inst.servers[j].server_id),
              qv, 0.0);
        }
      }
      if (std::abs(sum - vid.code_k) > kEqTol * std::max(1.0, double(vid.code_k))) {
        add("q_row_sum", video_level_tag(inst, i, l), sum, vid.code_k);
      }
    }
  }

  for (int l = 0; l < V; ++l) {
    for (int j = 0; j < m; ++j) {
      double sum = 0;
      bool negative = false;
      for (double pv : pol.p[l][j]) {
        sum += pv;
        if (pv < -kEqTol) negative = true;
      }
      if (negative || std::abs(sum - 1.0) > kEqTol) {
        add("p_simplex", "level " + std::to_string(l + 1) + " server " +
                             std::to_string(inst.servers[j].server_id),
            sum, 1.0);
      }
    }
  }

  for (int i = 0; i < r; ++i) {
    double sum = 0;
    bool negative = false;
    for (double bv : pol.b[i]) {
      sum += bv;
      if (bv < -kEqTol) negative = true;
    }
    if (negative || std::abs(sum - 1.0) > kEqTol) {
      add("b_simplex", "video " + std::to_string(inst.videos[i].video_id), sum, 1.0);
    }
  }

  for (int j = 0; j < m; ++j) {
    double sum = 0;
    for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
      const double wv = pol.w[j][nu];
      sum += wv;
      if (wv < -kEqTol || wv > 1.0 + kEqTol) {
        add("w_box", stream_tag(inst, j, nu), wv, 1.0);
      }
    }
    if (sum > 1.0 + kEqTol) {
      add("w_budget", "server " + std::to_string(inst.servers[j].server_id), sum, 1.0);
    }
  }

  const StreamLoad loads = stream_arrival_rates(inst, pol);
  for (int j = 0; j < m; ++j) {
    for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
      if (!(loads.rho[j][nu] <= 1.0 - delta)) {
        add("rho_stability", stream_tag(inst, j, nu), loads.rho[j][nu], 1.0 - delta);
      }
    }
  }

  const double tau = inst.streaming.segment_seconds;
  for (int i = 0; i < r; ++i) {
    const VideoSpec& vid = inst.videos[i];
    const double t = pol.t[i];
    if (!(t > 0)) {
      add("t_positive", "video " + std::to_string(vid.video_id), t, 0.0);
      continue;
    }
    std::set<std::pair<int, int>> streams_of_i;
    for (int l = 0; l < V; ++l) {
      for (int j : vid.placement[l]) {
        if (!(pol.q[i][l][j] > 0)) continue;
        for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
          if (!(pol.p[l][j][nu] > 0)) continue;
          streams_of_i.insert({j, nu});
          const double w = pol.w[j][nu];
          if (!(w > 0)) {
            add("t_rate_cap", video_level_tag(inst, i, l) + " at " + stream_tag(inst, j, nu),
                t, 0.0);
            continue;
          }
          const EffectiveService svc =
              effective_params(inst.servers[j], w, inst.ladder.sizes[l]);
          if (t > svc.alpha * (1.0 - delta)) {
            add("t_rate_cap", video_level_tag(inst, i, l) + " at " + stream_tag(inst, j, nu),
                t, svc.alpha * (1.0 - delta));
          } else {
            const double window = svc.alpha * std::expm1((svc.beta - tau) * t) + t;
            if (!(window <= -delta * t)) {
              add("mgf_window", video_level_tag(inst, i, l) + " at " + stream_tag(inst, j, nu),
                  window, -delta * t);
            }
          }
        }
      }
    }
    for (const auto& [j, nu] : streams_of_i) {
      if (!(loads.lambda[j][nu] > 0)) continue;
      if (!(loads.rho[j][nu] < 1.0)) continue;  // already reported as rho_stability
      try {
        const double g = file_service_mgf(inst, pol, j, nu, t) * loads.lambda[j][nu];
        const double margin = g - loads.lambda[j][nu] - t;
        if (!(margin <= -delta * t)) {
          add("queue_margin", "video " + std::to_string(vid.video_id) + " at " +
                                  stream_tag(inst, j, nu),
              margin, -delta * t);
        }
      } catch (const DomainError&) {
        add("queue_margin", "video " + std::to_string(vid.video_id) + " at " +
                                stream_tag(inst, j, nu),
            std::numeric_limits<double>::infinity(), -delta * t);
      }
    }
  }

  return out;
}

}  // namespace streamopt
