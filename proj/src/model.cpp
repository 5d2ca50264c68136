#include <algorithm>
#include <set>
#include <sstream>

#include "streamopt/types.hpp"

namespace streamopt {

std::string Violation::to_string() const {
  std::ostringstream os;
  os << constraint << " violated at " << where << ": value " << value
     << " vs bound " << bound;
  return os.str();
}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << violations.size() << " constraint violation(s)";
  for (size_t k = 0; k < violations.size() && k < 8; ++k) {
    os << "; " << violations[k].to_string();
  }
  return os.str();
}

}  // namespace

FeasibilityError::FeasibilityError(std::vector<Violation> violations)
    : std::runtime_error(join_violations(violations)),
      violations_(std::move(violations)) {}

void Instance::finalize() {
  if (servers.empty()) throw ConfigError("servers: at least one required");
  if (videos.empty()) throw ConfigError("videos: at least one required");
  const int V = ladder.levels();
  if (V < 1) throw ConfigError("qualities: at least one level required");
  for (int l = 0; l < V; ++l) {
    if (!(ladder.sizes[l] > 0)) {
      throw ConfigError("qualities: size at level " + std::to_string(l + 1) +
                        " must be positive");
    }
    if (l > 0 && !(ladder.sizes[l] > ladder.sizes[l - 1])) {
      throw ConfigError("qualities: sizes must be strictly increasing at level " +
                        std::to_string(l + 1));
    }
  }

  std::set<int> seen_server_ids;
  stream_offset_.assign(servers.size() + 1, 0);
  for (size_t j = 0; j < servers.size(); ++j) {
    const ServerSpec& s = servers[j];
    if (!seen_server_ids.insert(s.server_id).second) {
      throw ConfigError("servers: duplicate id " + std::to_string(s.server_id));
    }
    if (!(s.alpha_base > 0)) {
      throw ConfigError("servers: alpha_base must be positive for id " +
                        std::to_string(s.server_id));
    }
    if (s.beta_base < 0) {
      throw ConfigError("servers: beta_base must be nonnegative for id " +
                        std::to_string(s.server_id));
    }
    if (s.num_streams < 1) {
      throw ConfigError("servers: num_streams must be at least 1 for id " +
                        std::to_string(s.server_id));
    }
    stream_offset_[j + 1] = stream_offset_[j] + s.num_streams;
  }
  total_streams_ = stream_offset_[servers.size()];

  if (!(streaming.segment_seconds > 0)) {
    throw ConfigError("streaming: tau must be positive");
  }
  if (streaming.startup_delay < 0) {
    throw ConfigError("streaming: startup_delay must be nonnegative");
  }

  if (!(solver.theta >= 0 && solver.theta <= 1)) {
    throw ConfigError("solver: theta must lie in [0, 1]");
  }
  if (!(solver.step_gamma > 0 && solver.step_gamma <= 1)) {
    throw ConfigError("solver: step_gamma must lie in (0, 1]");
  }
  if (!(solver.epsilon > 0)) throw ConfigError("solver: epsilon must be positive");
  if (solver.max_outer_iters < 1) {
    throw ConfigError("solver: max_outer_iters must be at least 1");
  }
  if (!(solver.slack_delta > 0 && solver.slack_delta < 0.1)) {
    throw ConfigError("solver: slack_delta must lie in (0, 0.1)");
  }
  for (double reg : {solver.reg.q, solver.reg.p, solver.reg.t, solver.reg.b, solver.reg.w}) {
    if (!(reg > 0)) throw ConfigError("solver: reg weights must be positive");
  }
  if (!(solver.inner_pgd.step > 0) || solver.inner_pgd.max_steps < 1 ||
      !(solver.inner_pgd.tol > 0)) {
    throw ConfigError("solver: inner_pgd fields must be positive");
  }

  const int m = num_servers();
  total_rate_ = 0;
  total_segments_ = 0;
  std::set<int> seen_video_ids;
  placed_.assign(static_cast<size_t>(videos.size()) * V * m, 0);
  for (size_t i = 0; i < videos.size(); ++i) {
    VideoSpec& vid = videos[i];
    const std::string tag = "video " + std::to_string(vid.video_id);
    if (!seen_video_ids.insert(vid.video_id).second) {
      throw ConfigError("videos: duplicate id " + std::to_string(vid.video_id));
    }
    if (vid.arrival_rate < 0) throw ConfigError(tag + ": lambda must be nonnegative");
    if (vid.num_segments < 1) throw ConfigError(tag + ": segments must be at least 1");
    if (vid.code_k < 1 || vid.code_n < vid.code_k) {
      throw ConfigError(tag + ": code requires 1 <= k <= n");
    }
    if (vid.code_n > m) {
      throw ConfigError(tag + ": n exceeds the number of servers");
    }
    if (static_cast<int>(vid.placement.size()) != V) {
      throw ConfigError(tag + ": placement must list one server set per level");
    }
    for (int l = 0; l < V; ++l) {
      std::vector<int>& servers_l = vid.placement[l];
      if (static_cast<int>(servers_l.size()) != vid.code_n) {
        throw ConfigError(tag + ": placement size != n at level " +
                          std::to_string(l + 1));
      }
      std::sort(servers_l.begin(), servers_l.end());
      for (size_t z = 0; z < servers_l.size(); ++z) {
        const int j = servers_l[z];
        if (j < 0 || j >= m) throw ConfigError(tag + ": placement server out of range");
        if (z > 0 && servers_l[z - 1] == j) {
          throw ConfigError(tag + ": placement has duplicate servers");
        }
        placed_[(i * V + l) * m + j] = 1;
      }
    }
    total_rate_ += vid.arrival_rate;
    total_segments_ += vid.num_segments;
  }
  if (!(total_rate_ > 0)) {
    throw ConfigError("videos: total arrival rate must be positive");
  }
}

PolicyVars make_uniform_policy(const Instance& inst) {
  const int r = inst.num_videos();
  const int m = inst.num_servers();
  const int V = inst.levels();
  PolicyVars pol;
  pol.q.assign(r, std::vector<std::vector<double>>(V, std::vector<double>(m, 0.0)));
  for (int i = 0; i < r; ++i) {
    const VideoSpec& vid = inst.videos[i];
    const double share = static_cast<double>(vid.code_k) / vid.code_n;
    for (int l = 0; l < V; ++l) {
      for (int j : vid.placement[l]) pol.q[i][l][j] = share;
    }
  }
  pol.p.assign(V, std::vector<std::vector<double>>(m));
  pol.w.assign(m, {});
  for (int j = 0; j < m; ++j) {
    const int d = inst.servers[j].num_streams;
    pol.w[j].assign(d, 1.0 / d);
    for (int l = 0; l < V; ++l) pol.p[l][j].assign(d, 1.0 / d);
  }
  pol.b.assign(r, std::vector<double>(V, 1.0 / V));
  pol.t.assign(r, 0.01);
  return pol;
}

void check_policy_shape(const Instance& inst, const PolicyVars& pol) {
  const size_t r = inst.videos.size();
  const size_t m = inst.servers.size();
  const size_t V = inst.ladder.sizes.size();
  auto fail = [](const std::string& what) { throw DimensionError("policy shape mismatch: " + what); };

  if (pol.q.size() != r) fail("q has " + std::to_string(pol.q.size()) + " videos, expected " + std::to_string(r));
  for (size_t i = 0; i < r; ++i) {
    if (pol.q[i].size() != V) fail("q[" + std::to_string(i) + "] levels");
    for (size_t l = 0; l < V; ++l) {
      if (pol.q[i][l].size() != m) fail("q[" + std::to_string(i) + "][" + std::to_string(l) + "] servers");
    }
  }
  if (pol.p.size() != V) fail("p has " + std::to_string(pol.p.size()) + " levels, expected " + std::to_string(V));
  for (size_t l = 0; l < V; ++l) {
    if (pol.p[l].size() != m) fail("p[" + std::to_string(l) + "] servers");
    for (size_t j = 0; j < m; ++j) {
      if (static_cast<int>(pol.p[l][j].size()) != inst.servers[j].num_streams) {
        fail("p[" + std::to_string(l) + "][" + std::to_string(j) + "] streams");
      }
    }
  }
  if (pol.b.size() != r) fail("b videos");
  for (size_t i = 0; i < r; ++i) {
    if (pol.b[i].size() != V) fail("b[" + std::to_string(i) + "] levels");
  }
  if (pol.w.size() != m) fail("w servers");
  for (size_t j = 0; j < m; ++j) {
    if (static_cast<int>(pol.w[j].size()) != inst.servers[j].num_streams) {
      fail("w[" + std::to_string(j) + "] streams");
    }
  }
  if (pol.t.size() != r) fail("t videos");
}

}  // namespace streamopt
