#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace streamopt {

// Raised when a config file cannot be parsed or violates a structural
// invariant. The message names the first violated field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when policy containers do not match the instance dimensions.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a transform is evaluated outside its window of existence
// (exponent too large, queue margin exhausted, unstable stream).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when no positive exponent satisfies the bound-existence
// conditions for some video (policy cannot be bounded as-is).
class EmptyIntervalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One violated constraint, identified by a stable name plus the indices
// it applies to. `value` is the measured quantity, `bound` its limit.
struct Violation {
  std::string constraint;
  std::string where;
  double value = 0.0;
  double bound = 0.0;

  std::string to_string() const;
};

class FeasibilityError : public std::runtime_error {
 public:
  explicit FeasibilityError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

struct ServerSpec {
  int server_id = 0;       // external id, unique
  double alpha_base = 0;   // service rate for a unit-size chunk at full bandwidth (1/s per size unit)
  double beta_base = 0;    // service start-up shift per size unit (s per size unit)
  int num_streams = 0;     // parallel streams carved out of this server
};

struct QualityLadder {
  std::vector<double> sizes;  // chunk size per quality level, strictly increasing

  int levels() const { return static_cast<int>(sizes.size()); }
};

struct VideoSpec {
  int video_id = 0;
  double arrival_rate = 0;  // Poisson request rate (1/s)
  int num_segments = 0;     // playback segments, each tau seconds long
  int code_n = 0;           // coded chunks stored
  int code_k = 0;           // chunks needed to reconstruct a segment
  // Server indices (dense, 0-based) holding this video, one set per
  // quality level. All sets have size code_n.
  std::vector<std::vector<int>> placement;
  // True when the config gave a single shared set for all levels.
  bool shared_placement = true;
};

struct StreamingParams {
  double segment_seconds = 0;  // playback duration of one segment (tau)
  double startup_delay = 0;    // client buffering delay before playback starts (d_s)
};

struct RegParams {
  double q = 1.0;
  double p = 1.0;
  double t = 1.0;
  double b = 1.0;
  double w = 1.0;
};

struct InnerPgdParams {
  double step = 1.0;    // scale on the prox step 1/reg
  int max_steps = 60;   // feasibility/descent backtracking limit
  double tol = 1e-9;    // stationarity tolerance on the projected step
};

struct SolverConfig {
  double theta = 1e-7;        // trade-off weight on quality vs stall
  double step_gamma = 0.9;    // blend factor toward the block minimizer
  RegParams reg;              // per-block proximal weights
  double epsilon = 1e-6;      // outer convergence threshold on the objective
  int max_outer_iters = 5000;
  InnerPgdParams inner_pgd;
  double slack_delta = 1e-6;  // margin enforced on strict inequalities
  bool fd_gradients = false;  // replace analytic gradients with central differences
};

// Full problem instance. `finalize()` must run after construction; it
// checks invariants and fills the derived lookup tables.
struct Instance {
  std::vector<ServerSpec> servers;
  QualityLadder ladder;
  std::vector<VideoSpec> videos;
  StreamingParams streaming;
  SolverConfig solver;

  int num_servers() const { return static_cast<int>(servers.size()); }
  int num_videos() const { return static_cast<int>(videos.size()); }
  int levels() const { return ladder.levels(); }
  double total_arrival_rate() const { return total_rate_; }
  long long total_segments() const { return total_segments_; }
  int total_streams() const { return total_streams_; }
  int stream_offset(int j) const { return stream_offset_[j]; }
  bool placed(int video, int level, int server) const {
    return placed_[(static_cast<size_t>(video) * levels() + level) * num_servers() + server] != 0;
  }

  // Validates structural invariants (throws ConfigError) and rebuilds
  // the derived tables. Call after any mutation.
  void finalize();

 private:
  double total_rate_ = 0;
  long long total_segments_ = 0;
  int total_streams_ = 0;
  std::vector<int> stream_offset_;
  std::vector<unsigned char> placed_;
};

// Decision variables, indexed with dense 0-based indices:
//   q[i][l][j]   access weight of video i, level l, on server j
//   p[l][j][nu]  stream pick probability at level l on server j
//   b[i][l]      quality pick probability of video i
//   w[j][nu]     bandwidth share of stream nu on server j
//   t[i]         bound exponent of video i
struct PolicyVars {
  std::vector<std::vector<std::vector<double>>> q;
  std::vector<std::vector<std::vector<double>>> p;
  std::vector<std::vector<double>> b;
  std::vector<std::vector<double>> w;
  std::vector<double> t;
};

// Per-stream aggregate load induced by a policy.
struct StreamLoad {
  std::vector<std::vector<double>> lambda;  // [j][nu] request rate
  std::vector<std::vector<double>> rho;     // [j][nu] utilization
  double total_lambda = 0;                  // sum of lambda, equals sum_i lambda_i k_i when b rows sum to 1
};

// Uniform starting point: q = k/n on the placement, p and w = 1/d_j,
// b = 1/levels, t = 0.01. Not necessarily feasible; repair before use.
PolicyVars make_uniform_policy(const Instance& inst);

// Structural shape check for a policy against an instance; throws
// DimensionError naming the first mismatched container.
void check_policy_shape(const Instance& inst, const PolicyVars& pol);

}  // namespace streamopt
