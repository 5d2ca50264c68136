#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "streamopt/types.hpp"

namespace streamopt {

// Deterministic generator: std::mt19937_64 engine (bit-exact across
// platforms) with hand-rolled variate mappings. Replication substreams
// are split off the base seed with splitmix64.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform();                    // (0, 1]
  double exponential(double rate);     // mean 1/rate
  double shifted_exp(double alpha, double beta);  // beta + exponential(alpha)
  int categorical(const std::vector<double>& weights);  // weights need not normalize
  uint64_t next() { return engine_(); }

  static uint64_t split(uint64_t seed, uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

struct SimConfig {
  long num_requests = 100000;   // arrivals injected per replication
  double warmup_fraction = 0.1; // leading arrivals excluded from stats
  uint64_t seed = 1;
  int replications = 1;
  bool record_trace = false;    // keep per-request rows in the report
};

struct RequestTrace {
  long request_id = 0;
  int video = 0;
  int level = 0;
  double arrival = 0;
  std::vector<std::pair<int, int>> selection;
  double stall = 0;
};

struct SimReport {
  double mean_stall = 0;
  double mean_stall_se = 0;     // standard error across replications
  std::map<int, double> per_file_stall;          // video id -> mean stall
  std::map<std::pair<int, int>, double> per_file_level_stall;
  std::map<std::pair<int, int>, double> per_file_level_se;  // pooled, iid approximation
  std::map<std::pair<int, int>, long> per_file_level_count;
  std::vector<std::vector<double>> mean_wait;    // [j][nu] job queueing delay
  std::vector<std::vector<double>> utilization;  // [j][nu] busy fraction
  double avg_quality = 0;       // empirical counterpart of average_quality
  bool unstable = false;        // some stream has analytic rho >= 1
  uint64_t seed = 0;
  int replications = 0;
  long counted_requests = 0;
  std::vector<RequestTrace> trace;               // only when record_trace
};

// Draws exactly k_i distinct servers with the marginals q[i][l][.]
// (systematic sampling over a uniformly random server order), then one
// stream per chosen server from p[l][j][.]. Throws FeasibilityError if
// the marginals do not sum to k_i within 1e-9.
std::vector<std::pair<int, int>> sample_selection(const Instance& inst,
                                                  const PolicyVars& pol, int i,
                                                  int l, Rng& rng);

// Event-driven replay of the policy: Poisson arrivals per video,
// quality sampled from b, chunks of a request appended as one FIFO job
// per selected stream, shifted-exponential chunk times, playback
// recursion per request. Replications run independently and merge
// deterministically.
SimReport run_simulation(const Instance& inst, const PolicyVars& pol,
                         const SimConfig& cfg);

// Stall implied by per-chunk client completion times (seconds relative
// to the request arrival) under startup delay d_s and segment length
// tau. Equals the playback recursion unrolled.
double stall_from_downloads(const std::vector<double>& d, double startup,
                            double tau);

struct BoundComparison {
  struct Row {
    int video = 0;
    int level = 0;
    long samples = 0;
    double empirical = 0;
    double se = 0;
    double bound = 0;
  };
  std::vector<Row> rows;
  double weighted_empirical = 0;
  double weighted_se = 0;
  double weighted_bound = 0;
  bool bound_holds = false;  // weighted bound >= weighted empirical - 3 se
};

// Compares empirical stalls from a finished simulation against the
// analytic per-(video, level) bounds.
BoundComparison compare_bound(const Instance& inst, const PolicyVars& pol,
                              const SimReport& sim);

// Runs the simulation and compares empirical stalls against the
// analytic per-(video, level) bounds.
BoundComparison validate_bound(const Instance& inst, const PolicyVars& pol,
                               const SimConfig& cfg);

}  // namespace streamopt
