#pragma once

#include <vector>

#include "streamopt/types.hpp"

namespace streamopt {

struct EffectiveService {
  double alpha = 0;  // chunk service rate (1/s)
  double beta = 0;   // chunk service shift (s)
};

// Scales a server's unit-size parameters to one stream serving chunks
// of size `a` with bandwidth share `w`. Throws DomainError if w <= 0
// or a <= 0.
EffectiveService effective_params(const ServerSpec& server, double w, double a);

// Moment generating function of one shifted-exponential chunk time at
// exponent t. Exists only for t < alpha.
double chunk_mgf(const EffectiveService& svc, double t);
double chunk_log_mgf(const EffectiveService& svc, double t);

// Per-stream request rates and utilizations induced by a policy.
StreamLoad stream_arrival_rates(const Instance& inst, const PolicyVars& pol);

// Utilization of stream (j, nu): arrival rate times mean file service.
double utilization(const Instance& inst, const PolicyVars& pol, int j, int nu);

// Transform of one whole-file service time on stream (j, nu): the
// arrival-weighted mixture over (video, level) of chunk_mgf^segments.
// Throws DomainError if the stream has no arrival mass or t is outside
// the window of some active component.
double file_service_mgf(const Instance& inst, const PolicyVars& pol, int j, int nu,
                        double t);

// Transform of the time until chunk u of video i (level l) clears
// stream (j, nu): queue factor times chunk_mgf^u. A stream with zero
// arrival mass uses the empty-queue form (factor 1).
double download_mgf(const Instance& inst, const PolicyVars& pol, int i, int j, int nu,
                    int l, int u, double t);

// Mean queueing delay before service starts on stream (j, nu), from
// the first two moments of the file service mixture. Throws
// DomainError when the stream is unstable (rho >= 1).
double mean_waiting_time(const Instance& inst, const PolicyVars& pol, int j, int nu);

// Discounted tail sum over the segments of video i at level l on
// stream (j, nu): sum_{v=1..L} exp(-t(d_s+(v-1)tau)) * download_mgf(v).
// Evaluated in closed geometric form; falls back to direct summation
// when the ratio is within 1e-9 of 1.
double segment_tail_H(const Instance& inst, const PolicyVars& pol, int i, int j, int nu,
                      int l, double t);

// Upper bound on the mean stall duration of video i at level l, using
// the policy's exponent t_i. Throws DomainError outside the feasible
// window and EmptyIntervalError via callers that need repair.
double stall_bound(const Instance& inst, const PolicyVars& pol, int i, int l);

// Scalarized objective: theta weighs negated per-request quality mass,
// (1-theta) weighs the arrival-weighted mean stall bound.
double objective_value(const Instance& inst, const PolicyVars& pol, double theta);

// Arrival- and length-weighted mean delivered quality, normalized by
// the total segment count, in size units.
double average_quality(const Instance& inst, const PolicyVars& pol);

// Largest exponent (with slack margin) at which every bound-existence
// condition holds for video i, holding all other variables fixed.
// Bisection to 1e-9 relative. Throws EmptyIntervalError when no
// exponent above slack_delta qualifies.
double t_feasible_upper(const Instance& inst, const PolicyVars& pol, int i);

struct BoundReport {
  double theta = 0;
  std::vector<std::vector<double>> per_file_quality_bound;  // [i][l] seconds
  double weighted_mean_stall = 0;  // arrival- and quality-weighted bound
  double average_quality = 0;
  double objective = 0;
  StreamLoad loads;
};

BoundReport bound_report(const Instance& inst, const PolicyVars& pol, double theta);

// Shared evaluation cache: one construction per policy point, then
// objective / report / gradient assembly read from it. Exposes its
// internals for the chain-rule code in the optimizer.
class Evaluation {
 public:
  // with_partials additionally prepares the derivative caches.
  // Throws DomainError if any transform is outside its window.
  Evaluation(const Instance& inst, const PolicyVars& pol, bool with_partials);

  double objective(double theta) const;
  double bound(int i, int l) const { return bound_[idx(i, l)]; }
  double average_quality() const;
  BoundReport report(double theta) const;
  const StreamLoad& loads() const { return loads_; }

  // ---- internals used by gradient assembly ----

  struct Stream {
    int j = 0;
    int nu = 0;
    double lambda = 0;
    double rho = 0;
    std::vector<double> alpha;  // per level; 0 when the share is 0
    std::vector<double> beta;   // per level
    std::vector<double> xg;     // grouped mass, index cls*levels+l
    double drho_dw = 0;         // d rho / d w share (stream total)
  };

  // Cache for one (video, touched stream) pair, evaluated at t_i.
  struct Pair {
    int stream = 0;
    double G = 0;        // lambda * file-service transform
    double Gp = 0;       // dG/dt
    double pk = 0;       // queue factor
    double dpk_dG = 0;
    double dpk_dLam = 0;
    double dpk_dRho = 0;
    double dpk_dt = 0;
    std::vector<double> logM;  // per level, NaN when unused
    std::vector<double> mx;    // per level: sum over classes of x*m
    std::vector<double> mxL;   // per level: sum over classes of x*m*L
    std::vector<double> qp;    // per level: q[i][l][j]*p[l][j][nu]
    std::vector<double> H;     // per level tail sum, 0 when qp == 0
    std::vector<double> geo;   // per level geometric tail
    std::vector<double> dgeo;  // per level d geo / d log-ratio
  };

  const Instance& instance() const { return inst_; }
  const PolicyVars& policy() const { return pol_; }
  const std::vector<Stream>& streams() const { return streams_; }
  const std::vector<int>& touched(int i) const { return touched_[i]; }
  const Pair& pair(int i, int k) const { return pairs_[pair_offset_[i] + k]; }
  double row_sum(int i, int l) const { return srow_[idx(i, l)]; }  // S_{i,l}
  double startup_factor(int i) const { return eds_[i]; }           // exp(-t_i(d_s-tau))
  int level_class(int i) const { return lclass_[i]; }
  int class_segments(int cls) const { return class_L_[cls]; }
  int num_classes() const { return static_cast<int>(class_L_.size()); }

 private:
  size_t idx(int i, int l) const { return static_cast<size_t>(i) * V_ + l; }
  void build_streams();
  void build_pairs(bool with_partials);

  const Instance& inst_;
  const PolicyVars& pol_;
  int V_ = 0;
  std::vector<int> lclass_;
  std::vector<int> class_L_;
  std::vector<Stream> streams_;
  std::vector<std::vector<int>> touched_;
  std::vector<int> pair_offset_;
  std::vector<Pair> pairs_;
  std::vector<double> eds_;
  std::vector<double> srow_;
  std::vector<double> bound_;
  StreamLoad loads_;
};

}  // namespace streamopt
