#pragma once

#include <array>
#include <string>
#include <vector>

#include "streamopt/analytics.hpp"
#include "streamopt/types.hpp"

namespace streamopt {

enum class BlockId { Q_ACCESS, P_STREAM, T_AUX, B_QUALITY, W_BANDWIDTH };

const char* block_name(BlockId block);

// Fixed sweep order of the alternating scheme.
inline constexpr std::array<BlockId, 5> kBlockOrder = {
    BlockId::Q_ACCESS, BlockId::P_STREAM, BlockId::T_AUX, BlockId::B_QUALITY,
    BlockId::W_BANDWIDTH};

struct TraceRow {
  int outer = 0;
  BlockId block = BlockId::Q_ACCESS;
  double objective = 0;
  int inner_steps = 0;
  double max_slack = 0;  // most binding margined strict constraint (<= 0 when feasible)
};

using OptimizeTrace = std::vector<TraceRow>;

// Gradient of the objective w.r.t. one block, flattened:
//   Q_ACCESS     (i*levels + l)*m + j
//   P_STREAM     l*total_streams + stream_offset(j) + nu
//   T_AUX        i
//   B_QUALITY    i*levels + l
//   W_BANDWIDTH  stream_offset(j) + nu
// Entries for q coordinates off the placement are 0. Requires a
// strictly feasible policy. Videos with zero arrival rate get zero
// entries in their own coordinates.
std::vector<double> grad_block(const Instance& inst, const PolicyVars& pol,
                               double theta, BlockId block);
std::vector<double> grad_block_analytic(const Instance& inst, const PolicyVars& pol,
                                        double theta, BlockId block);
std::vector<double> grad_block_fd(const Instance& inst, const PolicyVars& pol,
                                  double theta, BlockId block);

// One proximal-linear block update: minimize grad^T (x - x0) +
// reg/2 ||x - x0||^2 over the block's constraint set (closed form via
// projection), then blend x <- x0 + gamma (xhat - x0), backtracking on
// the coupled strict constraints and on descent.
PolicyVars nova_step(const Instance& inst, const PolicyVars& pol, double theta,
                     BlockId block, TraceRow* row = nullptr);

struct OptimizeResult {
  PolicyVars policy;
  OptimizeTrace trace;
  bool converged = false;
  int outer_iters = 0;
  double objective = 0;
  // Prox-residual norm per block at termination, kBlockOrder order.
  std::array<double, 5> stationarity{};
};

// Block-cyclic descent over the free blocks until the objective change
// over one outer sweep falls below solver.epsilon. Frozen blocks are
// never touched. The init must be feasible (use feasibility_repair).
OptimizeResult alternating_optimize(const Instance& inst, double theta,
                                    const PolicyVars& init,
                                    const std::vector<BlockId>& free_blocks);
OptimizeResult alternating_optimize(const Instance& inst, double theta,
                                    const PolicyVars& init);

// Projects every block of a raw policy onto its constraint set (q, p,
// b, w row-wise, then t into its feasible interval). Idempotent on
// feasible policies. Throws EmptyIntervalError when even the repaired
// loads admit no exponent (overloaded instance).
PolicyVars feasibility_repair(const Instance& inst, const PolicyVars& raw);

}  // namespace streamopt
