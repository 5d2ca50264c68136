#pragma once

#include <string>
#include <vector>

#include "streamopt/analytics.hpp"
#include "streamopt/optimizer.hpp"
#include "streamopt/types.hpp"

namespace streamopt {

// Reference schemes, each freezing one block at a fixed value and
// optimizing the rest:
//   PEA_QTB  equal access: q = k/n on the placement, frozen
//   PEB_QTA  equal bandwidth: w = 1/d_j, frozen
//   PEQ_BTA  equal quality: b = 1/levels, frozen
//   PSP_QTB  service-proportional access: q ~ mean-service-rate share, frozen
//   PLQ_BTA  lowest quality only: b mass on level 1, frozen
//   PHQ_BTA  highest quality only: b mass on the top level, frozen
enum class BaselineKind { PEA_QTB, PEB_QTA, PEQ_BTA, PSP_QTB, PLQ_BTA, PHQ_BTA };

const char* baseline_name(BaselineKind kind);
std::vector<BaselineKind> all_baselines();

// Blocks the baseline optimizes (the complement is frozen).
std::vector<BlockId> baseline_free_blocks(BaselineKind kind);

// Uniform start with the frozen block overwritten, then repaired. The
// frozen block is projected only here, never during the run.
PolicyVars baseline_init(const Instance& inst, BaselineKind kind);

struct BaselineRun {
  BaselineKind kind = BaselineKind::PEA_QTB;
  PolicyVars init;  // start the reported run actually used
  OptimizeResult result;
  BoundReport report;
};

// Runs the kind's restricted alternating optimization from its canonical
// start and from a warm start derived from an unrestricted pass with the
// frozen blocks re-imposed, keeping the better outcome. `warm` optionally
// supplies the unrestricted pass (it is kind-independent), so callers
// running several baselines can solve it once.
BaselineRun run_baseline(const Instance& inst, BaselineKind kind, double theta,
                         const PolicyVars* warm = nullptr);

// The shared unrestricted pass used for warm starts.
PolicyVars baseline_warm_policy(const Instance& inst, double theta);

}  // namespace streamopt
