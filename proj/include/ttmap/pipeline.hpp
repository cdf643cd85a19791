#pragma once

#include <functional>
#include <vector>

#include "ttmap/config.hpp"
#include "ttmap/fusion.hpp"

namespace ttmap {

enum class Ablation { None, NoGate, VanillaBgk, NoPool };

Ablation ablation_from_string(const std::string& name);

/// Per-scan wall-clock stage timings (monotonic clock, I/O excluded) plus the
/// outlier-rejection count. "local" mirrors projection through completion;
/// "update" is the fusion stage.
struct StageTimes {
  double projection_ms = 0.0;
  double steppability_ms = 0.0;
  double reprojection_ms = 0.0;
  double completion_ms = 0.0;
  double fusion_ms = 0.0;
  std::size_t rejected_cells = 0;

  double local_ms() const {
    return projection_ms + steppability_ms + reprojection_ms + completion_ms;
  }
  double total_ms() const { return local_ms() + fusion_ms; }
};

struct PipelineResult {
  StaticTerrainMap map;
  std::vector<StageTimes> timings;
};

/// Pulls the next (scan, pose) pair; returns false at end of stream.
using ScanSource = std::function<bool(RangeScan&, Pose&)>;

struct PipelineHooks {
  std::function<void(int scan_index, const SparseElevationGrid&, const LocalTerrainMap&)>
      on_local;
};

/// Runs projection, steppability, reprojection, completion and fusion per
/// scan. Ablations: NoGate disables the Mahalanobis gate (tau_m = inf),
/// VanillaBgk switches inference to plain kernel weights without the
/// observation bound, NoPool feeds the raw risk image forward.
PipelineResult run_pipeline(const Config& config, const ScanSource& source,
                            Ablation ablation = Ablation::None,
                            const PipelineHooks& hooks = {});

/// Convenience overload over pre-loaded vectors (sizes must match).
PipelineResult run_pipeline(const Config& config, const std::vector<RangeScan>& scans,
                            const std::vector<Pose>& poses,
                            Ablation ablation = Ablation::None,
                            const PipelineHooks& hooks = {});

}  // namespace ttmap
