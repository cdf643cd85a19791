#include "ttmap/pipeline.hpp"

#include <chrono>
#include <limits>
#include <stdexcept>

namespace ttmap {

Ablation ablation_from_string(const std::string& name) {
  if (name.empty() || name == "none") return Ablation::None;
  if (name == "no-gate") return Ablation::NoGate;
  if (name == "vanilla-bgk") return Ablation::VanillaBgk;
  if (name == "no-pool") return Ablation::NoPool;
  throw std::runtime_error("unknown ablation '" + name +
                           "' (expected no-gate|vanilla-bgk|no-pool)");
}

namespace {

double elapsed_ms(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

PipelineResult run_pipeline(const Config& config, const ScanSource& source,
                            Ablation ablation, const PipelineHooks& hooks) {
  config.validate();

  CompletionParams completion_params = config.completion;
  if (ablation == Ablation::VanillaBgk) completion_params.traversability_aware = false;
  FusionParams fusion_params = config.fusion;
  fusion_params.sigma_min = config.completion.sigma_min;
  if (ablation == Ablation::NoGate) {
    fusion_params.tau_m = std::numeric_limits<double>::infinity();
  }

  PipelineResult result{StaticTerrainMap(config.grid.resolution, config.fusion.tile_size), {}};

  RangeScan scan;
  Pose pose;
  int scan_index = 0;
  while (source(scan, pose)) {
    StageTimes times;
    try {
      auto t0 = std::chrono::steady_clock::now();
      const SurfelMap surfels =
          build_surfel_map(scan, config.sensor, config.projection, config.threads);
      times.projection_ms = elapsed_ms(t0);

      t0 = std::chrono::steady_clock::now();
      const RiskImage raw = raw_steppability(surfels, config.steppability, config.threads);
      const RiskImage risk = ablation == Ablation::NoPool
                                 ? raw
                                 : conditional_pool(raw, config.steppability, config.threads);
      times.steppability_ms = elapsed_ms(t0);

      t0 = std::chrono::steady_clock::now();
      const GridSpec window =
          snapped_window(pose.translation.x(), pose.translation.y(), config.grid.extent_x,
                         config.grid.extent_y, config.grid.resolution);
      const SparseElevationGrid sparse =
          reproject(surfels, risk, pose, window, config.reprojection);
      times.reprojection_ms = elapsed_ms(t0);

      t0 = std::chrono::steady_clock::now();
      const LocalTerrainMap local = complete(sparse, completion_params, config.threads);
      times.completion_ms = elapsed_ms(t0);

      if (hooks.on_local) hooks.on_local(scan_index, sparse, local);

      t0 = std::chrono::steady_clock::now();
      const std::vector<CellKey> rejected =
          gate_and_update(local, result.map, fusion_params);
      times.fusion_ms = elapsed_ms(t0);
      times.rejected_cells = rejected.size();
    } catch (const std::exception& e) {
      throw std::runtime_error("pipeline failed at scan " + std::to_string(scan_index) +
                               ": " + e.what());
    }
    result.timings.push_back(times);
    ++scan_index;
  }
  return result;
}

PipelineResult run_pipeline(const Config& config, const std::vector<RangeScan>& scans,
                            const std::vector<Pose>& poses, Ablation ablation,
                            const PipelineHooks& hooks) {
  if (scans.size() != poses.size()) {
    throw std::invalid_argument("run_pipeline: scan count (" + std::to_string(scans.size()) +
                                ") does not match pose count (" +
                                std::to_string(poses.size()) + ")");
  }
  std::size_t next = 0;
  return run_pipeline(
      config,
      [&](RangeScan& scan, Pose& pose) {
        if (next >= scans.size()) return false;
        scan = scans[next];
        pose = poses[next];
        ++next;
        return true;
      },
      ablation, hooks);
}

}  // namespace ttmap
