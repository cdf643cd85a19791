#pragma once

#include <cstdint>
#include <vector>

#include "ttmap/steppability.hpp"

namespace ttmap {

/// One observed elevation cell: height span, mean verticality and maximum
/// steppability risk of the surfels accepted into it.
struct ObservedCell {
  double h_max = 0.0;
  double h_min = 0.0;
  double n_z = 0.0;
  double r_step = 0.0;
  bool observed = false;
};

/// Robot-centric world-frame grid of observed cells plus the per-azimuth
/// observation bound copied from the surfel map columns.
struct SparseElevationGrid {
  GridSpec spec;
  std::vector<ObservedCell> cells;
  std::vector<double> column_bound;  // metres, one entry per raster column
  SensorIntrinsics intrinsics;       // azimuth binning of column_bound
  Pose sensor_pose;
  std::int64_t dropped_outside = 0;  // diagnostics: surfels beyond the window

  const ObservedCell& at(int col, int row) const { return cells[spec.index(col, row)]; }

  /// True when the cell is inside the per-column observation bound (or was
  /// observed directly). Half a cell diagonal of slack absorbs binning
  /// quantization.
  bool within_observation(int col, int row) const;
};

struct ReprojectionParams {
  double platform_height = 1.0;  // h_p, metres
};

/// Re-projects valid surfels and their pooled risks into the window around
/// the pose. Per cell, surfels are processed bottom-up and accepted while
/// they stay within platform_height of the running maximum; overhanging
/// returns above that gap are rejected.
SparseElevationGrid reproject(const SurfelMap& map, const RiskImage& risk, const Pose& pose,
                              const GridSpec& spec, const ReprojectionParams& params = {});

}  // namespace ttmap
