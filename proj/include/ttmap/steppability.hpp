#pragma once

#include <vector>

#include "ttmap/projection.hpp"

namespace ttmap {

/// Per-pixel risk raster in [0,1] with a validity flag per pixel.
struct RiskImage {
  SensorIntrinsics intrinsics;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  double at(int u, int v) const {
    return values[static_cast<std::size_t>(v) * intrinsics.width + u];
  }
  bool is_valid(int u, int v) const {
    return valid[static_cast<std::size_t>(v) * intrinsics.width + u] != 0;
  }
};

struct SteppabilityParams {
  double tau_r = 0.6;        // pooling threshold
  int risk_kernel = 1;       // window half-width for the raw risk
  int pool_kernel = 1;       // window half-width for conditional pooling
  bool literal_prox = false; // restore the uninverted proximity fraction
};

/// Surface continuity score between two surfels: the normal agreement times
/// one minus the normalized out-of-plane offset. With literal_form the
/// complement is dropped and the raw fraction is returned instead.
double proximity(const Surfel& a, const Surfel& b, bool literal_form = false);

/// Raw steppability risk: one minus the geometric mean of center verticality
/// and mean neighbor proximity over the window (center excluded). Pixels
/// without valid neighbors are invalid.
RiskImage raw_steppability(const SurfelMap& map, const SteppabilityParams& params = {},
                           int threads = 1);

/// Edge-preserving smoothing: window mean, replaced by the window max when
/// the mean exceeds tau_r.
RiskImage conditional_pool(const RiskImage& raw, const SteppabilityParams& params = {},
                           int threads = 1);

}  // namespace ttmap
