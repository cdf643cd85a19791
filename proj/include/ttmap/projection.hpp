#pragma once

#include <optional>
#include <vector>

#include "ttmap/sensor.hpp"

namespace ttmap {

/// Surface element: a point plus a PCA surface normal, as one raster pixel.
struct Surfel {
  Vec3 p = Vec3::Zero();
  Vec3 n = Vec3::Zero();
  bool valid = false;
};

struct PixelCoord {
  int u = 0;
  int v = 0;
};

/// Range raster of surfels plus the maximum observed range per azimuth
/// column (0 where the column is empty), which later bounds terrain
/// inference.
struct SurfelMap {
  SensorIntrinsics intrinsics;
  std::vector<Surfel> cells;                  // row-major, v * width + u
  std::vector<double> max_range_per_column;   // length width

  const Surfel& at(int u, int v) const {
    return cells[static_cast<std::size_t>(v) * intrinsics.width + u];
  }
  Surfel& at(int u, int v) {
    return cells[static_cast<std::size_t>(v) * intrinsics.width + u];
  }
};

struct ProjectionParams {
  int normal_kernel = 1;    // PCA window half-width k, window is (2k+1)^2
  int min_support = 3;      // minimum valid window members for a normal
  double min_range = 0.3;   // metres; closer returns are discarded
};

/// Maps a sensor-frame point onto the raster. Azimuth uses the two-argument
/// arctangent for full-azimuth sensors and the single-argument form
/// otherwise; elevation is asin(z / |q|). Continuous coordinates within half
/// a pixel outside the raster are clamped onto the border row/column;
/// anything farther out yields nullopt.
std::optional<PixelCoord> project_point(const Vec3& q, const SensorIntrinsics& intr);

/// Builds the surfel map: nearest-range point per pixel (ties broken by scan
/// order), then PCA normals over the surrounding window, oriented so
/// n_z >= 0. Pixels with fewer than params.min_support valid window members
/// are invalid. For full-azimuth sensors the window wraps across the seam.
SurfelMap build_surfel_map(const RangeScan& scan, const SensorIntrinsics& intr,
                           const ProjectionParams& params = {}, int threads = 1);

}  // namespace ttmap
