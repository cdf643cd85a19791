#pragma once

#include <cstdint>
#include <vector>

#include "ttmap/geometry.hpp"

namespace ttmap {

/// Spherical-projection raster geometry of a range sensor.
/// fov_up/fov_down and fov_left/fov_right are positive half-angles in
/// radians; a 360-degree sensor sets full_azimuth with fov_left + fov_right
/// equal to 2*pi.
struct SensorIntrinsics {
  int width = 360;
  int height = 64;
  double fov_up = 0.25 * 3.14159265358979323846;
  double fov_down = 0.25 * 3.14159265358979323846;
  double fov_left = 3.14159265358979323846;
  double fov_right = 3.14159265358979323846;
  bool full_azimuth = true;

  bool valid() const {
    return width >= 2 && height >= 2 && fov_up + fov_down > 0 && fov_left + fov_right > 0;
  }
};

/// One sensor-frame range scan. Intensities, when present, are carried for
/// format fidelity and ignored by the pipeline.
struct RangeScan {
  std::vector<Vec3> points;
  std::vector<float> intensities;
  std::int64_t timestamp = 0;
};

}  // namespace ttmap
