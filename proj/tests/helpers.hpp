#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "ttmap/completion.hpp"
#include "ttmap/projection.hpp"
#include "ttmap/reprojection.hpp"
#include "ttmap/rng.hpp"
#include "ttmap/steppability.hpp"

namespace ttmap::test {

inline SensorIntrinsics default_intrinsics() {
  SensorIntrinsics intr;
  intr.width = 360;
  intr.height = 64;
  intr.fov_up = intr.fov_down = 0.25 * std::numbers::pi;
  intr.fov_left = intr.fov_right = std::numbers::pi;
  intr.full_azimuth = true;
  return intr;
}

// Small raster without azimuth wrap, for hand-crafted windows.
inline SensorIntrinsics patch_intrinsics(int w, int h) {
  SensorIntrinsics intr;
  intr.width = w;
  intr.height = h;
  intr.fov_up = intr.fov_down = 0.1;
  intr.fov_left = intr.fov_right = 0.1;
  intr.full_azimuth = false;
  return intr;
}

inline SurfelMap empty_surfel_map(const SensorIntrinsics& intr) {
  SurfelMap map;
  map.intrinsics = intr;
  map.cells.assign(static_cast<std::size_t>(intr.width) * intr.height, Surfel{});
  map.max_range_per_column.assign(intr.width, 0.0);
  return map;
}

inline void set_surfel(SurfelMap& map, int u, int v, const Vec3& p, const Vec3& n) {
  Surfel& s = map.at(u, v);
  s.p = p;
  s.n = n.normalized();
  if (s.n.z() < 0) s.n = -s.n;
  s.valid = true;
}

inline RiskImage uniform_risk(const SensorIntrinsics& intr, double value) {
  RiskImage risk;
  risk.intrinsics = intr;
  risk.values.assign(static_cast<std::size_t>(intr.width) * intr.height, value);
  risk.valid.assign(risk.values.size(), 1);
  return risk;
}

// Sparse grid whose observation bound covers everything, for completion
// tests that are not about the bound.
inline SparseElevationGrid open_grid(int cols, int rows, double resolution) {
  SparseElevationGrid grid;
  grid.spec.resolution = resolution;
  grid.spec.extent_x = cols * resolution;
  grid.spec.extent_y = rows * resolution;
  grid.spec.origin_x = 0.0;
  grid.spec.origin_y = 0.0;
  grid.cells.assign(grid.spec.cell_count(), ObservedCell{});
  grid.intrinsics = default_intrinsics();
  grid.column_bound.assign(grid.intrinsics.width, 1e6);
  grid.sensor_pose.translation =
      Vec3(0.5 * cols * resolution, 0.5 * rows * resolution, 1.0);
  return grid;
}

inline void observe(SparseElevationGrid& grid, int col, int row, double h, double r_step,
                    double n_z = 1.0) {
  ObservedCell& cell = grid.cells[grid.spec.index(col, row)];
  cell.h_max = h;
  cell.h_min = h;
  cell.n_z = n_z;
  cell.r_step = r_step;
  cell.observed = true;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("ttmap_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace ttmap::test
