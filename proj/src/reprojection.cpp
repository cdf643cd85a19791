#include "ttmap/reprojection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ttmap {

namespace {

// Raster column of a world-frame direction as seen from the sensor, for
// looking up the per-column observation bound. Returns -1 outside the
// horizontal field of view.
int azimuth_column(const SensorIntrinsics& intr, const Pose& pose, double wx, double wy) {
  const Vec3 local = pose.rotation.transpose() * Vec3(wx - pose.translation.x(),
                                                      wy - pose.translation.y(), 0.0);
  double azimuth;
  if (intr.full_azimuth) {
    azimuth = std::atan2(local.y(), local.x());
  } else {
    if (local.x() == 0.0 && local.y() == 0.0) return -1;
    azimuth = std::atan(local.y() / local.x());
  }
  const double uf =
      intr.width * (1.0 - (azimuth + intr.fov_right) / (intr.fov_left + intr.fov_right));
  int u = static_cast<int>(std::floor(uf));
  if (intr.full_azimuth) {
    u = (u % intr.width + intr.width) % intr.width;
    return u;
  }
  return (u >= 0 && u < intr.width) ? u : -1;
}

}  // namespace

bool SparseElevationGrid::within_observation(int col, int row) const {
  if (!spec.contains(col, row)) return false;
  if (at(col, row).observed) return true;
  const double cx = spec.center_x(col);
  const double cy = spec.center_y(row);
  const int u = azimuth_column(intrinsics, sensor_pose, cx, cy);
  if (u < 0) return false;
  const double bound = column_bound[u];
  if (bound <= 0.0) return false;
  const double dx = cx - sensor_pose.translation.x();
  const double dy = cy - sensor_pose.translation.y();
  const double slack = 0.5 * spec.resolution * std::numbers::sqrt2;
  return std::sqrt(dx * dx + dy * dy) <= bound + slack;
}

SparseElevationGrid reproject(const SurfelMap& map, const RiskImage& risk, const Pose& pose,
                              const GridSpec& spec, const ReprojectionParams& params) {
  if (map.intrinsics.width != risk.intrinsics.width ||
      map.intrinsics.height != risk.intrinsics.height) {
    throw std::invalid_argument("reproject: surfel map and risk image size mismatch");
  }
  SparseElevationGrid grid;
  grid.spec = spec;
  grid.cells.assign(spec.cell_count(), ObservedCell{});
  grid.column_bound = map.max_range_per_column;
  grid.intrinsics = map.intrinsics;
  grid.sensor_pose = pose;

  struct Hit {
    double z;
    std::int32_t pixel;  // ascending-z tie break
    double n_z;
    double r_step;
  };
  std::vector<std::vector<Hit>> bins(spec.cell_count());

  for (std::size_t idx = 0; idx < map.cells.size(); ++idx) {
    const Surfel& s = map.cells[idx];
    if (!s.valid || !risk.valid[idx]) continue;
    const Vec3 world = pose.apply(s.p);
    const int col = spec.col_of(world.x());
    const int row = spec.row_of(world.y());
    if (!spec.contains(col, row)) {
      ++grid.dropped_outside;
      continue;
    }
    const Vec3 n_world = pose.rotate(s.n);
    bins[spec.index(col, row)].push_back(Hit{world.z(), static_cast<std::int32_t>(idx),
                                             std::abs(n_world.z()), risk.values[idx]});
  }

  for (std::size_t c = 0; c < bins.size(); ++c) {
    auto& hits = bins[c];
    if (hits.empty()) continue;
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return a.z != b.z ? a.z < b.z : a.pixel < b.pixel;
    });
    ObservedCell cell;
    double nz_sum = 0.0;
    int accepted = 0;
    for (const Hit& hit : hits) {
      if (accepted > 0 && hit.z > cell.h_max + params.platform_height) break;
      if (accepted == 0) {
        cell.h_max = cell.h_min = hit.z;
      } else {
        cell.h_max = std::max(cell.h_max, hit.z);
        cell.h_min = std::min(cell.h_min, hit.z);
      }
      nz_sum += hit.n_z;
      cell.r_step = std::max(cell.r_step, hit.r_step);
      ++accepted;
    }
    cell.n_z = nz_sum / accepted;
    cell.observed = true;
    grid.cells[c] = cell;
  }
  return grid;
}

}  // namespace ttmap
