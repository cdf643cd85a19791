#include "ttmap/projection.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "ttmap/parallel.hpp"

namespace ttmap {

namespace {

// Clamp a continuous raster coordinate that fell within half a pixel of the
// border back onto it; values farther outside are rejected.
std::optional<int> to_pixel(double x, int size) {
  if (x >= -0.5 && x < 0.0) return 0;
  if (x >= size && x < size + 0.5) return size - 1;
  const int i = static_cast<int>(std::floor(x));
  if (i < 0 || i >= size) return std::nullopt;
  return i;
}

}  // namespace

std::optional<PixelCoord> project_point(const Vec3& q, const SensorIntrinsics& intr) {
  const double planar_sq = q.x() * q.x() + q.y() * q.y();
  const double range = std::sqrt(planar_sq + q.z() * q.z());
  if (range <= 0.0) return std::nullopt;

  double azimuth;
  if (intr.full_azimuth) {
    azimuth = std::atan2(q.y(), q.x());
  } else {
    if (planar_sq <= 0.0) return std::nullopt;  // azimuth undefined on the pole
    azimuth = std::atan(q.y() / q.x());
  }
  const double elevation = std::asin(q.z() / range);

  const double uf = intr.width * (1.0 - (azimuth + intr.fov_right) / (intr.fov_left + intr.fov_right));
  const double vf = intr.height * (1.0 - (elevation + intr.fov_down) / (intr.fov_up + intr.fov_down));

  const auto u = to_pixel(uf, intr.width);
  if (!u) return std::nullopt;
  const auto v = to_pixel(vf, intr.height);
  if (!v) return std::nullopt;
  return PixelCoord{*u, *v};
}

SurfelMap build_surfel_map(const RangeScan& scan, const SensorIntrinsics& intr,
                           const ProjectionParams& params, int threads) {
  SurfelMap map;
  map.intrinsics = intr;
  const int w = intr.width;
  const int h = intr.height;
  map.cells.assign(static_cast<std::size_t>(w) * h, Surfel{});
  map.max_range_per_column.assign(w, 0.0);

  // Nearest-range reduction per pixel; (range, scan index) lexicographic min
  // makes the result independent of processing order.
  struct Best {
    double range = std::numeric_limits<double>::infinity();
    std::size_t order = 0;
  };
  std::vector<Best> best(map.cells.size());
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const Vec3& q = scan.points[i];
    const double range = q.norm();
    if (!std::isfinite(range) || range < params.min_range) continue;
    const auto px = project_point(q, intr);
    if (!px) continue;
    const std::size_t idx = static_cast<std::size_t>(px->v) * w + px->u;
    if (range < best[idx].range || (range == best[idx].range && i < best[idx].order)) {
      best[idx] = {range, i};
      map.cells[idx].p = q;
      map.cells[idx].valid = true;  // provisional; normals may invalidate
    }
  }

  const std::vector<Surfel> occupied = map.cells;
  const int k = params.normal_kernel;

  parallel_for(map.cells.size(), threads, [&](std::size_t lo, std::size_t hi) {
    Eigen::SelfAdjointEigenSolver<Mat3> solver;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      if (!occupied[idx].valid) continue;
      const int v = static_cast<int>(idx) / w;
      const int u = static_cast<int>(idx) % w;

      Vec3 mean = Vec3::Zero();
      int count = 0;
      for (int dv = -k; dv <= k; ++dv) {
        const int vv = v + dv;
        if (vv < 0 || vv >= h) continue;
        for (int du = -k; du <= k; ++du) {
          int uu = u + du;
          if (intr.full_azimuth) {
            uu = (uu % w + w) % w;
          } else if (uu < 0 || uu >= w) {
            continue;
          }
          const Surfel& s = occupied[static_cast<std::size_t>(vv) * w + uu];
          if (!s.valid) continue;
          mean += s.p;
          ++count;
        }
      }
      if (count < params.min_support) {
        map.cells[idx].valid = false;
        continue;
      }
      mean /= count;
      Mat3 cov = Mat3::Zero();
      for (int dv = -k; dv <= k; ++dv) {
        const int vv = v + dv;
        if (vv < 0 || vv >= h) continue;
        for (int du = -k; du <= k; ++du) {
          int uu = u + du;
          if (intr.full_azimuth) {
            uu = (uu % w + w) % w;
          } else if (uu < 0 || uu >= w) {
            continue;
          }
          const Surfel& s = occupied[static_cast<std::size_t>(vv) * w + uu];
          if (!s.valid) continue;
          const Vec3 d = s.p - mean;
          cov += d * d.transpose();
        }
      }
      cov /= count;
      solver.computeDirect(cov);
      Vec3 normal = solver.eigenvectors().col(0);  // smallest eigenvalue
      if (normal.z() < 0.0) normal = -normal;
      map.cells[idx].n = normal.normalized();
      map.cells[idx].valid = true;
    }
  });

  for (int u = 0; u < w; ++u) {
    double max_range = 0.0;
    for (int v = 0; v < h; ++v) {
      const Surfel& s = map.at(u, v);
      if (s.valid) max_range = std::max(max_range, s.p.norm());
    }
    map.max_range_per_column[u] = max_range;
  }
  return map;
}

}  // namespace ttmap
