#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace ttmap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid sensor-to-world transform.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
};

/// Planar grid layout. origin_x/origin_y is the world position of the
/// low corner of cell (0,0); cells are square, indexed (col, row) row-major.
/// Extents must be positive multiples of the resolution so that every grid
/// sharing a resolution lives on one world-aligned lattice.
struct GridSpec {
  double resolution = 0.1;
  double extent_x = 6.0;
  double extent_y = 6.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  int cols() const { return static_cast<int>(std::llround(extent_x / resolution)); }
  int rows() const { return static_cast<int>(std::llround(extent_y / resolution)); }
  std::size_t cell_count() const { return static_cast<std::size_t>(cols()) * rows(); }

  bool contains(int col, int row) const {
    return col >= 0 && col < cols() && row >= 0 && row < rows();
  }
  int col_of(double x) const { return static_cast<int>(std::floor((x - origin_x) / resolution)); }
  int row_of(double y) const { return static_cast<int>(std::floor((y - origin_y) / resolution)); }
  double center_x(int col) const { return origin_x + (col + 0.5) * resolution; }
  double center_y(int row) const { return origin_y + (row + 0.5) * resolution; }
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * cols() + col;
  }

  /// Index of cell (0,0) on the global world lattice anchored at the origin.
  std::int64_t lattice_x() const { return std::llround(origin_x / resolution); }
  std::int64_t lattice_y() const { return std::llround(origin_y / resolution); }

  /// True when origin sits on the world lattice for this resolution.
  bool lattice_aligned() const {
    const double fx = origin_x / resolution;
    const double fy = origin_y / resolution;
    return std::abs(fx - std::llround(fx)) < 1e-6 && std::abs(fy - std::llround(fy)) < 1e-6;
  }
};

/// Snaps a robot-centred window of the given extent onto the cell lattice.
inline GridSpec snapped_window(double center_x, double center_y, double extent_x,
                               double extent_y, double resolution) {
  GridSpec spec;
  spec.resolution = resolution;
  spec.extent_x = std::llround(extent_x / resolution) * resolution;
  spec.extent_y = std::llround(extent_y / resolution) * resolution;
  spec.origin_x = std::round((center_x - 0.5 * spec.extent_x) / resolution) * resolution;
  spec.origin_y = std::round((center_y - 0.5 * spec.extent_y) / resolution) * resolution;
  return spec;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace ttmap
