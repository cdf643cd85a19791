#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ttmap/sensor.hpp"

namespace ttmap {

struct BoxPrim {
  Vec3 center = Vec3::Zero();  // geometric center; z spans center +- extents/2
  Vec3 extents = Vec3::Ones(); // full side lengths
  double yaw = 0.0;
};

struct RampPrim {
  Vec3 origin = Vec3::Zero();  // low corner; rises along local +x
  double length = 1.0;
  double width = 1.0;
  double slope = 0.5;          // rise per metre of run
  double yaw = 0.0;
};

struct StairsPrim {
  Vec3 origin = Vec3::Zero();  // front-bottom corner of the first step
  double rise = 0.2;
  double run = 0.3;
  int count = 4;
  double width = 1.0;
  double yaw = 0.0;
};

struct PlanePrim {
  double z = 0.0;
  double min_x = -10.0, min_y = -10.0, max_x = 10.0, max_y = 10.0;
};

struct TimedPoint {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

/// Dynamic actor: a box whose center follows the waypoint polyline.
struct Actor {
  BoxPrim box;
  std::vector<TimedPoint> waypoints;

  Vec3 center_at(double time) const;
};

/// Sensor trajectory: piecewise-linear position and yaw over waypoints,
/// sampled at scan_count evenly spaced times.
struct Trajectory {
  std::vector<TimedPoint> waypoints;
  int scan_count = 1;

  Pose pose_at(double time) const;
  std::vector<double> scan_times() const;
};

struct Scene {
  std::vector<PlanePrim> planes;
  std::vector<BoxPrim> boxes;
  std::vector<RampPrim> ramps;
  std::vector<StairsPrim> stairs;
  std::vector<Actor> actors;
  Trajectory trajectory;
  // Optional explicit ground-truth window [min_x, min_y, max_x, max_y].
  std::optional<std::array<double, 4>> gt_region;
};

struct GroundTruthGrid {
  GridSpec spec;
  std::vector<double> h_max;        // NaN-free; has_height marks coverage
  std::vector<std::uint8_t> has_height;
  std::vector<std::uint8_t> collision;

  bool covered(int col, int row) const { return has_height[spec.index(col, row)] != 0; }
  bool is_collision(int col, int row) const { return collision[spec.index(col, row)] != 0; }
  double height(int col, int row) const { return h_max[spec.index(col, row)]; }
};

struct SimParams {
  double noise_sigma = 0.01;  // range noise std, metres
  int gt_subsamples = 4;      // per-cell sampling density per axis
  int gt_adjacency = 8;       // 8- or 4-neighborhood for the collision rule
};

/// Casts one ray per raster pixel (through the pixel center) against the
/// static primitives plus the actors at their time-interpolated positions.
/// Per-pixel counter-based RNG keyed by (seed, scan_index, pixel) keeps the
/// result bit-identical under any parallel schedule. Misses are omitted.
RangeScan raycast_scan(const Scene& scene, const Pose& pose, const SensorIntrinsics& intr,
                       double time, double noise_sigma, std::uint64_t seed,
                       std::uint64_t scan_index, int threads = 1);

/// Analytic top height of the static geometry at a point, if any surface
/// covers it.
std::optional<double> static_top_height(const Scene& scene, double x, double y);

/// Static ground truth: per-cell maximum analytic height (dense subsampling)
/// and the adjacency collision rule |dh| > tau_h.
GroundTruthGrid ground_truth(const Scene& scene, const GridSpec& spec, double tau_h,
                             int subsamples = 4, int adjacency = 8);

/// Parses the documented scene JSON.
Scene load_scene(const std::string& json_text);
Scene load_scene_file(const std::string& path);

}  // namespace ttmap
