#include "ttmap/sim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ttmap/parallel.hpp"
#include "ttmap/rng.hpp"

namespace ttmap {

namespace {

using json = nlohmann::json;

struct Frame2D {
  double cos_yaw = 1.0;
  double sin_yaw = 0.0;
  Vec3 origin = Vec3::Zero();

  Vec3 to_local(const Vec3& p) const {
    const Vec3 d = p - origin;
    return {cos_yaw * d.x() + sin_yaw * d.y(), -sin_yaw * d.x() + cos_yaw * d.y(), d.z()};
  }
  Vec3 dir_to_local(const Vec3& d) const {
    return {cos_yaw * d.x() + sin_yaw * d.y(), -sin_yaw * d.x() + cos_yaw * d.y(), d.z()};
  }
};

Frame2D make_frame(const Vec3& origin, double yaw) {
  return Frame2D{std::cos(yaw), std::sin(yaw), origin};
}

// Clips the ray o + t*d against an axis-aligned box in local coordinates and
// returns the entering parameter, if the ray hits from outside.
std::optional<double> ray_aabb(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (o[axis] < lo[axis] || o[axis] > hi[axis]) return std::nullopt;
      continue;
    }
    double t0 = (lo[axis] - o[axis]) / d[axis];
    double t1 = (hi[axis] - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return std::nullopt;
  }
  if (t_exit < 0.0 || t_enter <= 0.0) return std::nullopt;
  return t_enter;
}

std::optional<double> hit_box(const BoxPrim& box, const Vec3& center, const Vec3& o,
                              const Vec3& d) {
  const Frame2D frame = make_frame(center, box.yaw);
  const Vec3 lo_pt = frame.to_local(o);
  const Vec3 lo_dir = frame.dir_to_local(d);
  const Vec3 half = 0.5 * box.extents;
  return ray_aabb(lo_pt, lo_dir, -half, half);
}

// Halfspace n . p <= c.
struct HalfSpace {
  Vec3 n;
  double c;
};

std::optional<double> ray_polytope(const Vec3& o, const Vec3& d,
                                   const std::vector<HalfSpace>& faces) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (const HalfSpace& f : faces) {
    const double denom = f.n.dot(d);
    const double num = f.c - f.n.dot(o);
    if (denom == 0.0) {
      if (num < 0.0) return std::nullopt;
      continue;
    }
    const double t = num / denom;
    if (denom > 0.0) {
      t_exit = std::min(t_exit, t);
    } else {
      t_enter = std::max(t_enter, t);
    }
    if (t_enter > t_exit) return std::nullopt;
  }
  if (t_exit < 0.0 || t_enter <= 0.0) return std::nullopt;
  return t_enter;
}

std::optional<double> hit_ramp(const RampPrim& ramp, const Vec3& o, const Vec3& d) {
  const Frame2D frame = make_frame(ramp.origin, ramp.yaw);
  const Vec3 lp = frame.to_local(o);
  const Vec3 ld = frame.dir_to_local(d);
  const std::vector<HalfSpace> faces = {
      {{-1.0, 0.0, 0.0}, 0.0},          // x >= 0
      {{1.0, 0.0, 0.0}, ramp.length},   // x <= length
      {{0.0, -1.0, 0.0}, 0.0},          // y >= 0
      {{0.0, 1.0, 0.0}, ramp.width},    // y <= width
      {{0.0, 0.0, -1.0}, 0.0},          // z >= 0
      {{-ramp.slope, 0.0, 1.0}, 0.0},   // z <= slope * x
  };
  return ray_polytope(lp, ld, faces);
}

std::optional<double> hit_stairs(const StairsPrim& stairs, const Vec3& o, const Vec3& d) {
  const Frame2D frame = make_frame(stairs.origin, stairs.yaw);
  const Vec3 lp = frame.to_local(o);
  const Vec3 ld = frame.dir_to_local(d);
  std::optional<double> best;
  for (int i = 0; i < stairs.count; ++i) {
    const Vec3 lo(i * stairs.run, 0.0, 0.0);
    const Vec3 hi((i + 1) * stairs.run, stairs.width, (i + 1) * stairs.rise);
    const auto t = ray_aabb(lp, ld, lo, hi);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

std::optional<double> hit_plane(const PlanePrim& plane, const Vec3& o, const Vec3& d) {
  const std::vector<HalfSpace> faces = {
      {{0.0, 0.0, 1.0}, plane.z},
      {{-1.0, 0.0, 0.0}, -plane.min_x},
      {{1.0, 0.0, 0.0}, plane.max_x},
      {{0.0, -1.0, 0.0}, -plane.min_y},
      {{0.0, 1.0, 0.0}, plane.max_y},
  };
  return ray_polytope(o, d, faces);
}

Vec3 lerp(const Vec3& a, const Vec3& b, double s) { return a + s * (b - a); }

}  // namespace

Vec3 Actor::center_at(double time) const {
  if (waypoints.empty()) return box.center;
  if (time <= waypoints.front().time) return waypoints.front().position;
  if (time >= waypoints.back().time) return waypoints.back().position;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (time <= waypoints[i].time) {
      const auto& a = waypoints[i - 1];
      const auto& b = waypoints[i];
      const double span = b.time - a.time;
      const double s = span > 0.0 ? (time - a.time) / span : 1.0;
      return lerp(a.position, b.position, s);
    }
  }
  return waypoints.back().position;
}

Pose Trajectory::pose_at(double time) const {
  if (waypoints.empty()) return Pose{};
  TimedPoint state = waypoints.front();
  if (time >= waypoints.back().time) {
    state = waypoints.back();
  } else if (time > waypoints.front().time) {
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      if (time <= waypoints[i].time) {
        const auto& a = waypoints[i - 1];
        const auto& b = waypoints[i];
        const double span = b.time - a.time;
        const double s = span > 0.0 ? (time - a.time) / span : 1.0;
        state.position = lerp(a.position, b.position, s);
        state.yaw = a.yaw + s * (b.yaw - a.yaw);
        break;
      }
    }
  }
  Pose pose;
  pose.translation = state.position;
  pose.rotation = Eigen::AngleAxisd(state.yaw, Vec3::UnitZ()).toRotationMatrix();
  return pose;
}

std::vector<double> Trajectory::scan_times() const {
  std::vector<double> times;
  if (waypoints.empty() || scan_count <= 0) return times;
  const double t0 = waypoints.front().time;
  const double t1 = waypoints.back().time;
  times.reserve(scan_count);
  for (int i = 0; i < scan_count; ++i) {
    const double s = scan_count > 1 ? static_cast<double>(i) / (scan_count - 1) : 0.0;
    times.push_back(t0 + s * (t1 - t0));
  }
  return times;
}

RangeScan raycast_scan(const Scene& scene, const Pose& pose, const SensorIntrinsics& intr,
                       double time, double noise_sigma, std::uint64_t seed,
                       std::uint64_t scan_index, int threads) {
  const int w = intr.width;
  const int h = intr.height;
  const std::size_t pixels = static_cast<std::size_t>(w) * h;

  std::vector<Vec3> actor_centers(scene.actors.size());
  for (std::size_t i = 0; i < scene.actors.size(); ++i) {
    actor_centers[i] = scene.actors[i].center_at(time);
  }

  std::vector<Vec3> hits(pixels, Vec3::Zero());
  std::vector<std::uint8_t> hit_mask(pixels, 0);

  parallel_for(pixels, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const int v = static_cast<int>(idx) / w;
      const int u = static_cast<int>(idx) % w;
      const double azimuth =
          (1.0 - (u + 0.5) / w) * (intr.fov_left + intr.fov_right) - intr.fov_right;
      const double elevation =
          (1.0 - (v + 0.5) / h) * (intr.fov_up + intr.fov_down) - intr.fov_down;
      const Vec3 dir_sensor(std::cos(elevation) * std::cos(azimuth),
                            std::cos(elevation) * std::sin(azimuth), std::sin(elevation));
      const Vec3 dir_world = pose.rotate(dir_sensor);
      const Vec3& origin = pose.translation;

      double best = std::numeric_limits<double>::infinity();
      for (const auto& plane : scene.planes) {
        if (const auto t = hit_plane(plane, origin, dir_world)) best = std::min(best, *t);
      }
      for (const auto& box : scene.boxes) {
        if (const auto t = hit_box(box, box.center, origin, dir_world)) {
          best = std::min(best, *t);
        }
      }
      for (const auto& ramp : scene.ramps) {
        if (const auto t = hit_ramp(ramp, origin, dir_world)) best = std::min(best, *t);
      }
      for (const auto& st : scene.stairs) {
        if (const auto t = hit_stairs(st, origin, dir_world)) best = std::min(best, *t);
      }
      for (std::size_t a = 0; a < scene.actors.size(); ++a) {
        if (const auto t =
                hit_box(scene.actors[a].box, actor_centers[a], origin, dir_world)) {
          best = std::min(best, *t);
        }
      }
      if (!std::isfinite(best)) continue;

      double range = best;
      if (noise_sigma > 0.0) {
        SplitMix64 rng = SplitMix64::keyed(seed, scan_index, idx);
        range += noise_sigma * rng.gaussian();
      }
      if (range <= 0.0) continue;
      hits[idx] = dir_sensor * range;
      hit_mask[idx] = 1;
    }
  });

  RangeScan scan;
  scan.timestamp = static_cast<std::int64_t>(scan_index);
  scan.points.reserve(pixels);
  for (std::size_t idx = 0; idx < pixels; ++idx) {
    if (hit_mask[idx]) scan.points.push_back(hits[idx]);
  }
  return scan;
}

std::optional<double> static_top_height(const Scene& scene, double x, double y) {
  std::optional<double> top;
  const auto consider = [&top](double z) {
    if (!top || z > *top) top = z;
  };
  for (const auto& plane : scene.planes) {
    if (x >= plane.min_x && x <= plane.max_x && y >= plane.min_y && y <= plane.max_y) {
      consider(plane.z);
    }
  }
  for (const auto& box : scene.boxes) {
    const Frame2D frame = make_frame(box.center, box.yaw);
    const Vec3 local = frame.to_local(Vec3(x, y, box.center.z()));
    if (std::abs(local.x()) <= 0.5 * box.extents.x() &&
        std::abs(local.y()) <= 0.5 * box.extents.y()) {
      consider(box.center.z() + 0.5 * box.extents.z());
    }
  }
  for (const auto& ramp : scene.ramps) {
    const Frame2D frame = make_frame(ramp.origin, ramp.yaw);
    const Vec3 local = frame.to_local(Vec3(x, y, ramp.origin.z()));
    if (local.x() >= 0.0 && local.x() <= ramp.length && local.y() >= 0.0 &&
        local.y() <= ramp.width) {
      consider(ramp.origin.z() + ramp.slope * local.x());
    }
  }
  for (const auto& st : scene.stairs) {
    const Frame2D frame = make_frame(st.origin, st.yaw);
    const Vec3 local = frame.to_local(Vec3(x, y, st.origin.z()));
    if (local.x() >= 0.0 && local.x() <= st.count * st.run && local.y() >= 0.0 &&
        local.y() <= st.width) {
      int step = static_cast<int>(std::floor(local.x() / st.run));
      step = std::clamp(step, 0, st.count - 1);
      consider(st.origin.z() + (step + 1) * st.rise);
    }
  }
  return top;
}

GroundTruthGrid ground_truth(const Scene& scene, const GridSpec& spec, double tau_h,
                             int subsamples, int adjacency) {
  if (subsamples < 1) throw std::invalid_argument("ground_truth: subsamples must be >= 1");
  GroundTruthGrid gt;
  gt.spec = spec;
  gt.h_max.assign(spec.cell_count(), 0.0);
  gt.has_height.assign(spec.cell_count(), 0);
  gt.collision.assign(spec.cell_count(), 0);

  for (int row = 0; row < spec.rows(); ++row) {
    for (int col = 0; col < spec.cols(); ++col) {
      double top = -std::numeric_limits<double>::infinity();
      bool covered = false;
      for (int sy = 0; sy < subsamples; ++sy) {
        for (int sx = 0; sx < subsamples; ++sx) {
          const double x = spec.origin_x + (col + (sx + 0.5) / subsamples) * spec.resolution;
          const double y = spec.origin_y + (row + (sy + 0.5) / subsamples) * spec.resolution;
          if (const auto z = static_top_height(scene, x, y)) {
            covered = true;
            top = std::max(top, *z);
          }
        }
      }
      if (covered) {
        gt.h_max[spec.index(col, row)] = top;
        gt.has_height[spec.index(col, row)] = 1;
      }
    }
  }

  const bool diagonal = adjacency == 8;
  for (int row = 0; row < spec.rows(); ++row) {
    for (int col = 0; col < spec.cols(); ++col) {
      if (!gt.covered(col, row)) continue;
      const double h0 = gt.height(col, row);
      bool hit = false;
      for (int dr = -1; dr <= 1 && !hit; ++dr) {
        for (int dc = -1; dc <= 1 && !hit; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (!diagonal && dr != 0 && dc != 0) continue;
          const int c = col + dc;
          const int r = row + dr;
          if (!spec.contains(c, r) || !gt.covered(c, r)) continue;
          if (std::abs(h0 - gt.height(c, r)) > tau_h) hit = true;
        }
      }
      gt.collision[spec.index(col, row)] = hit ? 1 : 0;
    }
  }
  return gt;
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&key](const char* k) {
          return key == k;
        }) == allowed.end()) {
      throw std::runtime_error("scene: unknown key '" + key + "' in " + context);
    }
  }
}

Vec3 parse_vec3(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error("scene: " + context + " must be an array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

TimedPoint parse_waypoint(const json& j, const std::string& context) {
  check_keys(j, {"t", "pos", "yaw"}, context);
  TimedPoint wp;
  wp.time = j.at("t").get<double>();
  wp.position = parse_vec3(j.at("pos"), context + ".pos");
  wp.yaw = j.value("yaw", 0.0);
  return wp;
}

BoxPrim parse_box(const json& j, const std::string& context) {
  check_keys(j, {"center", "extents", "yaw"}, context);
  BoxPrim box;
  box.center = parse_vec3(j.at("center"), context + ".center");
  box.extents = parse_vec3(j.at("extents"), context + ".extents");
  box.yaw = j.value("yaw", 0.0);
  return box;
}

}  // namespace

Scene load_scene(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scene: invalid JSON: ") + e.what());
  }
  check_keys(j, {"planes", "boxes", "ramps", "stairs", "actors", "trajectory", "gt_region"},
             "scene");
  Scene scene;
  for (const auto& p : j.value("planes", json::array())) {
    check_keys(p, {"z", "extent"}, "plane");
    PlanePrim plane;
    plane.z = p.at("z").get<double>();
    const auto& e = p.at("extent");
    if (!e.is_array() || e.size() != 4) {
      throw std::runtime_error("scene: plane extent must be [min_x, min_y, max_x, max_y]");
    }
    plane.min_x = e[0].get<double>();
    plane.min_y = e[1].get<double>();
    plane.max_x = e[2].get<double>();
    plane.max_y = e[3].get<double>();
    scene.planes.push_back(plane);
  }
  for (const auto& b : j.value("boxes", json::array())) {
    scene.boxes.push_back(parse_box(b, "box"));
  }
  for (const auto& r : j.value("ramps", json::array())) {
    check_keys(r, {"origin", "length", "width", "slope", "yaw"}, "ramp");
    RampPrim ramp;
    ramp.origin = parse_vec3(r.at("origin"), "ramp.origin");
    ramp.length = r.at("length").get<double>();
    ramp.width = r.at("width").get<double>();
    ramp.slope = r.at("slope").get<double>();
    ramp.yaw = r.value("yaw", 0.0);
    scene.ramps.push_back(ramp);
  }
  for (const auto& s : j.value("stairs", json::array())) {
    check_keys(s, {"origin", "rise", "run", "count", "width", "yaw"}, "stairs");
    StairsPrim st;
    st.origin = parse_vec3(s.at("origin"), "stairs.origin");
    st.rise = s.at("rise").get<double>();
    st.run = s.at("run").get<double>();
    st.count = s.at("count").get<int>();
    st.width = s.at("width").get<double>();
    st.yaw = s.value("yaw", 0.0);
    scene.stairs.push_back(st);
  }
  for (const auto& a : j.value("actors", json::array())) {
    check_keys(a, {"box", "waypoints"}, "actor");
    Actor actor;
    actor.box = parse_box(a.at("box"), "actor.box");
    for (const auto& wp : a.value("waypoints", json::array())) {
      actor.waypoints.push_back(parse_waypoint(wp, "actor.waypoint"));
    }
    scene.actors.push_back(actor);
  }
  if (j.contains("trajectory")) {
    const auto& t = j.at("trajectory");
    check_keys(t, {"waypoints", "scan_count"}, "trajectory");
    for (const auto& wp : t.value("waypoints", json::array())) {
      scene.trajectory.waypoints.push_back(parse_waypoint(wp, "trajectory.waypoint"));
    }
    scene.trajectory.scan_count = t.value("scan_count", 1);
  }
  if (j.contains("gt_region")) {
    const auto& g = j.at("gt_region");
    if (!g.is_array() || g.size() != 4) {
      throw std::runtime_error("scene: gt_region must be [min_x, min_y, max_x, max_y]");
    }
    scene.gt_region = {{g[0].get<double>(), g[1].get<double>(), g[2].get<double>(),
                        g[3].get<double>()}};
  }
  return scene;
}

Scene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scene: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_scene(buffer.str());
}

}  // namespace ttmap
