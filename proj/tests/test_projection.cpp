#include <doctest.h>

#include <numbers>

#include "helpers.hpp"
#include "ttmap/projection.hpp"

using namespace ttmap;
using ttmap::test::default_intrinsics;

namespace {

// Scalar re-evaluation of the projection formula, kept independent of the
// library path.
std::pair<double, double> brute_uv(const Vec3& q, const SensorIntrinsics& intr) {
  const double az = std::atan2(q.y(), q.x());
  const double el = std::asin(q.z() / q.norm());
  const double u = intr.width * (1.0 - (az + intr.fov_right) / (intr.fov_left + intr.fov_right));
  const double v =
      intr.height * (1.0 - (el + intr.fov_down) / (intr.fov_up + intr.fov_down));
  return {u, v};
}

// Scan that fills a pixel band by shooting one point along each pixel-center
// ray onto the given analytic surface.
template <typename SurfaceRange>
RangeScan synth_scan(const SensorIntrinsics& intr, SurfaceRange&& range_of) {
  RangeScan scan;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const double az =
          (1.0 - (u + 0.5) / intr.width) * (intr.fov_left + intr.fov_right) - intr.fov_right;
      const double el =
          (1.0 - (v + 0.5) / intr.height) * (intr.fov_up + intr.fov_down) - intr.fov_down;
      const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const double t = range_of(dir);
      if (t > 0.0 && std::isfinite(t)) scan.points.push_back(dir * t);
    }
  }
  return scan;
}

}  // namespace

TEST_CASE("project_point maps the forward axis to the raster center") {
  const auto px = project_point(Vec3(1, 0, 0), default_intrinsics());
  REQUIRE(px.has_value());
  CHECK(px->u == 180);
  CHECK(px->v == 32);
}

TEST_CASE("project_point matches the scalar evaluator on the +y axis") {
  const SensorIntrinsics intr = default_intrinsics();
  const auto px = project_point(Vec3(0, 1, 0), intr);
  REQUIRE(px.has_value());
  CHECK(px->u == 90);
  const auto [bu, bv] = brute_uv(Vec3(0, 1, 0), intr);
  CHECK(px->u == static_cast<int>(std::floor(bu)));
  CHECK(px->v == static_cast<int>(std::floor(bv)));
}

TEST_CASE("project_point accepts the exact top-of-FoV boundary") {
  // elevation asin(1/sqrt(2)) = pi/4 = fov_up -> continuous v = 0.
  const auto px = project_point(Vec3(1, 0, 1), default_intrinsics());
  REQUIRE(px.has_value());
  CHECK(px->v == 0);
  // Slightly above the FoV must be rejected, not clamped.
  CHECK_FALSE(project_point(Vec3(1, 0, 1.2), default_intrinsics()).has_value());
}

TEST_CASE("project_point is total over random points") {
  const SensorIntrinsics intr = default_intrinsics();
  SplitMix64 rng(7);
  for (int i = 0; i < 20000; ++i) {
    const Vec3 q(rng.uniform() * 20 - 10, rng.uniform() * 20 - 10, rng.uniform() * 20 - 10);
    if (q.norm() == 0.0) continue;
    const auto px = project_point(q, intr);
    if (px) {
      CHECK(px->u >= 0);
      CHECK(px->u < intr.width);
      CHECK(px->v >= 0);
      CHECK(px->v < intr.height);
    }
  }
}

TEST_CASE("azimuths at +pi and just below -pi land on adjacent edge columns") {
  const SensorIntrinsics intr = default_intrinsics();
  const auto at_pi = project_point(Vec3(-1, 1e-12, 0), intr);   // az -> +pi
  const auto below = project_point(Vec3(-1, -1e-12, 0), intr);  // az -> -pi
  REQUIRE(at_pi.has_value());
  REQUIRE(below.has_value());
  CHECK(at_pi->u == 0);
  CHECK(below->u == intr.width - 1);
}

TEST_CASE("planar scan yields upward unit normals everywhere") {
  SensorIntrinsics intr = default_intrinsics();
  intr.width = 90;
  intr.height = 24;
  intr.fov_up = 0.05;
  intr.fov_down = 0.9;
  // Sensor 1 m above the plane z = -1 (sensor frame).
  const RangeScan scan = synth_scan(intr, [](const Vec3& dir) {
    return dir.z() < -1e-3 ? -1.0 / dir.z() : -1.0;
  });
  const SurfelMap map = build_surfel_map(scan, intr);
  int valid = 0;
  for (const Surfel& s : map.cells) {
    if (!s.valid) continue;
    ++valid;
    CHECK(std::abs(s.n.norm() - 1.0) < 1e-6);
    CHECK(s.n.z() >= 0.0);
    CHECK((s.n - Vec3(0, 0, 1)).norm() < 1e-6);
  }
  CHECK(valid > 1000);
}

TEST_CASE("vertical wall scan yields horizontal normals") {
  SensorIntrinsics intr = default_intrinsics();
  intr.width = 90;
  intr.height = 24;
  // Wall at x = 2 (sensor frame), visible in a frontal cone.
  const RangeScan scan = synth_scan(intr, [](const Vec3& dir) {
    if (dir.x() < 0.3) return -1.0;
    return 2.0 / dir.x();
  });
  const SurfelMap map = build_surfel_map(scan, intr);
  int valid = 0;
  for (const Surfel& s : map.cells) {
    if (!s.valid) continue;
    ++valid;
    CHECK(std::abs(s.n.z()) <= 0.05);
  }
  CHECK(valid > 200);
}

TEST_CASE("isolated points have no PCA support and stay invalid") {
  const SensorIntrinsics intr = default_intrinsics();
  RangeScan scan;
  scan.points.push_back(Vec3(5, 0, 0));
  const SurfelMap map = build_surfel_map(scan, intr);
  for (const Surfel& s : map.cells) CHECK_FALSE(s.valid);
}

TEST_CASE("nearest-range point wins a shared pixel") {
  const SensorIntrinsics intr = default_intrinsics();
  RangeScan scan;
  scan.points.push_back(Vec3(8, 0, 0));
  scan.points.push_back(Vec3(4, 0, 0));  // nearer, same pixel
  // Neighbors so the pixel stays valid.
  scan.points.push_back(Vec3(4, 0.08, 0));
  scan.points.push_back(Vec3(4, -0.08, 0));
  scan.points.push_back(Vec3(4, 0, 0.08));
  const SurfelMap map = build_surfel_map(scan, intr);
  const auto px = project_point(Vec3(4, 0, 0), intr);
  REQUIRE(px.has_value());
  CHECK(map.at(px->u, px->v).p.x() == doctest::Approx(4.0));
}

TEST_CASE("min_range filter drops self-hits") {
  const SensorIntrinsics intr = default_intrinsics();
  RangeScan scan;
  scan.points.push_back(Vec3(0.1, 0, 0));
  scan.points.push_back(Vec3(0.15, 0.01, 0));
  scan.points.push_back(Vec3(0.1, 0, 0.01));
  const SurfelMap map = build_surfel_map(scan, intr);
  for (const Surfel& s : map.cells) CHECK_FALSE(s.valid);
}

TEST_CASE("max_range_per_column tracks the farthest valid surfel") {
  SensorIntrinsics intr = default_intrinsics();
  intr.width = 90;
  intr.height = 24;
  intr.fov_up = 0.05;
  intr.fov_down = 0.9;
  const RangeScan scan = synth_scan(intr, [](const Vec3& dir) {
    return dir.z() < -1e-3 ? -1.0 / dir.z() : -1.0;
  });
  const SurfelMap map = build_surfel_map(scan, intr);
  for (int u = 0; u < intr.width; ++u) {
    double expected = 0.0;
    for (int v = 0; v < intr.height; ++v) {
      if (map.at(u, v).valid) expected = std::max(expected, map.at(u, v).p.norm());
    }
    CHECK(map.max_range_per_column[u] == expected);
  }
}

TEST_CASE("surfel map construction is deterministic across thread counts") {
  SensorIntrinsics intr = default_intrinsics();
  intr.width = 120;
  intr.height = 32;
  intr.fov_down = 0.8;
  const RangeScan scan = synth_scan(intr, [](const Vec3& dir) {
    return dir.z() < -1e-3 ? -1.2 / dir.z() : -1.0;
  });
  const SurfelMap a = build_surfel_map(scan, intr, {}, 1);
  const SurfelMap b = build_surfel_map(scan, intr, {}, 7);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].valid == b.cells[i].valid);
    CHECK(a.cells[i].p == b.cells[i].p);
    CHECK(a.cells[i].n == b.cells[i].n);
  }
  CHECK(a.max_range_per_column == b.max_range_per_column);
}
