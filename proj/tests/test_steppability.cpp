#include <doctest.h>

#include "helpers.hpp"
#include "ttmap/steppability.hpp"

using namespace ttmap;
using namespace ttmap::test;

namespace {

Surfel make_surfel(const Vec3& p, const Vec3& n) {
  Surfel s;
  s.p = p;
  s.n = n.normalized();
  s.valid = true;
  return s;
}

}  // namespace

TEST_CASE("proximity is 1 for coplanar flat surfels") {
  const Surfel a = make_surfel({0, 0, 0}, {0, 0, 1});
  const Surfel b = make_surfel({0.1, 0, 0}, {0, 0, 1});
  CHECK(proximity(a, b) == doctest::Approx(1.0));
}

TEST_CASE("proximity is 0 across a step edge") {
  const Surfel a = make_surfel({0, 0, 0}, {0, 0, 1});
  const Surfel b = make_surfel({0, 0, 0.2}, {0, 0, 1});
  CHECK(proximity(a, b) == doctest::Approx(0.0));
}

TEST_CASE("orthogonal normals annihilate proximity") {
  const Surfel a = make_surfel({0, 0, 0}, {0, 0, 1});
  const Surfel b = make_surfel({0.1, 0, 0.1}, {1, 0, 0});
  CHECK(proximity(a, b) == doctest::Approx(0.0));
}

TEST_CASE("degenerate separation returns same-point continuity") {
  const Surfel a = make_surfel({1, 1, 1}, {0, 0, 1});
  const Surfel b = make_surfel({1, 1, 1 + 1e-12}, {0, 0, 1});
  CHECK(proximity(a, b) == 1.0);
}

TEST_CASE("literal proximity form is the complement of the default") {
  SplitMix64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Surfel a = make_surfel({rng.uniform(), rng.uniform(), rng.uniform()},
                                 {rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform()});
    const Surfel b = make_surfel({rng.uniform() + 1.0, rng.uniform(), rng.uniform()},
                                 {rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform()});
    const double alignment = std::abs(a.n.dot(b.n));
    CHECK(proximity(a, b) + proximity(a, b, true) == doctest::Approx(alignment));
  }
}

TEST_CASE("raw risk is 0 on a flat patch and 1 on a wall patch") {
  const SensorIntrinsics intr = patch_intrinsics(5, 5);
  SurfelMap flat = empty_surfel_map(intr);
  for (int v = 0; v < 5; ++v) {
    for (int u = 0; u < 5; ++u) {
      set_surfel(flat, u, v, Vec3(u * 0.1, v * 0.1, 0.0), Vec3(0, 0, 1));
    }
  }
  const RiskImage flat_risk = raw_steppability(flat);
  CHECK(flat_risk.is_valid(2, 2));
  CHECK(flat_risk.at(2, 2) == doctest::Approx(0.0));

  SurfelMap wall = empty_surfel_map(intr);
  for (int v = 0; v < 5; ++v) {
    for (int u = 0; u < 5; ++u) {
      set_surfel(wall, u, v, Vec3(2.0, u * 0.1, v * 0.1), Vec3(1, 0, 0));
    }
  }
  const RiskImage wall_risk = raw_steppability(wall);
  CHECK(wall_risk.is_valid(2, 2));
  CHECK(wall_risk.at(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("raw risk follows the verticality-proximity geometric mean") {
  // Center with n_z = 1 and neighbors placed so each pairwise proximity is
  // 0.25: offset fraction 0.75 along the shared normal.
  const SensorIntrinsics intr = patch_intrinsics(3, 3);
  SurfelMap map = empty_surfel_map(intr);
  set_surfel(map, 1, 1, Vec3(0, 0, 0), Vec3(0, 0, 1));
  const double d = 0.1;                     // horizontal offset
  const double z = 0.75 / std::sqrt(1 - 0.75 * 0.75) * d;  // |n.dp|/|dp| = 0.75
  set_surfel(map, 0, 1, Vec3(-d, 0, -z), Vec3(0, 0, 1));
  set_surfel(map, 2, 1, Vec3(d, 0, z), Vec3(0, 0, 1));
  const RiskImage risk = raw_steppability(map);
  REQUIRE(risk.is_valid(1, 1));
  // Independent scalar recomputation of the same windowed expression.
  const double p = 1.0 * (1.0 - 0.75);
  const double expected = 1.0 - std::sqrt(1.0 / 2.0 * (p + p));
  CHECK(risk.at(1, 1) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(risk.at(1, 1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("pixels with no valid neighbors are invalid in the raw risk") {
  const SensorIntrinsics intr = patch_intrinsics(5, 5);
  SurfelMap map = empty_surfel_map(intr);
  set_surfel(map, 2, 2, Vec3(0, 0, 0), Vec3(0, 0, 1));
  const RiskImage risk = raw_steppability(map);
  CHECK_FALSE(risk.is_valid(2, 2));
}

namespace {

RiskImage patch_risk(std::initializer_list<std::tuple<int, int, double>> cells) {
  RiskImage img;
  img.intrinsics = patch_intrinsics(5, 5);
  img.values.assign(25, 0.0);
  img.valid.assign(25, 0);
  for (const auto& [u, v, r] : cells) {
    img.values[v * 5 + u] = r;
    img.valid[v * 5 + u] = 1;
  }
  return img;
}

}  // namespace

TEST_CASE("conditional pooling picks the max branch above tau_r") {
  const RiskImage raw = patch_risk({{2, 2, 0.9}, {1, 2, 0.9}, {3, 2, 0.9}});
  const RiskImage pooled = conditional_pool(raw);
  CHECK(pooled.at(2, 2) == doctest::Approx(0.9));
}

TEST_CASE("conditional pooling keeps the mean below tau_r") {
  const RiskImage raw = patch_risk({{2, 2, 0.2}, {3, 2, 0.4}});
  const RiskImage pooled = conditional_pool(raw);
  CHECK(pooled.at(2, 2) == doctest::Approx(0.3));
}

TEST_CASE("conditional pooling jumps to the max once the mean crosses tau_r") {
  const RiskImage raw = patch_risk({{2, 2, 0.5}, {3, 2, 0.9}});
  const RiskImage pooled = conditional_pool(raw);
  CHECK(pooled.at(2, 2) == doctest::Approx(0.9));
}

TEST_CASE("pooling preserves invalid pixels and the [0,1] range") {
  SplitMix64 rng(11);
  RiskImage raw;
  raw.intrinsics = patch_intrinsics(9, 9);
  raw.values.assign(81, 0.0);
  raw.valid.assign(81, 0);
  for (int i = 0; i < 81; ++i) {
    if (rng.uniform() < 0.7) {
      raw.values[i] = rng.uniform();
      raw.valid[i] = 1;
    }
  }
  const RiskImage pooled = conditional_pool(raw);
  for (int i = 0; i < 81; ++i) {
    CHECK(pooled.valid[i] == raw.valid[i]);
    if (pooled.valid[i]) {
      CHECK(pooled.values[i] >= 0.0);
      CHECK(pooled.values[i] <= 1.0);
    }
  }
}

TEST_CASE("pooling branches stay within the window envelope") {
  SplitMix64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    RiskImage raw;
    raw.intrinsics = patch_intrinsics(5, 5);
    raw.values.assign(25, 0.0);
    raw.valid.assign(25, 1);
    for (int i = 0; i < 25; ++i) raw.values[i] = rng.uniform();
    const RiskImage pooled = conditional_pool(raw);
    for (int v = 1; v < 4; ++v) {
      for (int u = 1; u < 4; ++u) {
        double mx = 0.0, sum = 0.0;
        for (int dv = -1; dv <= 1; ++dv) {
          for (int du = -1; du <= 1; ++du) {
            const double r = raw.at(u + du, v + dv);
            mx = std::max(mx, r);
            sum += r;
          }
        }
        const double mean = sum / 9.0;
        if (mean > 0.6) {
          CHECK(pooled.at(u, v) == mx);  // max branch is exact
        } else {
          CHECK(pooled.at(u, v) <= mx + 1e-15);
          CHECK(pooled.at(u, v) == doctest::Approx(mean));
        }
      }
    }
  }
}

TEST_CASE("pooling is idempotent on constant regions") {
  RiskImage raw;
  raw.intrinsics = patch_intrinsics(7, 7);
  raw.values.assign(49, 0.37);
  raw.valid.assign(49, 1);
  const RiskImage pooled = conditional_pool(raw);
  for (int i = 0; i < 49; ++i) CHECK(pooled.values[i] == doctest::Approx(0.37));
}

TEST_CASE("raising one raw risk never lowers the pooled output") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    RiskImage raw;
    raw.intrinsics = patch_intrinsics(5, 5);
    raw.values.assign(25, 0.0);
    raw.valid.assign(25, 1);
    for (int i = 0; i < 25; ++i) raw.values[i] = rng.uniform();
    const RiskImage before = conditional_pool(raw);
    const int bump = static_cast<int>(rng.uniform() * 25);
    RiskImage raised = raw;
    raised.values[bump] = std::min(1.0, raw.values[bump] + rng.uniform() * (1.0 - raw.values[bump]));
    const RiskImage after = conditional_pool(raised);
    for (int i = 0; i < 25; ++i) {
      CHECK(after.values[i] >= before.values[i] - 1e-12);
    }
  }
}
