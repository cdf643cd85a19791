#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "ttmap/fusion.hpp"

using namespace ttmap;
using namespace ttmap::test;

namespace {

LocalTerrainMap one_cell_local(double h, double n_z, double r_step, double r_coll,
                               double sigma_o = 0.05, double sigma_h = 0.05) {
  LocalTerrainMap local;
  local.spec.resolution = 0.1;
  local.spec.extent_x = local.spec.extent_y = 0.1;
  local.cells.assign(1, LocalCell{});
  LocalCell& cell = local.cells[0];
  cell.h_max = h;
  cell.h_min = h;
  cell.n_z = n_z;
  cell.r_step = r_step;
  cell.r_coll = r_coll;
  cell.sigma_o = sigma_o;
  cell.sigma_h = sigma_h;
  cell.provenance = Provenance::Observed;
  return local;
}

bool cells_equal(const FusedCell& a, const FusedCell& b) {
  return a.h_max == b.h_max && a.h_min == b.h_min && a.n_z == b.n_z &&
         a.r_step == b.r_step && a.r_incl == b.r_incl && a.var_hmax == b.var_hmax &&
         a.var_hmin == b.var_hmin && a.var_nz == b.var_nz && a.var_rstep == b.var_rstep &&
         a.var_rincl == b.var_rincl && a.coll_logodds == b.coll_logodds &&
         a.update_count == b.update_count;
}

}  // namespace

TEST_CASE("mahalanobis distance: zero, diagonal quadratic form, gate") {
  FusedCell prior;
  prior.n_z = 1.0;
  prior.r_step = 0.0;
  prior.var_nz = 1.0;
  prior.var_rstep = 1.0;
  prior.update_count = 1;
  CHECK(mahalanobis_distance(1.0, 0.0, prior) == 0.0);
  CHECK(mahalanobis_distance(0.5, 0.5, prior) == doctest::Approx(0.5));
  CHECK(mahalanobis_distance(3.0, 0.0, prior) == doctest::Approx(4.0));
  CHECK(mahalanobis_distance(3.0, 0.0, prior) > 3.0);  // rejected at the static gate
}

TEST_CASE("kalman update: symmetric case, uninformative measurement, tight prior") {
  const ScalarState symmetric = kalman_update({0.0, 1.0}, 1.0, 1.0, 0.0);
  CHECK(symmetric.mean == doctest::Approx(0.5));
  CHECK(symmetric.var == doctest::Approx(0.5));

  const ScalarState ignored = kalman_update({0.3, 0.2}, 5.0, 1e18, 0.0);
  CHECK(ignored.mean == doctest::Approx(0.3).epsilon(1e-9));

  const ScalarState locked = kalman_update({0.0, 1e-6}, 1.0, 1.0, 0.0);
  CHECK(locked.mean == doctest::Approx(1e-6 / (1.0 + 1e-6)).epsilon(1e-6));
}

TEST_CASE("logit collision update accumulates evidence") {
  FusedCell cell;
  logit_update_collision(cell, 0.5, 0.01);
  CHECK(cell.coll_logodds == doctest::Approx(0.0));
  CHECK(cell.collision_risk() == doctest::Approx(0.5));

  FusedCell two;
  logit_update_collision(two, 0.73, 0.01);
  logit_update_collision(two, 0.73, 0.01);
  CHECK(two.coll_logodds == doctest::Approx(2.0 * std::log(0.73 / 0.27)).epsilon(1e-12));
  // Independent sigmoid evaluation.
  CHECK(two.collision_risk() ==
        doctest::Approx(1.0 - 1.0 / (1.0 + std::exp(2.0 * std::log(0.73 / 0.27))))
            .epsilon(1e-12));
  CHECK(two.collision_risk() == doctest::Approx(0.8796).epsilon(1e-3));

  FusedCell clamped;
  logit_update_collision(clamped, 1.0, 0.01);
  CHECK(clamped.coll_logodds == doctest::Approx(std::log(99.0)).epsilon(1e-12));
}

TEST_CASE("cold start initializes every cell without rejections") {
  StaticTerrainMap map(0.1, 16);
  LocalTerrainMap local;
  local.spec.resolution = 0.1;
  local.spec.extent_x = local.spec.extent_y = 0.5;
  local.cells.assign(25, LocalCell{});
  for (auto& cell : local.cells) {
    cell.h_max = cell.h_min = 0.2;
    cell.n_z = 1.0;
    cell.sigma_o = cell.sigma_h = 0.05;
    cell.provenance = Provenance::Observed;
  }
  const auto rejected = gate_and_update(local, map);
  CHECK(rejected.empty());
  CHECK(map.cell_count() == 25);
  const FusedCell* cell = map.find({2, 2});
  REQUIRE(cell != nullptr);
  CHECK(cell->h_max == 0.2);
  CHECK(cell->var_hmax == doctest::Approx(0.04));  // var_init dominates tiny noise
  CHECK(cell->update_count == 1);
}

TEST_CASE("edge-like dynamic measurements are rejected against a floor prior") {
  StaticTerrainMap map(0.1, 16);
  FusionParams params;
  params.tau_m = 1.0;  // dynamic setting
  const LocalTerrainMap floor = one_cell_local(0.0, 1.0, 0.0, 0.0);
  for (int i = 0; i < 10; ++i) gate_and_update(floor, map, params);
  const FusedCell before = *map.find({0, 0});

  const LocalTerrainMap box_edge = one_cell_local(0.4, 1.0, 0.95, 1.0);
  const auto rejected = gate_and_update(box_edge, map, params);
  REQUIRE(rejected.size() == 1);
  CHECK(rejected[0].x == 0);
  CHECK(rejected[0].y == 0);
  const FusedCell after = *map.find({0, 0});
  CHECK(cells_equal(before, after));  // rejected update leaves state bit-identical
  CHECK(after.last_rejected);
}

TEST_CASE("repeated identical measurements contract the variances") {
  StaticTerrainMap map(0.1, 16);
  FusionParams params;
  params.process_var = 0.0;
  const LocalTerrainMap meas = one_cell_local(0.3, 0.9, 0.1, 0.2);
  gate_and_update(meas, map, params);
  double last_var = map.find({0, 0})->var_hmax;
  for (int i = 0; i < 50; ++i) {
    const auto rejected = gate_and_update(meas, map, params);
    CHECK(rejected.empty());
    const double var = map.find({0, 0})->var_hmax;
    CHECK(var < last_var);
    last_var = var;
  }
  CHECK(last_var < 1e-4);
  CHECK(map.find({0, 0})->h_max == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("variance contraction and posterior betweenness over random cases") {
  SplitMix64 rng(53);
  for (int i = 0; i < 10000; ++i) {
    const double prior_mean = rng.uniform() * 4.0 - 2.0;
    const double prior_var = 1e-6 + rng.uniform();
    const double value = rng.uniform() * 4.0 - 2.0;
    const double noise = 1e-6 + rng.uniform();
    const ScalarState post = kalman_update({prior_mean, prior_var}, value, noise, 0.0);
    CHECK(post.var < prior_var);
    CHECK(post.var > 0.0);
    const double lo = std::min(prior_mean, value) - 1e-12;
    const double hi = std::max(prior_mean, value) + 1e-12;
    CHECK(post.mean >= lo);
    CHECK(post.mean <= hi);
  }
}

TEST_CASE("log-odds accumulation is permutation invariant") {
  SplitMix64 rng(59);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 50);
    std::vector<double> risks(n);
    for (auto& r : risks) r = rng.uniform();
    FusedCell forward;
    for (double r : risks) logit_update_collision(forward, r, 0.01);
    std::vector<double> shuffled = risks;
    for (int i = n - 1; i > 0; --i) {
      std::swap(shuffled[i], shuffled[static_cast<int>(rng.uniform() * (i + 1))]);
    }
    FusedCell backward;
    for (double r : shuffled) logit_update_collision(backward, r, 0.01);
    CHECK(std::abs(forward.coll_logodds - backward.coll_logodds) < 1e-9);
    CHECK(std::abs(forward.collision_risk() - backward.collision_risk()) < 1e-9);
  }
}

TEST_CASE("h_min never ends above h_max after fusion") {
  SplitMix64 rng(61);
  StaticTerrainMap map(0.1, 16);
  FusionParams params;
  params.tau_m = 1e9;
  for (int i = 0; i < 500; ++i) {
    LocalTerrainMap local = one_cell_local(rng.uniform(), rng.uniform(), rng.uniform() * 0.3,
                                           rng.uniform(), 0.02 + rng.uniform() * 0.5,
                                           0.02 + rng.uniform() * 0.5);
    local.cells[0].h_min = local.cells[0].h_max - rng.uniform();
    gate_and_update(local, map, params);
    const FusedCell* cell = map.find({0, 0});
    CHECK(cell->h_min <= cell->h_max);
  }
}

TEST_CASE("lattice misalignment is a hard error") {
  StaticTerrainMap map(0.1, 16);
  LocalTerrainMap local = one_cell_local(0.0, 1.0, 0.0, 0.0);
  local.spec.origin_x = 0.03;  // off the 0.1 m lattice
  CHECK_THROWS(gate_and_update(local, map));
  LocalTerrainMap wrong_res = one_cell_local(0.0, 1.0, 0.0, 0.0);
  wrong_res.spec.resolution = 0.2;
  CHECK_THROWS(gate_and_update(wrong_res, map));
}

TEST_CASE("snapshot reads back the fused layers over a window") {
  StaticTerrainMap map(0.1, 16);
  LocalTerrainMap local;
  local.spec.resolution = 0.1;
  local.spec.extent_x = local.spec.extent_y = 0.3;
  local.spec.origin_x = local.spec.origin_y = -0.1;
  local.cells.assign(9, LocalCell{});
  for (int i = 0; i < 9; ++i) {
    local.cells[i].h_max = 0.1 * i;
    local.cells[i].h_min = 0.1 * i - 0.05;
    local.cells[i].n_z = 1.0;
    local.cells[i].r_coll = 0.5;
    local.cells[i].sigma_o = local.cells[i].sigma_h = 0.05;
    local.cells[i].provenance = Provenance::Observed;
  }
  gate_and_update(local, map);
  const MapSnapshot snap = snapshot(map, local.spec);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      const FusedCell* cell = map.find({local.spec.lattice_x() + col,
                                        local.spec.lattice_y() + row});
      REQUIRE(cell != nullptr);
      CHECK(snap.at(col, row).valid);
      CHECK(snap.at(col, row).h_max == cell->h_max);
      CHECK(snap.at(col, row).r_coll == cell->collision_risk());
    }
  }
  // Out-of-window cells read back invalid.
  GridSpec away = local.spec;
  away.origin_x += 10.0;
  const MapSnapshot empty_snap = snapshot(map, away);
  for (const auto& cell : empty_snap.cells) CHECK_FALSE(cell.valid);
}

TEST_CASE("tile map stores negative and far-apart cells without aliasing") {
  StaticTerrainMap map(0.1, 16);
  const std::vector<CellKey> keys = {{-1, -1}, {-17, 5}, {1000, -1000}, {0, 0}, {15, 16}};
  for (std::size_t i = 0; i < keys.size(); ++i) {
    FusedCell& cell = map.get_or_create(keys[i]);
    cell.h_max = static_cast<double>(i);
    cell.update_count = 1;
    map.note_created();
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const FusedCell* cell = map.find(keys[i]);
    REQUIRE(cell != nullptr);
    CHECK(cell->h_max == static_cast<double>(i));
  }
  std::vector<CellKey> visited;
  map.for_each_sorted([&](CellKey key, const FusedCell&) { visited.push_back(key); });
  CHECK(visited.size() == keys.size());
  for (std::size_t i = 1; i < visited.size(); ++i) {
    const bool ordered = visited[i - 1].y < visited[i].y ||
                         (visited[i - 1].y == visited[i].y && visited[i - 1].x < visited[i].x);
    CHECK(ordered);
  }
}
