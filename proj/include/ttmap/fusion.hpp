#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "ttmap/completion.hpp"

namespace ttmap {

/// Recursively fused cell: per-layer scalar Kalman states plus a log-odds
/// collision accumulator. update_count == 0 marks an unused slot.
struct FusedCell {
  double h_max = 0.0;
  double h_min = 0.0;
  double n_z = 0.0;
  double r_step = 0.0;
  double r_incl = 0.0;
  double var_hmax = 0.0;
  double var_hmin = 0.0;
  double var_nz = 0.0;
  double var_rstep = 0.0;
  double var_rincl = 0.0;
  double coll_logodds = 0.0;
  std::uint64_t update_count = 0;
  bool last_rejected = false;

  double collision_risk() const { return 1.0 - 1.0 / (1.0 + std::exp(coll_logodds)); }
};

struct CellKey {
  std::int64_t x = 0;
  std::int64_t y = 0;
  bool operator==(const CellKey&) const = default;
};

struct FusionParams {
  double tau_m = 3.0;        // Mahalanobis gate; infinity disables gating
  double process_var = 1e-4; // per layer, added at each accepted update
  double var_init = 0.04;    // lower bound for first-measurement variances
  double scale_h = 1.0;      // sigma_h -> height noise std
  double scale_o = 1.0;      // sigma_o -> risk/verticality noise std
  double sigma_min = 0.01;   // measurement noise std floor
  double logit_eps = 0.01;   // collision risk clamp before the logit
  int tile_size = 64;        // cells per tile edge
};

/// Scalar predict + correct step.
struct ScalarState {
  double mean = 0.0;
  double var = 0.0;
};
ScalarState kalman_update(ScalarState prior, double value, double noise_var,
                          double process_var);

/// Squared Mahalanobis deviation of the measured (n_z, r_step) pair from the
/// fused state, using the diagonal of the per-layer variances.
double mahalanobis_distance(double n_z_meas, double r_step_meas, const FusedCell& prior);

/// Adds one clamped collision-risk observation to the log-odds accumulator.
void logit_update_collision(FusedCell& cell, double r_coll, double eps);

/// World-anchored tile-sparse map of fused cells. Tiles are fixed-size
/// squares allocated on demand, so update cost stays flat as the explored
/// area grows.
class StaticTerrainMap {
 public:
  explicit StaticTerrainMap(double resolution = 0.1, int tile_size = 64);

  double resolution() const { return resolution_; }
  int tile_size() const { return tile_size_; }
  std::size_t cell_count() const { return cell_count_; }

  const FusedCell* find(CellKey key) const;
  FusedCell& get_or_create(CellKey key);

  /// Visits populated cells ordered by (y, x); deterministic regardless of
  /// insertion order.
  void for_each_sorted(const std::function<void(CellKey, const FusedCell&)>& fn) const;

  void note_created() { ++cell_count_; }

 private:
  struct TileKeyHash {
    std::size_t operator()(const CellKey& k) const {
      return std::hash<std::uint64_t>()(static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ull ^
                                        static_cast<std::uint64_t>(k.y));
    }
  };
  using Tile = std::vector<FusedCell>;

  double resolution_;
  int tile_size_;
  std::size_t cell_count_ = 0;
  std::unordered_map<CellKey, std::unique_ptr<Tile>, TileKeyHash> tiles_;
};

/// Snapshot cell: the exported layer tuple with the collision layer realized
/// from log-odds.
struct SnapshotCell {
  double h_max = 0.0;
  double h_min = 0.0;
  double n_z = 0.0;
  double r_step = 0.0;
  double r_incl = 0.0;
  double r_coll = 0.0;
  bool valid = false;
};

struct MapSnapshot {
  GridSpec spec;
  std::vector<SnapshotCell> cells;

  const SnapshotCell& at(int col, int row) const { return cells[spec.index(col, row)]; }
};

/// Gates each non-empty local cell against the fused prior and fuses the
/// accepted ones. Returns the rejected cell keys (outlier traces). New cells
/// initialize directly from the measurement and skip the gate.
std::vector<CellKey> gate_and_update(const LocalTerrainMap& local, StaticTerrainMap& map,
                                     const FusionParams& params = {});

/// Read-only extraction of the seven layers over a window.
MapSnapshot snapshot(const StaticTerrainMap& map, const GridSpec& window);

}  // namespace ttmap
