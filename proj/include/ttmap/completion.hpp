#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttmap/reprojection.hpp"

namespace ttmap {

enum class Provenance : std::uint8_t { Empty = 0, Observed = 1, Inferred = 2 };

enum class InclNorm : std::uint8_t { TwoPi = 0, HalfPi = 1 };

/// Completed local cell: height bounds, verticality, the three risk layers
/// and the two inference-uncertainty biases reused downstream as measurement
/// noise.
struct LocalCell {
  double h_max = 0.0;
  double h_min = 0.0;
  double n_z = 0.0;
  double r_step = 0.0;
  double r_incl = 0.0;
  double r_coll = 0.0;
  double sigma_o = 0.0;
  double sigma_h = 0.0;
  Provenance provenance = Provenance::Empty;

  bool empty() const { return provenance == Provenance::Empty; }
};

struct LocalTerrainMap {
  GridSpec spec;
  std::vector<LocalCell> cells;

  const LocalCell& at(int col, int row) const { return cells[spec.index(col, row)]; }
  LocalCell& at(int col, int row) { return cells[spec.index(col, row)]; }
};

struct CompletionParams {
  double kernel_radius = 0.5;   // l, metres
  double tau_h = 0.25;          // metres, collision span threshold
  double risk_radius = 0.0;     // metres for the derived layers; 0 = 1.5 * resolution
  InclNorm incl_norm = InclNorm::TwoPi;
  double sigma_min = 0.01;      // floor for observed-cell biases
  bool traversability_aware = true;  // false = plain kernel weights, unbounded region
};

/// Compact-support kernel: ((2+cos(2 pi d/l))/3)(1-d/l) + sin(2 pi d/l)/(2 pi)
/// for d/l < 1, else 0.
double bgk_kernel(double d, double l);

/// Steppability-scaled kernel: (1 - r_step_neighbor) * bgk_kernel(d, l).
double tbgk_kernel(double d, double l, double r_step_neighbor);

struct InferredCell {
  double h_max = 0.0;
  double h_min = 0.0;
  double r_step = 0.0;
  double sigma_o = 0.0;
  double sigma_h = 0.0;
};

/// Kernel regression for one target cell over the observed neighbors within
/// radius l. Heights use steppability-scaled weights, the risk uses plain
/// weights, and the two biases follow the same weighted sums. Returns
/// nullopt when no weight mass reaches the cell. include_self adds the
/// target's own observation (used for observed cells' biases).
std::optional<InferredCell> infer_cell(int col, int row, const SparseElevationGrid& grid,
                                       double l, bool traversability_aware = true,
                                       bool include_self = false);

/// Steepest normalized slope toward any non-empty neighbor within the radius.
double inclination_risk(int col, int row, const LocalTerrainMap& local, double radius,
                        InclNorm norm = InclNorm::TwoPi);

/// Largest height span within the radius, normalized by tau_h and saturated
/// at 1.
double collision_risk(int col, int row, const LocalTerrainMap& local, double radius,
                      double tau_h);

/// Verticality of an inferred cell: plane fit (PCA) over the non-empty
/// neighbors' (x, y, h_max) triples; degenerate neighborhoods inherit the
/// nearest observed cell's value, else 0.
double inferred_verticality(int col, int row, const LocalTerrainMap& local,
                            const SparseElevationGrid& grid, double radius);

/// Densifies the sparse grid into the completed local terrain map: observed
/// cells keep their measurements, empty cells inside the observation bound
/// are inferred, then the derived layers are computed.
LocalTerrainMap complete(const SparseElevationGrid& grid, const CompletionParams& params = {},
                         int threads = 1);

}  // namespace ttmap
