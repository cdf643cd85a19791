#pragma once

#include <cstdint>

#include "ttmap/fusion.hpp"
#include "ttmap/sim.hpp"

namespace ttmap {

struct EvalParams {
  double decision_tau = 0.5;  // collision decision threshold on r_coll
  int tolerance = 1;          // adjacency tolerance radius in cells
};

/// Scoring summary. mhe averages |h_max - gt| over every compared cell, mte
/// over ground-truth-traversable cells only. Collision metrics use the
/// adjacency-tolerant rule: a predicted collision is a true positive when a
/// ground-truth collision lies within the tolerance neighborhood, and a
/// ground-truth collision is missed only when no prediction lies within its
/// neighborhood.
struct EvalReport {
  double mhe = 0.0;
  double mte = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  std::int64_t gt_collisions = 0;
  std::int64_t cells_compared = 0;
  std::int64_t coverage_misses = 0;  // GT cells the map never populated
  bool valid = false;
};

/// Height errors over the aligned lattice; cells missing on either side are
/// excluded and counted as coverage misses (map side).
void height_errors(const MapSnapshot& map, const GroundTruthGrid& gt, EvalReport& report);

/// Adjacency-tolerant collision decision metrics. Unpopulated map cells count
/// as predicted-free.
void collision_metrics(const MapSnapshot& map, const GroundTruthGrid& gt,
                       const EvalParams& params, EvalReport& report);

/// Full report (heights + collision metrics).
EvalReport evaluate(const MapSnapshot& map, const GroundTruthGrid& gt,
                    const EvalParams& params = {});

}  // namespace ttmap
