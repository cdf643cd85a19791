#include "ttmap/eval.hpp"

#include <cmath>
#include <stdexcept>

namespace ttmap {

namespace {

void require_aligned(const GridSpec& a, const GridSpec& b) {
  if (std::abs(a.resolution - b.resolution) > 1e-12 || !a.lattice_aligned() ||
      !b.lattice_aligned()) {
    throw std::invalid_argument("eval: grids are not on one lattice");
  }
}

}  // namespace

void height_errors(const MapSnapshot& map, const GroundTruthGrid& gt, EvalReport& report) {
  require_aligned(map.spec, gt.spec);
  double abs_sum = 0.0;
  std::int64_t abs_count = 0;
  double trav_sum = 0.0;
  std::int64_t trav_count = 0;
  report.coverage_misses = 0;

  const std::int64_t off_x = map.spec.lattice_x() - gt.spec.lattice_x();
  const std::int64_t off_y = map.spec.lattice_y() - gt.spec.lattice_y();
  for (int row = 0; row < gt.spec.rows(); ++row) {
    for (int col = 0; col < gt.spec.cols(); ++col) {
      if (!gt.covered(col, row)) continue;
      const std::int64_t mc = col - off_x;
      const std::int64_t mr = row - off_y;
      if (mc < 0 || mr < 0 || mc >= map.spec.cols() || mr >= map.spec.rows() ||
          !map.at(static_cast<int>(mc), static_cast<int>(mr)).valid) {
        ++report.coverage_misses;
        continue;
      }
      const double err =
          std::abs(map.at(static_cast<int>(mc), static_cast<int>(mr)).h_max -
                   gt.height(col, row));
      abs_sum += err;
      ++abs_count;
      if (!gt.is_collision(col, row)) {
        trav_sum += err;
        ++trav_count;
      }
    }
  }
  report.valid = abs_count > 0;
  report.mhe = abs_count > 0 ? abs_sum / abs_count : 0.0;
  report.mte = trav_count > 0 ? trav_sum / trav_count : 0.0;
}

void collision_metrics(const MapSnapshot& map, const GroundTruthGrid& gt,
                       const EvalParams& params, EvalReport& report) {
  require_aligned(map.spec, gt.spec);
  const int tol = params.tolerance;
  const std::int64_t off_x = map.spec.lattice_x() - gt.spec.lattice_x();
  const std::int64_t off_y = map.spec.lattice_y() - gt.spec.lattice_y();

  const auto predicted = [&](int col, int row) -> bool {
    if (!gt.spec.contains(col, row)) return false;
    const std::int64_t mc = col - off_x;
    const std::int64_t mr = row - off_y;
    if (mc < 0 || mr < 0 || mc >= map.spec.cols() || mr >= map.spec.rows()) return false;
    const SnapshotCell& cell = map.at(static_cast<int>(mc), static_cast<int>(mr));
    return cell.valid && cell.r_coll >= params.decision_tau;
  };
  const auto gt_collision = [&](int col, int row) -> bool {
    return gt.spec.contains(col, row) && gt.covered(col, row) && gt.is_collision(col, row);
  };
  const auto any_near = [&](int col, int row, const auto& pred) -> bool {
    for (int dr = -tol; dr <= tol; ++dr) {
      for (int dc = -tol; dc <= tol; ++dc) {
        if (pred(col + dc, row + dr)) return true;
      }
    }
    return false;
  };

  std::int64_t tp = 0, fp = 0, fn = 0, detected_gt = 0, gt_total = 0, compared = 0;
  for (int row = 0; row < gt.spec.rows(); ++row) {
    for (int col = 0; col < gt.spec.cols(); ++col) {
      if (!gt.covered(col, row)) continue;
      ++compared;
      if (predicted(col, row)) {
        if (any_near(col, row, gt_collision)) {
          ++tp;
        } else {
          ++fp;
        }
      }
      if (gt_collision(col, row)) {
        ++gt_total;
        if (any_near(col, row, predicted)) {
          ++detected_gt;
        } else {
          ++fn;
        }
      }
    }
  }

  report.tp = tp;
  report.fp = fp;
  report.fn = fn;
  report.tn = compared - tp - fp - fn;
  report.gt_collisions = gt_total;
  report.cells_compared = compared;
  report.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  report.recall = gt_total > 0 ? static_cast<double>(detected_gt) / gt_total : 0.0;
  report.f1 = (report.precision + report.recall) > 0.0
                  ? 2.0 * report.precision * report.recall /
                        (report.precision + report.recall)
                  : 0.0;
  report.accuracy = compared > 0 ? static_cast<double>(tp + report.tn) / compared : 0.0;
}

EvalReport evaluate(const MapSnapshot& map, const GroundTruthGrid& gt,
                    const EvalParams& params) {
  EvalReport report;
  height_errors(map, gt, report);
  collision_metrics(map, gt, params, report);
  return report;
}

}  // namespace ttmap
