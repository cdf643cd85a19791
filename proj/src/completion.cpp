#include "ttmap/completion.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ttmap/parallel.hpp"

namespace ttmap {

double bgk_kernel(double d, double l) {
  const double t = d / l;
  if (t >= 1.0) return 0.0;
  const double angle = 2.0 * std::numbers::pi * t;
  return (2.0 + std::cos(angle)) / 3.0 * (1.0 - t) +
         std::sin(angle) / (2.0 * std::numbers::pi);
}

double tbgk_kernel(double d, double l, double r_step_neighbor) {
  return (1.0 - r_step_neighbor) * bgk_kernel(d, l);
}

namespace {

// Iterates grid cells of the square superscribing the radius-r disk around
// the target center, applying the exact Euclidean distance test. Fixed
// row-major order keeps floating-point sums reproducible.
template <typename Fn>
void for_disk(const GridSpec& spec, int col, int row, double radius, Fn&& fn) {
  const int reach = static_cast<int>(std::ceil(radius / spec.resolution));
  const double cx = spec.center_x(col);
  const double cy = spec.center_y(row);
  for (int dr = -reach; dr <= reach; ++dr) {
    const int r = row + dr;
    if (r < 0 || r >= spec.rows()) continue;
    for (int dc = -reach; dc <= reach; ++dc) {
      const int c = col + dc;
      if (c < 0 || c >= spec.cols()) continue;
      const double dx = spec.center_x(c) - cx;
      const double dy = spec.center_y(r) - cy;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d >= radius) continue;  // kernel support is d/l < 1
      fn(c, r, d, dx, dy);
    }
  }
}

}  // namespace

std::optional<InferredCell> infer_cell(int col, int row, const SparseElevationGrid& grid,
                                       double l, bool traversability_aware,
                                       bool include_self) {
  double w_sum = 0.0;
  double wh_max = 0.0;
  double wh_min = 0.0;
  double w_off_x = 0.0;
  double w_off_y = 0.0;
  double k_sum = 0.0;
  double kr_sum = 0.0;

  for_disk(grid.spec, col, row, l, [&](int c, int r, double d, double dx, double dy) {
    if (!include_self && c == col && r == row) return;
    const ObservedCell& cell = grid.at(c, r);
    if (!cell.observed) return;
    const double k = bgk_kernel(d, l);
    const double w = traversability_aware ? (1.0 - cell.r_step) * k : k;
    w_sum += w;
    wh_max += w * cell.h_max;
    wh_min += w * cell.h_min;
    w_off_x += w * dx;
    w_off_y += w * dy;
    k_sum += k;
    kr_sum += k * cell.r_step;
  });

  if (w_sum <= 0.0) return std::nullopt;

  InferredCell out;
  out.h_max = wh_max / w_sum;
  out.h_min = wh_min / w_sum;
  out.r_step = k_sum > 0.0 ? std::clamp(kr_sum / k_sum, 0.0, 1.0) : 0.0;
  out.sigma_o = std::clamp(
      std::sqrt(w_off_x * w_off_x + w_off_y * w_off_y) / (l * w_sum), 0.0, 1.0);

  double w_dev = 0.0;
  for_disk(grid.spec, col, row, l, [&](int c, int r, double d, double, double) {
    if (!include_self && c == col && r == row) return;
    const ObservedCell& cell = grid.at(c, r);
    if (!cell.observed) return;
    const double k = bgk_kernel(d, l);
    const double w = traversability_aware ? (1.0 - cell.r_step) * k : k;
    w_dev += w * std::abs(cell.h_max - out.h_max);
  });
  out.sigma_h = std::clamp(w_dev / w_sum, 0.0, 1.0);
  return out;
}

double inclination_risk(int col, int row, const LocalTerrainMap& local, double radius,
                        InclNorm norm) {
  const LocalCell& center = local.at(col, row);
  double steepest = 0.0;
  for_disk(local.spec, col, row, radius, [&](int c, int r, double d, double, double) {
    if (c == col && r == row) return;
    const LocalCell& cell = local.at(c, r);
    if (cell.empty()) return;
    const double ratio = std::clamp(std::abs(center.h_max - cell.h_max) / d, 0.0, 1.0);
    steepest = std::max(steepest, std::asin(ratio));
  });
  const double divisor =
      norm == InclNorm::TwoPi ? 2.0 * std::numbers::pi : 0.5 * std::numbers::pi;
  return steepest / divisor;
}

double collision_risk(int col, int row, const LocalTerrainMap& local, double radius,
                      double tau_h) {
  double max_span = 0.0;
  for_disk(local.spec, col, row, radius, [&](int c, int r, double, double, double) {
    const LocalCell& cell = local.at(c, r);
    if (cell.empty()) return;
    max_span = std::max(max_span, cell.h_max - cell.h_min);
  });
  return std::min(max_span / tau_h, 1.0);
}

double inferred_verticality(int col, int row, const LocalTerrainMap& local,
                            const SparseElevationGrid& grid, double radius) {
  Vec3 mean = Vec3::Zero();
  int count = 0;
  for_disk(local.spec, col, row, radius, [&](int c, int r, double, double, double) {
    const LocalCell& cell = local.at(c, r);
    if (cell.empty()) return;
    mean += Vec3(local.spec.center_x(c), local.spec.center_y(r), cell.h_max);
    ++count;
  });

  const auto fallback = [&]() -> double {
    double best_d = std::numeric_limits<double>::infinity();
    double n_z = 0.0;
    for_disk(local.spec, col, row, radius, [&](int c, int r, double d, double, double) {
      if (!grid.at(c, r).observed) return;
      if (d < best_d) {
        best_d = d;
        n_z = grid.at(c, r).n_z;
      }
    });
    return std::isfinite(best_d) ? n_z : 0.0;
  };

  if (count < 3) return fallback();
  mean /= count;
  Mat3 cov = Mat3::Zero();
  for_disk(local.spec, col, row, radius, [&](int c, int r, double, double, double) {
    const LocalCell& cell = local.at(c, r);
    if (cell.empty()) return;
    const Vec3 d = Vec3(local.spec.center_x(c), local.spec.center_y(r), cell.h_max) - mean;
    cov += d * d.transpose();
  });
  cov /= count;
  Eigen::SelfAdjointEigenSolver<Mat3> solver;
  solver.computeDirect(cov);
  // Collinear support leaves the normal direction unconstrained.
  if (solver.eigenvalues()(1) <= 1e-12 + 1e-9 * solver.eigenvalues()(2)) return fallback();
  return std::abs(solver.eigenvectors().col(0).z());
}

LocalTerrainMap complete(const SparseElevationGrid& grid, const CompletionParams& params,
                         int threads) {
  LocalTerrainMap local;
  local.spec = grid.spec;
  local.cells.assign(grid.spec.cell_count(), LocalCell{});
  const int cols = grid.spec.cols();
  const double risk_radius =
      params.risk_radius > 0.0 ? params.risk_radius : 1.5 * grid.spec.resolution;

  parallel_for(local.cells.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const int row = static_cast<int>(idx) / cols;
      const int col = static_cast<int>(idx) % cols;
      const ObservedCell& obs = grid.cells[idx];
      LocalCell& cell = local.cells[idx];
      if (obs.observed) {
        cell.h_max = obs.h_max;
        cell.h_min = obs.h_min;
        cell.n_z = obs.n_z;
        cell.r_step = obs.r_step;
        cell.provenance = Provenance::Observed;
        {
          // Keep measured values; only the biases come from the kernel sums,
          // with sigma_h anchored on the retained height. The cell itself is
          // included.
          double w_sum = 0.0;
          double w_dev = 0.0;
          double w_off_x = 0.0;
          double w_off_y = 0.0;
          for_disk(grid.spec, col, row, params.kernel_radius,
                   [&](int c, int r, double d, double dx, double dy) {
                     const ObservedCell& nb = grid.at(c, r);
                     if (!nb.observed) return;
                     const double k = bgk_kernel(d, params.kernel_radius);
                     const double w =
                         params.traversability_aware ? (1.0 - nb.r_step) * k : k;
                     w_sum += w;
                     w_dev += w * std::abs(nb.h_max - obs.h_max);
                     w_off_x += w * dx;
                     w_off_y += w * dy;
                   });
          if (w_sum > 0.0) {
            cell.sigma_o = std::clamp(std::sqrt(w_off_x * w_off_x + w_off_y * w_off_y) /
                                          (params.kernel_radius * w_sum),
                                      params.sigma_min, 1.0);
            cell.sigma_h = std::clamp(w_dev / w_sum, params.sigma_min, 1.0);
          } else {
            // No steppable support at all: report maximum uncertainty.
            cell.sigma_o = 1.0;
            cell.sigma_h = 1.0;
          }
        }
      } else {
        const bool reachable =
            !params.traversability_aware || grid.within_observation(col, row);
        if (!reachable) continue;
        const auto inferred =
            infer_cell(col, row, grid, params.kernel_radius, params.traversability_aware);
        if (!inferred) continue;
        cell.h_max = inferred->h_max;
        cell.h_min = inferred->h_min;
        cell.r_step = inferred->r_step;
        cell.sigma_o = inferred->sigma_o;
        cell.sigma_h = inferred->sigma_h;
        cell.provenance = Provenance::Inferred;
      }
    }
  });

  // Derived layers read the completed heights, so they run as a second pass.
  std::vector<double> incl(local.cells.size(), 0.0);
  std::vector<double> coll(local.cells.size(), 0.0);
  std::vector<double> vert(local.cells.size(), 0.0);
  parallel_for(local.cells.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      if (local.cells[idx].empty()) continue;
      const int row = static_cast<int>(idx) / cols;
      const int col = static_cast<int>(idx) % cols;
      incl[idx] = inclination_risk(col, row, local, risk_radius, params.incl_norm);
      coll[idx] = collision_risk(col, row, local, risk_radius, params.tau_h);
      if (local.cells[idx].provenance == Provenance::Inferred) {
        vert[idx] = inferred_verticality(col, row, local, grid, risk_radius);
      }
    }
  });
  for (std::size_t idx = 0; idx < local.cells.size(); ++idx) {
    LocalCell& cell = local.cells[idx];
    if (cell.empty()) continue;
    cell.r_incl = incl[idx];
    cell.r_coll = coll[idx];
    if (cell.provenance == Provenance::Inferred) cell.n_z = vert[idx];
  }
  return local;
}

}  // namespace ttmap
