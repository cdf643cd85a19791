#include "ttmap/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ttmap {

ScalarState kalman_update(ScalarState prior, double value, double noise_var,
                          double process_var) {
  prior.var += process_var;
  const double gain = prior.var / (prior.var + noise_var);
  prior.mean += gain * (value - prior.mean);
  prior.var *= (1.0 - gain);
  return prior;
}

double mahalanobis_distance(double n_z_meas, double r_step_meas, const FusedCell& prior) {
  const double dn = n_z_meas - prior.n_z;
  const double dr = r_step_meas - prior.r_step;
  return dn * dn / prior.var_nz + dr * dr / prior.var_rstep;
}

void logit_update_collision(FusedCell& cell, double r_coll, double eps) {
  const double r = std::clamp(r_coll, eps, 1.0 - eps);
  cell.coll_logodds += std::log(r / (1.0 - r));
}

StaticTerrainMap::StaticTerrainMap(double resolution, int tile_size)
    : resolution_(resolution), tile_size_(tile_size) {
  tiles_.reserve(1024);
}

const FusedCell* StaticTerrainMap::find(CellKey key) const {
  const CellKey tile_key{floor_div(key.x, tile_size_), floor_div(key.y, tile_size_)};
  const auto it = tiles_.find(tile_key);
  if (it == tiles_.end()) return nullptr;
  const std::int64_t lx = key.x - tile_key.x * tile_size_;
  const std::int64_t ly = key.y - tile_key.y * tile_size_;
  const FusedCell& cell = (*it->second)[static_cast<std::size_t>(ly) * tile_size_ + lx];
  return cell.update_count > 0 ? &cell : nullptr;
}

FusedCell& StaticTerrainMap::get_or_create(CellKey key) {
  const CellKey tile_key{floor_div(key.x, tile_size_), floor_div(key.y, tile_size_)};
  auto it = tiles_.find(tile_key);
  if (it == tiles_.end()) {
    it = tiles_.emplace(tile_key, std::make_unique<Tile>(static_cast<std::size_t>(tile_size_) *
                                                         tile_size_)).first;
  }
  const std::int64_t lx = key.x - tile_key.x * tile_size_;
  const std::int64_t ly = key.y - tile_key.y * tile_size_;
  return (*it->second)[static_cast<std::size_t>(ly) * tile_size_ + lx];
}

void StaticTerrainMap::for_each_sorted(
    const std::function<void(CellKey, const FusedCell&)>& fn) const {
  std::vector<CellKey> tile_keys;
  tile_keys.reserve(tiles_.size());
  for (const auto& [key, tile] : tiles_) tile_keys.push_back(key);
  std::sort(tile_keys.begin(), tile_keys.end(), [](CellKey a, CellKey b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  // Tile-sorted traversal is enough for export determinism; within a tile the
  // layout is row-major already. Cross-tile row interleaving is not needed as
  // long as the order is stable, but full (y, x) order keeps files diffable.
  std::vector<std::pair<CellKey, const FusedCell*>> entries;
  entries.reserve(cell_count_);
  for (const CellKey& tk : tile_keys) {
    const Tile& tile = *tiles_.at(tk);
    for (int ly = 0; ly < tile_size_; ++ly) {
      for (int lx = 0; lx < tile_size_; ++lx) {
        const FusedCell& cell = tile[static_cast<std::size_t>(ly) * tile_size_ + lx];
        if (cell.update_count == 0) continue;
        entries.emplace_back(CellKey{tk.x * tile_size_ + lx, tk.y * tile_size_ + ly}, &cell);
      }
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.first.y != b.first.y ? a.first.y < b.first.y : a.first.x < b.first.x;
  });
  for (const auto& [key, cell] : entries) fn(key, *cell);
}

namespace {

double height_noise_var(const FusionParams& p, double sigma_h) {
  const double s = std::max(p.scale_h * sigma_h, p.sigma_min);
  return s * s;
}

double risk_noise_var(const FusionParams& p, double sigma_o) {
  const double s = std::max(p.scale_o * sigma_o, p.sigma_min);
  return s * s;
}

}  // namespace

std::vector<CellKey> gate_and_update(const LocalTerrainMap& local, StaticTerrainMap& map,
                                     const FusionParams& params) {
  if (std::abs(local.spec.resolution - map.resolution()) > 1e-12) {
    throw std::invalid_argument("gate_and_update: resolution mismatch");
  }
  if (!local.spec.lattice_aligned()) {
    throw std::invalid_argument("gate_and_update: local window off the cell lattice");
  }

  std::vector<CellKey> rejected;
  const std::int64_t gx0 = local.spec.lattice_x();
  const std::int64_t gy0 = local.spec.lattice_y();

  for (int row = 0; row < local.spec.rows(); ++row) {
    for (int col = 0; col < local.spec.cols(); ++col) {
      const LocalCell& meas = local.at(col, row);
      if (meas.empty()) continue;
      const CellKey key{gx0 + col, gy0 + row};
      FusedCell& cell = map.get_or_create(key);

      const double noise_h = height_noise_var(params, meas.sigma_h);
      const double noise_o = risk_noise_var(params, meas.sigma_o);

      if (cell.update_count == 0) {
        cell.h_max = meas.h_max;
        cell.h_min = meas.h_min;
        cell.n_z = meas.n_z;
        cell.r_step = meas.r_step;
        cell.r_incl = meas.r_incl;
        cell.var_hmax = std::max(noise_h, params.var_init);
        cell.var_hmin = std::max(noise_h, params.var_init);
        cell.var_nz = std::max(noise_o, params.var_init);
        cell.var_rstep = std::max(noise_o, params.var_init);
        cell.var_rincl = std::max(noise_o, params.var_init);
        cell.coll_logodds = 0.0;
        logit_update_collision(cell, meas.r_coll, params.logit_eps);
        cell.update_count = 1;
        cell.last_rejected = false;
        map.note_created();
        continue;
      }

      const double d = mahalanobis_distance(meas.n_z, meas.r_step, cell);
      if (!(d < params.tau_m)) {
        cell.last_rejected = true;
        rejected.push_back(key);
        continue;
      }

      ScalarState s;
      s = kalman_update({cell.h_max, cell.var_hmax}, meas.h_max, noise_h, params.process_var);
      cell.h_max = s.mean;
      cell.var_hmax = s.var;
      s = kalman_update({cell.h_min, cell.var_hmin}, meas.h_min, noise_h, params.process_var);
      cell.h_min = s.mean;
      cell.var_hmin = s.var;
      s = kalman_update({cell.n_z, cell.var_nz}, meas.n_z, noise_o, params.process_var);
      cell.n_z = std::clamp(s.mean, 0.0, 1.0);
      cell.var_nz = s.var;
      s = kalman_update({cell.r_step, cell.var_rstep}, meas.r_step, noise_o,
                        params.process_var);
      cell.r_step = std::clamp(s.mean, 0.0, 1.0);
      cell.var_rstep = s.var;
      s = kalman_update({cell.r_incl, cell.var_rincl}, meas.r_incl, noise_o,
                        params.process_var);
      cell.r_incl = std::clamp(s.mean, 0.0, 1.0);
      cell.var_rincl = s.var;

      // Independent scalar filters can transiently cross.
      if (cell.h_min > cell.h_max) {
        const double lo = std::min(cell.h_min, cell.h_max);
        const double hi = std::max(cell.h_min, cell.h_max);
        cell.h_min = lo;
        cell.h_max = hi;
      }

      logit_update_collision(cell, meas.r_coll, params.logit_eps);
      ++cell.update_count;
      cell.last_rejected = false;
    }
  }
  return rejected;
}

MapSnapshot snapshot(const StaticTerrainMap& map, const GridSpec& window) {
  if (!window.lattice_aligned()) {
    throw std::invalid_argument("snapshot: window off the cell lattice");
  }
  MapSnapshot snap;
  snap.spec = window;
  snap.cells.assign(window.cell_count(), SnapshotCell{});
  const std::int64_t gx0 = window.lattice_x();
  const std::int64_t gy0 = window.lattice_y();
  for (int row = 0; row < window.rows(); ++row) {
    for (int col = 0; col < window.cols(); ++col) {
      const FusedCell* cell = map.find({gx0 + col, gy0 + row});
      if (!cell) continue;
      SnapshotCell& out = snap.cells[window.index(col, row)];
      out.h_max = cell->h_max;
      out.h_min = cell->h_min;
      out.n_z = cell->n_z;
      out.r_step = cell->r_step;
      out.r_incl = cell->r_incl;
      out.r_coll = cell->collision_risk();
      out.valid = true;
    }
  }
  return snap;
}

}  // namespace ttmap
