#include "ttmap/steppability.hpp"

#include <algorithm>
#include <cmath>

#include "ttmap/parallel.hpp"

namespace ttmap {

double proximity(const Surfel& a, const Surfel& b, bool literal_form) {
  const Vec3 dp = b.p - a.p;
  const double sep = dp.norm();
  if (sep <= 1e-9) return 1.0;  // same-point continuity
  const double alignment = std::abs(a.n.dot(b.n));
  const double offset = std::max(std::abs(a.n.dot(dp)), std::abs(b.n.dot(-dp))) / sep;
  if (literal_form) return alignment * offset;
  return alignment * (1.0 - offset);
}

namespace {

template <typename Fn>
void for_window(const SensorIntrinsics& intr, int u, int v, int k, Fn&& fn) {
  const int w = intr.width;
  const int h = intr.height;
  for (int dv = -k; dv <= k; ++dv) {
    const int vv = v + dv;
    if (vv < 0 || vv >= h) continue;
    for (int du = -k; du <= k; ++du) {
      int uu = u + du;
      if (intr.full_azimuth) {
        uu = (uu % w + w) % w;
      } else if (uu < 0 || uu >= w) {
        continue;
      }
      fn(uu, vv, du == 0 && dv == 0);
    }
  }
}

}  // namespace

RiskImage raw_steppability(const SurfelMap& map, const SteppabilityParams& params,
                           int threads) {
  RiskImage out;
  out.intrinsics = map.intrinsics;
  out.values.assign(map.cells.size(), 0.0);
  out.valid.assign(map.cells.size(), 0);
  const int w = map.intrinsics.width;

  parallel_for(map.cells.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const Surfel& center = map.cells[idx];
      if (!center.valid) continue;
      const int v = static_cast<int>(idx) / w;
      const int u = static_cast<int>(idx) % w;

      double prox_sum = 0.0;
      int neighbors = 0;
      for_window(map.intrinsics, u, v, params.risk_kernel,
                 [&](int uu, int vv, bool is_center) {
                   if (is_center) return;
                   const Surfel& s = map.at(uu, vv);
                   if (!s.valid) return;
                   prox_sum += proximity(s, center, params.literal_prox);
                   ++neighbors;
                 });
      if (neighbors == 0) continue;
      const double arg = std::max(0.0, center.n.z() / neighbors * prox_sum);
      out.values[idx] = std::clamp(1.0 - std::sqrt(arg), 0.0, 1.0);
      out.valid[idx] = 1;
    }
  });
  return out;
}

RiskImage conditional_pool(const RiskImage& raw, const SteppabilityParams& params,
                           int threads) {
  RiskImage out;
  out.intrinsics = raw.intrinsics;
  out.values.assign(raw.values.size(), 0.0);
  out.valid.assign(raw.values.size(), 0);
  const int w = raw.intrinsics.width;

  parallel_for(raw.values.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx) {
      if (!raw.valid[idx]) continue;
      const int v = static_cast<int>(idx) / w;
      const int u = static_cast<int>(idx) % w;

      double sum = 0.0;
      double max_value = 0.0;
      int count = 0;
      for_window(raw.intrinsics, u, v, params.pool_kernel, [&](int uu, int vv, bool) {
        if (!raw.is_valid(uu, vv)) return;
        const double r = raw.at(uu, vv);
        sum += r;
        max_value = std::max(max_value, r);
        ++count;
      });
      const double mean = sum / count;  // count >= 1 (center itself)
      out.values[idx] = mean > params.tau_r ? max_value : mean;
      out.valid[idx] = 1;
    }
  });
  return out;
}

}  // namespace ttmap
