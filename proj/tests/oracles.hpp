// Test-only reference implementations, deliberately independent of the
// library's algorithms: flood fill instead of union-find, all-pairs
// nearest neighbors instead of a distance transform, direct
// neighborhood scans instead of separable passes.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "segkit/geometry.hpp"
#include "segkit/rng.hpp"
#include "segkit/volume.hpp"

namespace oracles {

inline bool neighbor_allowed(int dx, int dy, int dz, int connectivity) {
  const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
  if (manhattan == 0) return false;
  if (connectivity == 6) return manhattan == 1;
  if (connectivity == 18) return manhattan <= 2;
  return true;
}

// First-encounter component ids via breadth-first flood fill.
inline std::vector<std::uint32_t> flood_fill_components(const segkit::BinaryMask& mask,
                                                        int connectivity) {
  const auto& g = mask.geometry;
  std::vector<std::uint32_t> ids(mask.voxels.size(), 0);
  std::uint32_t next = 0;
  std::vector<std::int64_t> queue;
  std::int64_t idx = 0;
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y)
      for (std::int64_t x = 0; x < g.dims[0]; ++x, ++idx) {
        if (!mask.voxels[idx] || ids[idx]) continue;
        ids[idx] = ++next;
        queue.assign(1, idx);
        while (!queue.empty()) {
          const std::int64_t cur = queue.back();
          queue.pop_back();
          const std::int64_t cx = cur % g.dims[0];
          const std::int64_t cy = (cur / g.dims[0]) % g.dims[1];
          const std::int64_t cz = cur / (g.dims[0] * g.dims[1]);
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                if (!neighbor_allowed(dx, dy, dz, connectivity)) continue;
                const std::int64_t nx = cx + dx, ny = cy + dy, nz = cz + dz;
                if (nx < 0 || ny < 0 || nz < 0 || nx >= g.dims[0] || ny >= g.dims[1] ||
                    nz >= g.dims[2])
                  continue;
                const std::int64_t n = g.index(nx, ny, nz);
                if (mask.voxels[n] && !ids[n]) {
                  ids[n] = next;
                  queue.push_back(n);
                }
              }
        }
      }
  return ids;
}

inline segkit::BinaryMask brute_dilate(const segkit::BinaryMask& mask, int radius) {
  const auto& g = mask.geometry;
  segkit::BinaryMask out(g);
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y)
      for (std::int64_t x = 0; x < g.dims[0]; ++x) {
        bool hit = false;
        for (std::int64_t dz = -radius; dz <= radius && !hit; ++dz)
          for (std::int64_t dy = -radius; dy <= radius && !hit; ++dy)
            for (std::int64_t dx = -radius; dx <= radius && !hit; ++dx) {
              const std::int64_t nx = x + dx, ny = y + dy, nz = z + dz;
              if (nx < 0 || ny < 0 || nz < 0 || nx >= g.dims[0] || ny >= g.dims[1] ||
                  nz >= g.dims[2])
                continue;
              hit = mask.voxels[g.index(nx, ny, nz)] != 0;
            }
        out.voxels[g.index(x, y, z)] = hit;
      }
  return out;
}

inline double brute_dice(const segkit::BinaryMask& pred, const segkit::BinaryMask& gt) {
  std::int64_t p = 0, g = 0, inter = 0;
  for (std::size_t i = 0; i < pred.voxels.size(); ++i) {
    p += pred.voxels[i] != 0;
    g += gt.voxels[i] != 0;
    inter += pred.voxels[i] && gt.voxels[i];
  }
  if (p == 0 && g == 0) return 1.0;
  if (p == 0 || g == 0) return 0.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

inline double interp_percentile(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

inline double brute_hd95(const segkit::BinaryMask& pred, const segkit::BinaryMask& gt,
                         double empty_penalty_mm = 374.0) {
  const auto& g = pred.geometry;
  struct Pt {
    double x, y, z;
  };
  std::vector<Pt> ps, gs;
  std::int64_t idx = 0;
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y)
      for (std::int64_t x = 0; x < g.dims[0]; ++x, ++idx) {
        const Pt pt{x * g.spacing[0], y * g.spacing[1], z * g.spacing[2]};
        if (pred.voxels[idx]) ps.push_back(pt);
        if (gt.voxels[idx]) gs.push_back(pt);
      }
  if (ps.empty() && gs.empty()) return 0.0;
  if (ps.empty() || gs.empty()) return empty_penalty_mm;
  auto nearest = [](const Pt& a, const std::vector<Pt>& others) {
    double best = std::numeric_limits<double>::infinity();
    for (const Pt& b : others) {
      const double d2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                        (a.z - b.z) * (a.z - b.z);
      best = std::min(best, d2);
    }
    return std::sqrt(best);
  };
  std::vector<double> pooled;
  pooled.reserve(ps.size() + gs.size());
  for (const Pt& p : ps) pooled.push_back(nearest(p, gs));
  for (const Pt& q : gs) pooled.push_back(nearest(q, ps));
  return interp_percentile(std::move(pooled), 95.0);
}

// --- deterministic random inputs -------------------------------------------

inline segkit::BinaryMask random_mask(const std::array<std::int64_t, 3>& dims, double density,
                                      std::uint64_t seed, std::uint64_t stream = 0) {
  segkit::BinaryMask mask(segkit::make_geometry(dims));
  segkit::CounterRng rng(seed, 7000 + stream);
  for (auto& v : mask.voxels) v = rng.next_double() < density;
  return mask;
}

inline segkit::LabelVolume random_labels(const std::array<std::int64_t, 3>& dims,
                                         std::uint64_t seed, std::uint64_t stream = 0,
                                         double foreground_density = 0.4) {
  segkit::LabelVolume volume(segkit::make_geometry(dims));
  segkit::CounterRng rng(seed, 8000 + stream);
  for (auto& v : volume.voxels) {
    if (rng.next_double() < foreground_density)
      v = static_cast<std::uint8_t>(1 + rng.next_below(3));
    else
      v = 0;
  }
  return volume;
}

// probabilities on a 1/1024 grid keep double accumulation exact
inline float quantized_prob(segkit::CounterRng& rng) {
  return static_cast<float>(rng.next_below(1025)) / 1024.0f;
}

}  // namespace oracles
