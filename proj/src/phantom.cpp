#include "segkit/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "segkit/errors.hpp"
#include "segkit/regions.hpp"
#include "segkit/rng.hpp"

namespace segkit {

namespace {

// Stream ids for the counter RNG; one stream per planted object keeps
// geometry independent of generation order.
constexpr std::uint64_t kStreamShuffle = 1;
constexpr std::uint64_t kStreamNoise = 3;
constexpr std::uint64_t kStreamLesionBase = 1000;
constexpr std::uint64_t kStreamSpuriousBase = 2000;

struct Lattice {
  std::int64_t cell = 0;
  std::array<std::int64_t, 3> counts{0, 0, 0};
  std::int64_t total() const { return counts[0] * counts[1] * counts[2]; }

  std::array<std::int64_t, 3> cell_center(std::int64_t id) const {
    const std::int64_t cx = id % counts[0];
    const std::int64_t cy = (id / counts[0]) % counts[1];
    const std::int64_t cz = id / (counts[0] * counts[1]);
    return {cx * cell + cell / 2, cy * cell + cell / 2, cz * cell + cell / 2};
  }
};

Lattice make_lattice(const PhantomSpec& spec) {
  Lattice lat;
  const double rmax = spec.wt_radius_range[1];
  // 12 spare voxels: +-2 center jitter per object plus a Chebyshev gap
  // of at least 8 between object surfaces, so radius <= 3 dilations of
  // distinct objects can never meet.
  lat.cell = static_cast<std::int64_t>(std::ceil(2.0 * rmax)) + 12;
  for (int a = 0; a < 3; ++a) lat.counts[a] = spec.dims[a] / lat.cell;
  return lat;
}

std::array<double, 3> draw_radii(CounterRng& rng, const std::array<double, 2>& range) {
  return {rng.next_in(range[0], range[1]), rng.next_in(range[0], range[1]),
          rng.next_in(range[0], range[1])};
}

bool inside_ellipsoid(std::int64_t dx, std::int64_t dy, std::int64_t dz,
                      const std::array<double, 3>& radii) {
  const double a = static_cast<double>(dx) / radii[0];
  const double b = static_cast<double>(dy) / radii[1];
  const double c = static_cast<double>(dz) / radii[2];
  return a * a + b * b + c * c <= 1.0;
}

PlantedLesion rasterize_lesion(LabelVolume& gt, const std::array<std::int64_t, 3>& center,
                               CounterRng& rng, const PhantomSpec& spec) {
  PlantedLesion lesion;
  lesion.center = center;
  lesion.wt_radii = draw_radii(rng, spec.wt_radius_range);
  lesion.tc_radii = draw_radii(rng, spec.tc_radius_range);
  lesion.et_radii = draw_radii(rng, spec.et_radius_range);
  for (int a = 0; a < 3; ++a) {
    lesion.tc_radii[a] = std::min(lesion.tc_radii[a], lesion.wt_radii[a]);
    lesion.et_radii[a] = std::min(lesion.et_radii[a], lesion.tc_radii[a]);
  }

  const auto& g = gt.geometry;
  const std::int64_t reach = static_cast<std::int64_t>(std::ceil(lesion.wt_radii[0])) + 1;
  const std::int64_t reach_y = static_cast<std::int64_t>(std::ceil(lesion.wt_radii[1])) + 1;
  const std::int64_t reach_z = static_cast<std::int64_t>(std::ceil(lesion.wt_radii[2])) + 1;
  for (std::int64_t z = std::max<std::int64_t>(0, center[2] - reach_z);
       z <= std::min(g.dims[2] - 1, center[2] + reach_z); ++z)
    for (std::int64_t y = std::max<std::int64_t>(0, center[1] - reach_y);
         y <= std::min(g.dims[1] - 1, center[1] + reach_y); ++y)
      for (std::int64_t x = std::max<std::int64_t>(0, center[0] - reach);
           x <= std::min(g.dims[0] - 1, center[0] + reach); ++x) {
        const std::int64_t dx = x - center[0], dy = y - center[1], dz = z - center[2];
        std::uint8_t code = labels::kBackground;
        if (inside_ellipsoid(dx, dy, dz, lesion.et_radii)) {
          code = labels::kEt;
          ++lesion.et_voxels;
          ++lesion.tc_voxels;
          ++lesion.wt_voxels;
        } else if (inside_ellipsoid(dx, dy, dz, lesion.tc_radii)) {
          code = labels::kNcr;
          ++lesion.tc_voxels;
          ++lesion.wt_voxels;
        } else if (inside_ellipsoid(dx, dy, dz, lesion.wt_radii)) {
          code = labels::kEd;
          ++lesion.wt_voxels;
        }
        if (code != labels::kBackground) gt.at(x, y, z) = code;
      }
  return lesion;
}

// Connected blob of exactly `size` voxels grown from `seed_voxel` by
// repeatedly claiming a pseudo-random 6-neighbor of the blob, confined
// to a bounding box that keeps it inside its lattice cell.
PlantedComponent grow_blob(LabelVolume& volume, const std::array<std::int64_t, 3>& seed_voxel,
                           std::int64_t size, std::uint8_t label, std::int64_t half_width,
                           CounterRng& rng) {
  const auto& g = volume.geometry;
  auto in_box = [&](const std::array<std::int64_t, 3>& p) {
    for (int a = 0; a < 3; ++a) {
      if (p[a] < std::max<std::int64_t>(0, seed_voxel[a] - half_width)) return false;
      if (p[a] > std::min(g.dims[a] - 1, seed_voxel[a] + half_width)) return false;
    }
    return true;
  };

  std::vector<std::array<std::int64_t, 3>> blob{seed_voxel};
  std::vector<std::array<std::int64_t, 3>> frontier;
  auto contains = [&](const std::array<std::int64_t, 3>& p) {
    return volume.at(p[0], p[1], p[2]) == label ||
           std::find(blob.begin(), blob.end(), p) != blob.end();
  };
  volume.at(seed_voxel[0], seed_voxel[1], seed_voxel[2]) = label;

  static constexpr std::array<std::array<int, 3>, 6> kSteps{
      {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};
  auto refresh_frontier = [&]() {
    frontier.clear();
    for (const auto& p : blob)
      for (const auto& s : kSteps) {
        const std::array<std::int64_t, 3> q{p[0] + s[0], p[1] + s[1], p[2] + s[2]};
        if (!in_box(q) || contains(q)) continue;
        if (std::find(frontier.begin(), frontier.end(), q) == frontier.end()) frontier.push_back(q);
      }
    std::sort(frontier.begin(), frontier.end());
  };

  while (static_cast<std::int64_t>(blob.size()) < size) {
    refresh_frontier();
    if (frontier.empty())
      throw Error::config("phantom: spurious component cannot grow to the requested size");
    const auto& pick = frontier[rng.next_below(frontier.size())];
    blob.push_back(pick);
    volume.at(pick[0], pick[1], pick[2]) = label;
  }

  PlantedComponent comp;
  comp.seed_voxel = seed_voxel;
  comp.size = static_cast<std::int64_t>(blob.size());
  comp.label = label;
  return comp;
}

void apply_boundary_noise(LabelVolume& pred, const PhantomSpec& spec) {
  if (spec.label_noise_rate <= 0.0) return;
  const LabelVolume before = pred;
  const auto& g = pred.geometry;
  CounterRng noise(spec.seed, kStreamNoise);
  static constexpr std::array<std::array<int, 3>, 6> kSteps{
      {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};
  std::int64_t idx = 0;
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y)
      for (std::int64_t x = 0; x < g.dims[0]; ++x, ++idx) {
        const std::uint8_t code = before.voxels[static_cast<std::size_t>(idx)];
        if (code == labels::kBackground) continue;
        // swap only between foreground labels so the WT mask never changes
        std::uint8_t other = labels::kBackground;
        for (const auto& s : kSteps) {
          const std::int64_t xx = x + s[0], yy = y + s[1], zz = z + s[2];
          if (xx < 0 || yy < 0 || zz < 0 || xx >= g.dims[0] || yy >= g.dims[1] || zz >= g.dims[2])
            continue;
          const std::uint8_t n = before.at(xx, yy, zz);
          if (n != labels::kBackground && n != code) {
            other = n;
            break;
          }
        }
        if (other == labels::kBackground) continue;
        const double u = static_cast<double>(noise.at(static_cast<std::uint64_t>(idx)) >> 11) *
                         0x1.0p-53;
        if (u < spec.label_noise_rate) pred.voxels[static_cast<std::size_t>(idx)] = other;
      }
}

void box_blur_axis(std::vector<float>& data, const VolumeGeometry& g, int axis, int radius) {
  const std::int64_t extent = g.dims[axis];
  std::int64_t stride = 1;
  for (int a = 0; a < axis; ++a) stride *= g.dims[a];
  const std::int64_t lines = g.voxel_count() / extent;
  std::vector<float> line(static_cast<std::size_t>(extent));
  for (std::int64_t ln = 0; ln < lines; ++ln) {
    std::int64_t rem = ln, base = 0, mul = 1;
    for (int a = 0; a < 3; ++a) {
      if (a == axis) {
        mul *= g.dims[a];
        continue;
      }
      base += (rem % g.dims[a]) * mul;
      rem /= g.dims[a];
      mul *= g.dims[a];
    }
    for (std::int64_t i = 0; i < extent; ++i)
      line[static_cast<std::size_t>(i)] = data[static_cast<std::size_t>(base + i * stride)];
    for (std::int64_t i = 0; i < extent; ++i) {
      const std::int64_t lo = std::max<std::int64_t>(0, i - radius);
      const std::int64_t hi = std::min(extent - 1, i + radius);
      double sum = 0.0;
      for (std::int64_t j = lo; j <= hi; ++j) sum += line[static_cast<std::size_t>(j)];
      data[static_cast<std::size_t>(base + i * stride)] =
          static_cast<float>(sum / static_cast<double>(hi - lo + 1));
    }
  }
}

}  // namespace

void PhantomSpec::validate() const {
  make_geometry(dims, spacing);
  if (n_lesions < 0 || n_spurious < 0) throw Error::config("phantom: counts must be >= 0");
  for (const auto& range : {wt_radius_range, tc_radius_range, et_radius_range}) {
    if (range[0] < 1.0 || range[1] < range[0])
      throw Error::config("phantom: radius ranges must satisfy 1 <= lo <= hi");
  }
  if (spurious_size_range[0] < 1 || spurious_size_range[1] < spurious_size_range[0])
    throw Error::config("phantom: spurious size range must satisfy 1 <= lo <= hi");
  if (spurious_label < 1 || spurious_label > 3)
    throw Error::config("phantom: spurious label must be 1, 2 or 3");
  if (prob_blur_radius < 0) throw Error::config("phantom: blur radius must be >= 0");
  if (label_noise_rate < 0.0 || label_noise_rate > 1.0)
    throw Error::config("phantom: label noise rate must lie in [0,1]");
}

PhantomOutput generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Lattice lat = make_lattice(spec);
  const std::int64_t objects = spec.n_lesions + spec.n_spurious;
  if (objects > lat.total())
    throw Error::config("phantom spec infeasible: " + std::to_string(objects) +
                        " objects need more than the " + std::to_string(lat.total()) +
                        " available " + std::to_string(lat.cell) + "-voxel cells");

  // Deterministic cell assignment: Fisher-Yates keyed by the seed.
  std::vector<std::int64_t> cells(static_cast<std::size_t>(lat.total()));
  std::iota(cells.begin(), cells.end(), 0);
  CounterRng shuffle(spec.seed, kStreamShuffle);
  for (std::size_t i = cells.size(); i > 1; --i)
    std::swap(cells[i - 1], cells[shuffle.next_below(i)]);

  PhantomOutput out;
  out.gt = LabelVolume(make_geometry(spec.dims, spec.spacing));

  for (int i = 0; i < spec.n_lesions; ++i) {
    CounterRng rng(spec.seed, kStreamLesionBase + static_cast<std::uint64_t>(i));
    auto center = lat.cell_center(cells[static_cast<std::size_t>(i)]);
    for (int a = 0; a < 3; ++a)
      center[a] += static_cast<std::int64_t>(rng.next_below(5)) - 2;  // jitter in [-2,2]
    out.lesions.push_back(rasterize_lesion(out.gt, center, rng, spec));
  }

  out.pred = out.gt;
  for (int j = 0; j < spec.n_spurious; ++j) {
    CounterRng rng(spec.seed, kStreamSpuriousBase + static_cast<std::uint64_t>(j));
    auto seed_voxel = lat.cell_center(cells[static_cast<std::size_t>(spec.n_lesions + j)]);
    for (int a = 0; a < 3; ++a)
      seed_voxel[a] += static_cast<std::int64_t>(rng.next_below(5)) - 2;
    const std::int64_t size = spec.spurious_size_range[0] +
                              static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(
                                  spec.spurious_size_range[1] - spec.spurious_size_range[0] + 1)));
    out.spurious.push_back(
        grow_blob(out.pred, seed_voxel, size, spec.spurious_label, lat.cell / 2 - 4, rng));
  }

  apply_boundary_noise(out.pred, spec);

  out.probs = region_indicators(out.pred);
  if (spec.prob_blur_radius > 0)
    for (auto& channel : out.probs.channels)
      for (int axis = 0; axis < 3; ++axis)
        box_blur_axis(channel, out.probs.geometry, axis, spec.prob_blur_radius);

  return out;
}

std::string phantom_manifest_json(const PhantomSpec& spec, const PhantomOutput& out) {
  nlohmann::json doc;
  doc["dims"] = spec.dims;
  doc["spacing"] = spec.spacing;
  doc["seed"] = spec.seed;
  doc["lesions"] = nlohmann::json::array();
  for (const PlantedLesion& l : out.lesions) {
    nlohmann::json j;
    j["center"] = l.center;
    j["wt_radii"] = l.wt_radii;
    j["tc_radii"] = l.tc_radii;
    j["et_radii"] = l.et_radii;
    j["wt_voxels"] = l.wt_voxels;
    j["tc_voxels"] = l.tc_voxels;
    j["et_voxels"] = l.et_voxels;
    doc["lesions"].push_back(std::move(j));
  }
  doc["spurious"] = nlohmann::json::array();
  for (const PlantedComponent& c : out.spurious) {
    nlohmann::json j;
    j["seed_voxel"] = c.seed_voxel;
    j["size"] = c.size;
    j["label"] = static_cast<int>(c.label);
    doc["spurious"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

}  // namespace segkit
