#include "segkit/components.hpp"

#include <cstdlib>

#include "segkit/errors.hpp"

namespace segkit {

Connectivity connectivity_from_int(int n) {
  if (n == 6) return Connectivity::c6;
  if (n == 18) return Connectivity::c18;
  if (n == 26) return Connectivity::c26;
  throw Error::config("connectivity must be 6, 18 or 26 (got " + std::to_string(n) + ")");
}

namespace {

struct UnionFind {
  std::vector<std::uint32_t> parent;

  std::uint32_t make() {
    parent.push_back(static_cast<std::uint32_t>(parent.size()));
    return static_cast<std::uint32_t>(parent.size() - 1);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // keep the smaller provisional label as root
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

// Offsets of already-visited neighbors in the raster scan
// (dz < 0, or dz == 0 && dy < 0, or dz == dy == 0 && dx < 0).
struct NeighborOffsets {
  int n = 0;
  int dx[13], dy[13], dz[13];
};

NeighborOffsets prior_neighbors(Connectivity connectivity) {
  NeighborOffsets o;
  const int level = static_cast<int>(connectivity);
  for (int dz = -1; dz <= 0; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (level == 6 && manhattan != 1) continue;
        if (level == 18 && manhattan > 2) continue;
        o.dx[o.n] = dx;
        o.dy[o.n] = dy;
        o.dz[o.n] = dz;
        ++o.n;
      }
  return o;
}

}  // namespace

ComponentLabeling connected_components(const BinaryMask& mask, Connectivity connectivity) {
  const auto& g = mask.geometry;
  const std::int64_t sx = g.dims[0], sy = g.dims[1], sz = g.dims[2];
  const std::int64_t n = g.voxel_count();

  ComponentLabeling out;
  out.geometry = g;
  out.connectivity = connectivity;
  out.ids.assign(static_cast<std::size_t>(n), 0);

  const NeighborOffsets nb = prior_neighbors(connectivity);
  UnionFind uf;
  uf.make();  // provisional label 0 = background

  // First pass: provisional labels + equivalences from prior neighbors.
  std::int64_t idx = 0;
  for (std::int64_t z = 0; z < sz; ++z) {
    for (std::int64_t y = 0; y < sy; ++y) {
      for (std::int64_t x = 0; x < sx; ++x, ++idx) {
        if (!mask.voxels[static_cast<std::size_t>(idx)]) continue;
        std::uint32_t label = 0;
        for (int k = 0; k < nb.n; ++k) {
          const std::int64_t xx = x + nb.dx[k];
          const std::int64_t yy = y + nb.dy[k];
          const std::int64_t zz = z + nb.dz[k];
          if (xx < 0 || yy < 0 || zz < 0 || xx >= sx || yy >= sy) continue;
          const std::uint32_t other = out.ids[static_cast<std::size_t>(g.index(xx, yy, zz))];
          if (other == 0) continue;
          if (label == 0)
            label = other;
          else if (label != other)
            uf.unite(label, other);
        }
        if (label == 0) label = uf.make();
        out.ids[static_cast<std::size_t>(idx)] = label;
      }
    }
  }

  // Second pass: map roots to 1..n in first-encounter order and count.
  std::vector<std::uint32_t> remap(uf.parent.size(), 0);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    const std::uint32_t lab = out.ids[i];
    if (lab == 0) continue;
    const std::uint32_t root = uf.find(lab);
    if (remap[root] == 0) {
      remap[root] = ++next;
      out.sizes.push_back(0);
    }
    out.ids[i] = remap[root];
    ++out.sizes[out.ids[i] - 1];
  }
  return out;
}

}  // namespace segkit
