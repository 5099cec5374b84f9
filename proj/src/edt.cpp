#include "segkit/edt.hpp"

#include <limits>

namespace segkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D lower envelope of parabolas f(i) + w*(q - i)^2 (Felzenszwalb &
// Huttenlocher), with the axis spacing folded into w. `f` holds n
// input values, `d` receives n outputs; `v`/`zpos` are scratch of
// size n and n+1.
void envelope_1d(const double* f, double* d, int* v, double* zpos, std::int64_t n, double w) {
  int k = 0;
  std::int64_t first = 0;
  while (first < n && f[first] == kInf) ++first;
  if (first == n) {
    for (std::int64_t q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  v[0] = static_cast<int>(first);
  zpos[0] = -kInf;
  zpos[1] = kInf;
  for (std::int64_t q = first + 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s;
    while (true) {
      const int p = v[k];
      s = (f[q] - f[p] + w * (static_cast<double>(q) * q - static_cast<double>(p) * p)) /
          (2.0 * w * (q - p));
      if (s > zpos[k]) break;
      --k;
    }
    ++k;
    v[k] = static_cast<int>(q);
    zpos[k] = s;
    zpos[k + 1] = kInf;
  }
  k = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    while (zpos[k + 1] < static_cast<double>(q)) ++k;
    const double dq = static_cast<double>(q) - v[k];
    d[q] = w * dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const std::uint8_t* mask,
                                               const std::array<std::int64_t, 3>& dims,
                                               const std::array<double, 3>& spacing_mm) {
  const std::int64_t sx = dims[0], sy = dims[1], sz = dims[2];
  const std::int64_t n = sx * sy * sz;
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = mask[i] ? 0.0 : kInf;

  const std::int64_t max_extent = std::max(sx, std::max(sy, sz));
  std::vector<double> f(static_cast<std::size_t>(max_extent));
  std::vector<double> d(static_cast<std::size_t>(max_extent));
  std::vector<int> v(static_cast<std::size_t>(max_extent));
  std::vector<double> z(static_cast<std::size_t>(max_extent) + 1);

  auto sweep_axis = [&](int axis) {
    const std::int64_t extent = dims[axis];
    std::int64_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= dims[a];
    const double w = spacing_mm[axis] * spacing_mm[axis];
    const std::int64_t lines = n / extent;
    for (std::int64_t line = 0; line < lines; ++line) {
      std::int64_t rem = line, base = 0, mul = 1;
      for (int a = 0; a < 3; ++a) {
        if (a == axis) {
          mul *= dims[a];
          continue;
        }
        base += (rem % dims[a]) * mul;
        rem /= dims[a];
        mul *= dims[a];
      }
      for (std::int64_t i = 0; i < extent; ++i)
        f[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(base + i * stride)];
      envelope_1d(f.data(), d.data(), v.data(), z.data(), extent, w);
      for (std::int64_t i = 0; i < extent; ++i)
        dist[static_cast<std::size_t>(base + i * stride)] = d[static_cast<std::size_t>(i)];
    }
  };

  // Axis 0 degenerates to exact zero/inf inputs, so the same envelope
  // pass works for all three axes.
  sweep_axis(0);
  sweep_axis(1);
  sweep_axis(2);
  return dist;
}

}  // namespace segkit
