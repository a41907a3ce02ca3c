#include "vectorpose/boundary.hpp"

#include <algorithm>
#include <cmath>

namespace vectorpose {
namespace {

using GridD = Grid3<double>;

std::int64_t clampi(std::int64_t i, std::int64_t n) { return std::clamp<std::int64_t>(i, 0, n - 1); }

// Neighbour along `axis` with edge replication.
double at(const GridD& g, std::int64_t x, std::int64_t y, std::int64_t z, int axis, int step) {
  const Extents3 e = g.extents();
  switch (axis) {
    case 0: return g(clampi(x + step, e.x), y, z);
    case 1: return g(x, clampi(y + step, e.y), z);
    default: return g(x, y, clampi(z + step, e.z));
  }
}

GridD derivative(const GridD& in, int axis) {
  const Extents3 e = in.extents();
  GridD out(e);
  for (std::int64_t z = 0; z < e.z; ++z)
    for (std::int64_t y = 0; y < e.y; ++y)
      for (std::int64_t x = 0; x < e.x; ++x) {
        out(x, y, z) = (at(in, x, y, z, axis, +1) - at(in, x, y, z, axis, -1)) * 0.5;
      }
  return out;
}

GridD smooth(const GridD& in, int axis) {
  const Extents3 e = in.extents();
  GridD out(e);
  for (std::int64_t z = 0; z < e.z; ++z)
    for (std::int64_t y = 0; y < e.y; ++y)
      for (std::int64_t x = 0; x < e.x; ++x) {
        // Neighbours are summed first so the stencil is mirror-symmetric in floating point.
        const double side = at(in, x, y, z, axis, -1) + at(in, x, y, z, axis, +1);
        out(x, y, z) = (10.0 * in(x, y, z) + 3.0 * side) / 16.0;
      }
  return out;
}

GridD component(const GridD& v, int axis) {
  const int b = (axis + 1) % 3;
  const int c = (axis + 2) % 3;
  const GridD d = derivative(v, axis);
  const GridD bc = smooth(smooth(d, b), c);
  const GridD cb = smooth(smooth(d, c), b);
  GridD out(v.extents());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (bc[i] + cb[i]) * 0.5;
  return out;
}

}  // namespace

EdgeMap scharr3d(const Grid3f& crop) {
  const Extents3 e = crop.extents();
  if (e.x < 3 || e.y < 3 || e.z < 3) {
    throw InvalidArgument("scharr3d: crop extents must be >= 3 per axis, got " + to_string(e));
  }
  GridD v(e);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = crop[i];
  const GridD gx = component(v, 0);
  const GridD gy = component(v, 1);
  const GridD gz = component(v, 2);
  EdgeMap out{Grid3f(e), false};
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::array<double, 3> sq{gx[i] * gx[i], gy[i] * gy[i], gz[i] * gz[i]};
    std::sort(sq.begin(), sq.end());
    out.magnitude[i] = static_cast<float>(std::sqrt((sq[0] + sq[1]) + sq[2]));
  }
  return out;
}

EdgeMap boundary_target(const Grid3f& crop) {
  EdgeMap edges = scharr3d(crop);
  const auto values = edges.magnitude.values();
  const float peak = values.empty() ? 0.0f : *std::max_element(values.begin(), values.end());
  const double denom = std::max(double(peak), kBoundaryMaxFloor);
  for (float& v : values) v = static_cast<float>(std::clamp(double(v) / denom, 0.0, 1.0));
  edges.normalized = true;
  return edges;
}

}  // namespace vectorpose
