#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Nothing here calls into the implementation path it is used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "vectorpose/grid.hpp"
#include "vectorpose/spatial.hpp"

namespace vectorpose::oracle {

/// Direct dense 3x3x3 Scharr convolution with edge replication. Kernel for
/// component a is the outer product of (-1, 0, 1)/2 along a and (3, 10, 3)/16
/// along the other two axes.
inline Grid3<double> scharr_dense(const Grid3f& v) {
  const Extents3 e = v.extents();
  const std::array<double, 3> deriv{-0.5, 0.0, 0.5};
  const std::array<double, 3> smooth{3.0 / 16.0, 10.0 / 16.0, 3.0 / 16.0};
  Grid3<double> out(e);
  auto clampi = [](std::int64_t i, std::int64_t n) { return std::clamp<std::int64_t>(i, 0, n - 1); };
  for (std::int64_t z = 0; z < e.z; ++z)
    for (std::int64_t y = 0; y < e.y; ++y)
      for (std::int64_t x = 0; x < e.x; ++x) {
        std::array<double, 3> g{0, 0, 0};
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const double val = v(clampi(x + dx, e.x), clampi(y + dy, e.y), clampi(z + dz, e.z));
              const std::array<int, 3> d{dx + 1, dy + 1, dz + 1};
              g[0] += deriv[d[0]] * smooth[d[1]] * smooth[d[2]] * val;
              g[1] += smooth[d[0]] * deriv[d[1]] * smooth[d[2]] * val;
              g[2] += smooth[d[0]] * smooth[d[1]] * deriv[d[2]] * val;
            }
        out(x, y, z) = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      }
  return out;
}

/// Signed permutation matrix of a record acting on a cube, recovered by
/// pushing the cube's corner points through forward_point.
using Signature = std::array<int, 9>;

inline Signature signature_of(const TransformRecord& t) {
  const Extents3 e = Extents3::cube(3);
  const Vec3 c{1, 1, 1};
  Signature s{};
  const Vec3 origin = forward_point(t, c, e);
  for (int a = 0; a < 3; ++a) {
    Vec3 p = c;
    p[a] += 1.0;
    const Vec3 q = forward_point(t, p, e) - origin;
    for (int b = 0; b < 3; ++b) s[std::size_t(3 * a + b)] = int(std::lround(q[b]));
  }
  return s;
}

/// All 48 symmetries of the cube as transform records, found by breadth-first
/// search over products of single flips and single quarter turns.
inline std::vector<TransformRecord> cube_group() {
  std::vector<TransformRecord> generators;
  for (int a = 0; a < 3; ++a) generators.push_back({{Flip{static_cast<Axis>(a)}}});
  for (int p = 0; p < 3; ++p) generators.push_back({{Rot90{static_cast<Plane>(p), 1}}});
  std::map<Signature, TransformRecord> seen;
  std::vector<TransformRecord> frontier{TransformRecord{}};
  seen.emplace(signature_of(TransformRecord{}), TransformRecord{});
  while (!frontier.empty()) {
    std::vector<TransformRecord> next;
    for (const auto& t : frontier) {
      for (const auto& g : generators) {
        TransformRecord c = t.then(g);
        if (seen.emplace(signature_of(c), c).second) next.push_back(c);
      }
    }
    frontier = std::move(next);
  }
  std::vector<TransformRecord> out;
  for (auto& [sig, rec] : seen) out.push_back(rec);
  return out;
}

/// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

inline Grid3f random_grid(Extents3 e, std::mt19937_64& rng, float lo = 0.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Grid3f g(e);
  for (float& v : g.values()) v = u(rng);
  return g;
}

}  // namespace vectorpose::oracle
