#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vectorpose/common.hpp"
#include "vectorpose/grid.hpp"
#include "vectorpose/rng.hpp"

namespace vectorpose {

// Spatial augmentation: axis flips and axis-aligned quarter turns. Every
// record is an exact voxel permutation, so targets computed after it can be
// mapped back to the untransformed crop without interpolation.

enum class Axis : std::uint8_t { kX = 0, kY = 1, kZ = 2 };
enum class Plane : std::uint8_t { kXY = 0, kXZ = 1, kYZ = 2 };

struct Flip {
  Axis axis = Axis::kX;
  friend bool operator==(Flip, Flip) = default;
};

/// Quarter turn(s) in `plane`. One turn maps (a, b) -> (e_b - 1 - b, a) where
/// (a, b) are the plane's axes in ascending order.
struct Rot90 {
  Plane plane = Plane::kXY;
  int k = 1;
  friend bool operator==(Rot90, Rot90) = default;
};

using SpatialOp = std::variant<Flip, Rot90>;

struct TransformRecord {
  std::vector<SpatialOp> ops;

  bool empty() const noexcept { return ops.empty(); }
  /// Record whose coordinate map is the inverse of this one.
  TransformRecord inverse() const;
  /// This record followed by `next`.
  TransformRecord then(const TransformRecord& next) const;
  std::string describe() const;

  friend bool operator==(const TransformRecord&, const TransformRecord&) = default;
};

/// Throws UnsupportedTransform for ops outside the flip / quarter-turn set.
void validate(const TransformRecord& record);

/// Throws InvalidArgument if an odd quarter turn would swap unequal extents.
void check_compatible(const TransformRecord& record, Extents3 extents);

struct SpatialAugmentConfig {
  std::array<double, 3> flip_prob{0.5, 0.5, 0.5};
  double rot_prob = 0.5;
};

/// Independent per-axis flips, then at most one quarter-turn with uniform
/// plane and k. When `extents` is given, planes with unequal extents only get
/// half turns.
TransformRecord sample_spatial(Rng& rng, const SpatialAugmentConfig& cfg,
                               std::optional<Extents3> extents = std::nullopt);

/// Image of crop-local point `p` under the record's coordinate map.
Vec3 forward_point(const TransformRecord& record, Vec3 p, Extents3 extents);

/// Pre-image of `p`: forward_point(record, invert_point(record, p, e), e) == p.
Vec3 invert_point(const TransformRecord& record, Vec3 p, Extents3 extents);

namespace detail {
Vec3 apply_op(const SpatialOp& op, Vec3 p, Extents3 extents);
}

template <typename T>
Grid3<T> apply_spatial(const Grid3<T>& crop, const TransformRecord& record) {
  validate(record);
  const Extents3 e = crop.extents();
  check_compatible(record, e);
  Grid3<T> current = crop;
  Grid3<T> next(e);
  for (const SpatialOp& op : record.ops) {
    for (std::int64_t z = 0; z < e.z; ++z) {
      for (std::int64_t y = 0; y < e.y; ++y) {
        for (std::int64_t x = 0; x < e.x; ++x) {
          const Vec3 q = detail::apply_op(op, {double(x), double(y), double(z)}, e);
          next(std::int64_t(q.x), std::int64_t(q.y), std::int64_t(q.z)) = current(x, y, z);
        }
      }
    }
    std::swap(current, next);
  }
  return current;
}

}  // namespace vectorpose
