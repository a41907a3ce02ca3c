#pragma once

#include "vectorpose/grid.hpp"

namespace vectorpose {

/// Gradient magnitude of a crop; `normalized` marks per-crop max scaling.
struct EdgeMap {
  Grid3f magnitude;
  bool normalized = false;
};

/// 3D Scharr gradient magnitude. Each component is a central difference
/// (-1, 0, 1) / 2 along its axis, smoothed by (3, 10, 3) / 16 along the other
/// two; borders replicate the edge voxel. A unit ramp gives unit magnitude.
///
/// The two smoothing passes are evaluated in both orders and averaged, and the
/// squared components are summed smallest-first. Both choices make the result
/// bit-exactly equivariant under flips and quarter turns.
EdgeMap scharr3d(const Grid3f& crop);

/// Magnitude divided by max(per-crop max, 1e-6), clamped to [0, 1].
EdgeMap boundary_target(const Grid3f& crop);

inline constexpr double kBoundaryMaxFloor = 1e-6;

}  // namespace vectorpose
