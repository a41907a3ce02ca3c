#pragma once

#include <string>
#include <vector>

#include "vectorpose/common.hpp"
#include "vectorpose/rng.hpp"
#include "vectorpose/spatial.hpp"

namespace vectorpose {

/// Spherical coordinates of a Cartesian delta. theta is the polar angle from
/// +z in [0, pi]; phi is the azimuth atan2(y, x) in [-pi, pi].
struct Spherical {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

/// theta := 0 when r == 0 and phi := 0 when x == y == 0.
Spherical to_spherical(Vec3 delta);
Vec3 to_cartesian(const Spherical& s);

/// Half the space diagonal of a volume, in voxels.
double circumscribing_radius(Extents3 volume_shape);

/// Reference point all vectors of a crop terminate at.
struct Landmark {
  Vec3 position;
  Vec3 jitter_applied;
};

/// Geometric volume center ((D - 1) / 2 per axis) plus a uniform jitter of up
/// to eta * D along each axis. Requires 0 <= eta < 0.5.
Landmark make_landmark(Extents3 volume_shape, double eta, Rng& rng);

/// Where a crop came from. `extents` is the source region; `crop_extents` is
/// the sampled grid (they differ only when scale jitter resamples the region).
struct CropPlacement {
  Extents3 offset;
  Extents3 extents;
  Extents3 crop_extents;
  std::string source_volume_id;
  Landmark landmark;

  /// Volume coordinates of crop-local point `p` (before any spatial transform).
  Vec3 to_volume(Vec3 p) const;
};

enum class OriginLayoutKind : std::uint8_t { kCenterOnly, kCenterPlusCorners, kCenterPlusKCorners };

struct OriginLayout {
  OriginLayoutKind kind = OriginLayoutKind::kCenterPlusCorners;
  int k = 8;  // corners taken, only meaningful for kCenterPlusKCorners

  static OriginLayout center_only() { return {OriginLayoutKind::kCenterOnly, 0}; }
  static OriginLayout center_plus_corners() { return {OriginLayoutKind::kCenterPlusCorners, 8}; }
  static OriginLayout center_plus_k_corners(int k) {
    return {OriginLayoutKind::kCenterPlusKCorners, k};
  }

  /// Number of origin points; throws InvalidArgument for unsupported layouts.
  int count() const;
  bool has_full_corners() const { return kind == OriginLayoutKind::kCenterPlusCorners; }
  std::string name() const;

  friend bool operator==(OriginLayout, OriginLayout) = default;
};

/// Layout used for a given vector count: 1 -> center, 2 -> center + 1 corner,
/// 5 -> center + 4 corners, 9 -> center + 8 corners.
OriginLayout layout_for_vector_count(int n);

/// Corner index for corner bits: m = 1 + bx + 2 by + 4 bz.
constexpr int corner_index(int bx, int by, int bz) { return 1 + bx + 2 * by + 4 * bz; }

struct OriginPointSet {
  std::vector<Vec3> points;  // crop-local voxel coordinates
  OriginLayout layout;
  Extents3 extents;
};

OriginPointSet make_origin_points(Extents3 crop_extents, OriginLayout layout);

struct VpTarget {
  double r_norm = 0.0;      // clamp(r / R, 0, 1)
  double theta_norm = 0.0;  // theta / pi
  double phi_norm = 0.0;    // phi / pi
  friend bool operator==(const VpTarget&, const VpTarget&) = default;
};

struct VpTargetSet {
  std::vector<VpTarget> targets;
  double radius = 1.0;

  std::size_t size() const noexcept { return targets.size(); }
  friend bool operator==(const VpTargetSet&, const VpTargetSet&) = default;
};

VpTarget normalize_spherical(const Spherical& s, double radius);

/// Per-origin targets for a crop that went through `transform`. Origin m is
/// canonical point m of the transformed crop; it is mapped back through the
/// inverse transform into volume coordinates and the vector to the landmark is
/// expressed in the volume frame.
VpTargetSet vp_targets(const CropPlacement& placement, const TransformRecord& transform,
                       const OriginPointSet& origins, const Landmark& landmark, double radius);

/// Bijection on origin indices: canonical point m of the transformed crop is
/// canonical point result[m] of the untransformed crop. Full-corner layout only.
std::vector<int> permutation_for(const TransformRecord& transform, OriginLayout layout);

/// result[m] = targets[permutation[m]].
VpTargetSet permute(const VpTargetSet& targets, const std::vector<int>& permutation);

}  // namespace vectorpose
