#include "vectorpose/geometry.hpp"

#include <algorithm>
#include <numbers>

namespace vectorpose {

Spherical to_spherical(Vec3 d) {
  if (!d.finite()) throw InvalidArgument("to_spherical: non-finite delta " + to_string(d));
  Spherical s;
  s.r = d.norm();
  if (s.r > 0.0) s.theta = std::acos(std::clamp(d.z / s.r, -1.0, 1.0));
  if (d.x != 0.0 || d.y != 0.0) s.phi = std::atan2(d.y, d.x);
  return s;
}

Vec3 to_cartesian(const Spherical& s) {
  const double st = std::sin(s.theta);
  return {s.r * st * std::cos(s.phi), s.r * st * std::sin(s.phi), s.r * std::cos(s.theta)};
}

double circumscribing_radius(Extents3 shape) {
  if (!shape.positive()) {
    throw InvalidArgument("circumscribing_radius: extents must be >= 1, got " + to_string(shape));
  }
  const double dx = double(shape.x), dy = double(shape.y), dz = double(shape.z);
  return std::sqrt(dx * dx + dy * dy + dz * dz) / 2.0;
}

Landmark make_landmark(Extents3 shape, double eta, Rng& rng) {
  if (!(eta >= 0.0 && eta < 0.5)) {
    throw InvalidArgument("make_landmark: eta must lie in [0, 0.5), got " + std::to_string(eta));
  }
  if (!shape.positive()) throw InvalidArgument("make_landmark: empty volume " + to_string(shape));
  Landmark lm;
  for (int a = 0; a < 3; ++a) {
    const double extent = double(shape[a]);
    const double bound = eta * extent;
    lm.jitter_applied[a] = eta > 0.0 ? uniform(rng, -bound, bound) : 0.0;
    lm.position[a] = (extent - 1.0) / 2.0 + lm.jitter_applied[a];
  }
  return lm;
}

Vec3 CropPlacement::to_volume(Vec3 p) const {
  Vec3 w;
  for (int a = 0; a < 3; ++a) {
    // Scale maps crop voxel centers onto source voxel centers end to end.
    const double scale = crop_extents[a] > 1 ? double(extents[a] - 1) / double(crop_extents[a] - 1)
                                             : 1.0;
    w[a] = double(offset[a]) + scale * p[a];
  }
  return w;
}

int OriginLayout::count() const {
  switch (kind) {
    case OriginLayoutKind::kCenterOnly: return 1;
    case OriginLayoutKind::kCenterPlusCorners: return 9;
    case OriginLayoutKind::kCenterPlusKCorners:
      if (k == 1 || k == 4) return 1 + k;
      throw InvalidArgument("origin layout: center plus " + std::to_string(k) +
                            " corners is not supported (use 1 or 4, or the full layout)");
  }
  throw InvalidArgument("origin layout: unknown kind");
}

std::string OriginLayout::name() const {
  switch (kind) {
    case OriginLayoutKind::kCenterOnly: return "center";
    case OriginLayoutKind::kCenterPlusCorners: return "center+8";
    case OriginLayoutKind::kCenterPlusKCorners: return "center+" + std::to_string(k);
  }
  return "unknown";
}

OriginLayout layout_for_vector_count(int n) {
  switch (n) {
    case 1: return OriginLayout::center_only();
    case 2: return OriginLayout::center_plus_k_corners(1);
    case 5: return OriginLayout::center_plus_k_corners(4);
    case 9: return OriginLayout::center_plus_corners();
    default:
      throw InvalidArgument("no origin layout has " + std::to_string(n) +
                            " vectors (supported: 1, 2, 5, 9)");
  }
}

OriginPointSet make_origin_points(Extents3 e, OriginLayout layout) {
  const int n = layout.count();
  if (!e.positive()) throw InvalidArgument("make_origin_points: empty crop " + to_string(e));
  if (n > 1 && (e.x < 2 || e.y < 2 || e.z < 2)) {
    throw InvalidArgument("make_origin_points: corner layouts need extents >= 2, got " +
                          to_string(e));
  }
  OriginPointSet set{{}, layout, e};
  set.points.reserve(std::size_t(n));
  set.points.push_back({double(e.x - 1) / 2.0, double(e.y - 1) / 2.0, double(e.z - 1) / 2.0});
  for (int m = 1; m < n; ++m) {
    const int bits = m - 1;
    set.points.push_back({(bits & 1) ? double(e.x - 1) : 0.0, (bits & 2) ? double(e.y - 1) : 0.0,
                          (bits & 4) ? double(e.z - 1) : 0.0});
  }
  return set;
}

VpTarget normalize_spherical(const Spherical& s, double radius) {
  return {std::clamp(s.r / radius, 0.0, 1.0), s.theta / std::numbers::pi, s.phi / std::numbers::pi};
}

VpTargetSet vp_targets(const CropPlacement& placement, const TransformRecord& transform,
                       const OriginPointSet& origins, const Landmark& landmark, double radius) {
  validate(transform);
  if (!(radius > 0.0)) throw InvalidArgument("vp_targets: radius must be positive");
  if (!(origins.extents == placement.crop_extents)) {
    throw InvalidArgument("vp_targets: origin points were built for " + to_string(origins.extents) +
                          " but the crop is " + to_string(placement.crop_extents));
  }
  check_compatible(transform, placement.crop_extents);
  VpTargetSet out;
  out.radius = radius;
  out.targets.reserve(origins.points.size());
  for (const Vec3& p : origins.points) {
    const Vec3 pre = invert_point(transform, p, placement.crop_extents);
    const Vec3 world = placement.to_volume(pre);
    out.targets.push_back(normalize_spherical(to_spherical(landmark.position - world), radius));
  }
  return out;
}

std::vector<int> permutation_for(const TransformRecord& transform, OriginLayout layout) {
  if (!layout.has_full_corners()) {
    throw InvalidArgument("permutation_for: only the center+8 corner layout has a corner "
                          "permutation, got " + layout.name());
  }
  validate(transform);
  // Corner correspondence does not depend on the (cubic) extent, so a 2^3 crop suffices.
  const Extents3 unit = Extents3::cube(2);
  const OriginPointSet canonical = make_origin_points(unit, layout);
  std::vector<int> perm(canonical.points.size());
  perm[0] = 0;
  for (std::size_t m = 1; m < canonical.points.size(); ++m) {
    const Vec3 pre = invert_point(transform, canonical.points[m], unit);
    perm[m] = corner_index(pre.x > 0.5, pre.y > 0.5, pre.z > 0.5);
  }
  return perm;
}

VpTargetSet permute(const VpTargetSet& targets, const std::vector<int>& permutation) {
  if (permutation.size() != targets.size()) {
    throw InvalidArgument("permute: permutation size does not match target count");
  }
  VpTargetSet out;
  out.radius = targets.radius;
  out.targets.reserve(targets.size());
  for (int src : permutation) {
    if (src < 0 || std::size_t(src) >= targets.size()) {
      throw InvalidArgument("permute: index out of range");
    }
    out.targets.push_back(targets.targets[std::size_t(src)]);
  }
  return out;
}

}  // namespace vectorpose
