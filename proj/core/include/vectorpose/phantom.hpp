#pragma once

#include <cstdint>
#include <vector>

#include "vectorpose/common.hpp"
#include "vectorpose/grid.hpp"
#include "vectorpose/volume.hpp"

namespace vectorpose {

/// One ellipsoidal structure. `offset` is relative to the volume center.
struct OrganSpec {
  std::int32_t label = 1;
  Vec3 offset;
  Vec3 radii{4.0, 4.0, 4.0};
  double intensity = 0.5;
  double position_noise = 0.0;  // std-dev of the Gaussian center shift, voxels
};

struct PhantomSpec {
  std::uint64_t seed = 0;
  Extents3 shape = Extents3::cube(48);
  std::vector<OrganSpec> organs;
  double background_intensity = 0.08;
  double background_noise = 0.03;
  double texture_noise = 0.04;
  double edge_softness = 0.75;  // voxels over which organ edges blend into the surroundings
};

struct Phantom {
  Volume volume;
  LabelGrid labels;
};

/// Six structures in fixed relative positions, some sharing intensities so
/// that telling them apart needs spatial context. Radii scale with the shape.
PhantomSpec default_phantom_spec(std::uint64_t seed, Extents3 shape = Extents3::cube(48));

/// Throws InvalidArgument if labels repeat, are not positive, or an organ does
/// not fit in the volume at zero positional noise.
void validate(const PhantomSpec& spec);

/// Soft-edged ellipsoids over a noisy background. Overlaps resolve toward the
/// higher label. Deterministic for a given spec.
Phantom generate_phantom(const PhantomSpec& spec);

}  // namespace vectorpose
