#pragma once

#include <optional>
#include <string>

#include "vectorpose/common.hpp"
#include "vectorpose/geometry.hpp"
#include "vectorpose/grid.hpp"
#include "vectorpose/rng.hpp"

namespace vectorpose {

struct Volume {
  Grid3f data;
  std::optional<Vec3> spacing;  // mm per voxel, when the source file carried one
  bool normalized = false;
  std::string id;

  Extents3 shape() const noexcept { return data.extents(); }
};

/// Clips to the [lo, hi] intensity percentiles and maps affinely onto [0, 1].
/// Percentiles are order statistics (lower for lo, higher for hi), which makes
/// the operation idempotent. A degenerate range yields all zeros.
Volume normalize(const Volume& volume, double clip_lo_pct = 0.5, double clip_hi_pct = 99.5);

struct CropSamplingConfig {
  double background_threshold = 0.01;
  double min_informative_fraction = 0.1;
  int max_retries = 50;
  /// Relative scale jitter of the source region; 0 disables resampling.
  double scale_jitter = 0.0;
};

struct CropSample {
  Grid3f data;
  CropPlacement placement;
  double informative_fraction = 0.0;
};

/// Uniformly placed crop. Candidates whose informative fraction falls below
/// the configured minimum are rejected; after max_retries the best candidate
/// seen is returned. The landmark of the returned placement is left default.
CropSample sample_crop(const Volume& volume, Extents3 extents, const CropSamplingConfig& cfg,
                       Rng& rng);

/// Fraction of voxels strictly above `threshold`.
double informative_fraction(const Grid3f& crop, double threshold);

/// Trilinear resampling of `source` onto `extents`, corner voxel centers aligned.
Grid3f resample_trilinear(const Grid3f& source, Extents3 extents);

}  // namespace vectorpose
