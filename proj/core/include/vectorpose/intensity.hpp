#pragma once

#include "vectorpose/common.hpp"
#include "vectorpose/grid.hpp"
#include "vectorpose/rng.hpp"

namespace vectorpose {

/// Intensity noising applied to the network input only. Defaults follow the
/// Models Genesis augmentation suite.
struct IntensityNoiseConfig {
  double intensity_shift_prob = 0.9;  // monotone Bezier remap
  double shuffle_prob = 0.5;          // local pixel shuffle
  Extents3 shuffle_block_extents = Extents3::cube(8);
  int shuffle_block_count = 64;
  double paint_prob = 0.9;    // in-painting or out-painting
  double outpaint_prob = 0.2;  // share of painting draws that out-paint
  int inpaint_box_count_min = 1;
  int inpaint_box_count_max = 5;
  double inpaint_box_frac_min = 1.0 / 6.0;  // box size as a fraction of the crop extent
  double inpaint_box_frac_max = 1.0 / 3.0;
  int outpaint_box_count_min = 1;
  int outpaint_box_count_max = 4;
  double outpaint_box_frac_min = 3.0 / 7.0;
  double outpaint_box_frac_max = 4.0 / 7.0;
};

/// Throws InvalidArgument on probabilities outside [0, 1] or block/box sizes
/// that do not fit `crop_extents`.
void validate(const IntensityNoiseConfig& cfg, Extents3 crop_extents);

/// Monotone non-decreasing curve through (0,0), two random interior control
/// points and (1,1), evaluated as a cubic Bezier and tabulated.
class MonotoneCurve {
 public:
  MonotoneCurve(double x1, double y1, double x2, double y2);
  static MonotoneCurve random(Rng& rng);
  double operator()(double v) const;

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

void intensity_shift(Grid3f& crop, const MonotoneCurve& curve);

/// Shuffles voxels inside `count` random blocks, in place and sequentially;
/// the multiset of voxel values is preserved.
void local_pixel_shuffle(Grid3f& crop, Extents3 block, int count, Rng& rng);

/// Fills a box with uniform noise in [0, 1]. Returns the number of voxels written.
std::int64_t inpaint_box(Grid3f& crop, Extents3 offset, Extents3 size, Rng& rng);

/// Remap, then shuffle, then in- or out-painting, each probability-gated.
/// Output stays in [0, 1].
Grid3f apply_intensity(const Grid3f& crop, const IntensityNoiseConfig& cfg, Rng& rng);

}  // namespace vectorpose
