#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support/oracles.hpp"
#include "vectorpose/intensity.hpp"

namespace vectorpose {
namespace {

IntensityNoiseConfig all_off() {
  IntensityNoiseConfig cfg;
  cfg.intensity_shift_prob = 0;
  cfg.shuffle_prob = 0;
  cfg.paint_prob = 0;
  return cfg;
}

TEST(ApplyIntensity, AllProbabilitiesZeroIsIdentity) {
  std::mt19937_64 g(1);
  const Grid3f crop = oracle::random_grid(Extents3::cube(16), g);
  Rng rng(1);
  EXPECT_EQ(apply_intensity(crop, all_off(), rng), crop);
}

TEST(ApplyIntensity, ShuffleOnlyKeepsValueMultiset) {
  std::mt19937_64 g(2);
  const Grid3f crop = oracle::random_grid(Extents3::cube(16), g);
  IntensityNoiseConfig cfg = all_off();
  cfg.shuffle_prob = 1.0;
  cfg.shuffle_block_count = 200;
  Rng rng(2);
  const Grid3f out = apply_intensity(crop, cfg, rng);
  EXPECT_NE(out, crop);
  std::vector<float> a(crop.values().begin(), crop.values().end());
  std::vector<float> b(out.values().begin(), out.values().end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(ApplyIntensity, SingleInpaintBoxTouchesAtMost512Voxels) {
  std::mt19937_64 g(3);
  const Grid3f crop = oracle::random_grid(Extents3::cube(32), g);
  IntensityNoiseConfig cfg = all_off();
  cfg.paint_prob = 1.0;
  cfg.outpaint_prob = 0.0;
  cfg.inpaint_box_count_min = cfg.inpaint_box_count_max = 1;
  cfg.inpaint_box_frac_min = cfg.inpaint_box_frac_max = 0.25;  // 8 voxels per axis
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Grid3f out = apply_intensity(crop, cfg, rng);
    std::int64_t differ = 0;
    for (std::size_t i = 0; i < crop.size(); ++i) differ += out[i] != crop[i];
    EXPECT_LE(differ, 512);
    EXPECT_GT(differ, 400);  // almost every noised voxel changes value
  }
}

TEST(ApplyIntensity, OutpaintKeepsSomeBoxesVerbatim) {
  std::mt19937_64 g(4);
  const Grid3f crop = oracle::random_grid(Extents3::cube(16), g);
  IntensityNoiseConfig cfg = all_off();
  cfg.paint_prob = 1.0;
  cfg.outpaint_prob = 1.0;
  Rng rng(40);  // a seed of its own, so the noise differs from the crop
  const Grid3f out = apply_intensity(crop, cfg, rng);
  std::int64_t same = 0;
  for (std::size_t i = 0; i < crop.size(); ++i) same += out[i] == crop[i];
  EXPECT_GT(same, 0);
  EXPECT_LT(same, std::int64_t(crop.size()));
}

TEST(ApplyIntensity, DefaultsStayInUnitRangeAndAreDeterministic) {
  std::mt19937_64 g(5);
  const Grid3f crop = oracle::random_grid(Extents3::cube(16), g);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed);
    const Grid3f out = apply_intensity(crop, IntensityNoiseConfig{}, a);
    EXPECT_EQ(out, apply_intensity(crop, IntensityNoiseConfig{}, b));
    for (float v : out.values()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(MonotoneCurve, NonDecreasingWithFixedEndpoints) {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const MonotoneCurve c = MonotoneCurve::random(rng);
    EXPECT_NEAR(c(0.0), 0.0, 1e-12);
    EXPECT_NEAR(c(1.0), 1.0, 1e-12);
    double prev = -1.0;
    for (int k = 0; k <= 200; ++k) {
      const double y = c(k / 200.0);
      ASSERT_GE(y, prev - 1e-12);
      prev = y;
    }
  }
}

TEST(ApplyIntensity, ValidatesConfig) {
  IntensityNoiseConfig cfg;
  cfg.shuffle_prob = 1.5;
  Rng rng(7);
  EXPECT_THROW(apply_intensity(Grid3f(Extents3::cube(16)), cfg, rng), InvalidArgument);
  cfg = IntensityNoiseConfig{};
  cfg.shuffle_block_extents = Extents3::cube(32);
  EXPECT_THROW(apply_intensity(Grid3f(Extents3::cube(16)), cfg, rng), InvalidArgument);
}

}  // namespace
}  // namespace vectorpose
