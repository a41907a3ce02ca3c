#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "vectorpose/boundary.hpp"
#include "vectorpose/spatial.hpp"

namespace vectorpose {
namespace {

TEST(Scharr, ConstantCropIsExactlyZero) {
  const EdgeMap m = scharr3d(Grid3f(Extents3::cube(8), 0.37f));
  for (float v : m.magnitude.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_FALSE(m.normalized);
}

TEST(Scharr, UnitRampHasUnitInteriorMagnitude) {
  Grid3f ramp(Extents3::cube(8));
  for (std::int64_t z = 0; z < 8; ++z)
    for (std::int64_t y = 0; y < 8; ++y)
      for (std::int64_t x = 0; x < 8; ++x) ramp(x, y, z) = float(x);
  const EdgeMap m = scharr3d(ramp);
  const Grid3<double> dense = oracle::scharr_dense(ramp);
  for (std::int64_t z = 0; z < 8; ++z)
    for (std::int64_t y = 0; y < 8; ++y)
      for (std::int64_t x = 1; x < 7; ++x) {
        EXPECT_NEAR(m.magnitude(x, y, z), 1.0, 1e-6);
        EXPECT_NEAR(dense(x, y, z), 1.0, 1e-12);
      }
}

TEST(Scharr, SeparableMatchesDenseConvolution) {
  std::mt19937_64 rng(1);
  for (Extents3 e : {Extents3::cube(6), Extents3{9, 5, 7}, Extents3{3, 3, 3}}) {
    const Grid3f v = oracle::random_grid(e, rng);
    const EdgeMap m = scharr3d(v);
    const Grid3<double> dense = oracle::scharr_dense(v);
    for (std::size_t i = 0; i < v.size(); ++i) ASSERT_NEAR(m.magnitude[i], dense[i], 1e-6);
  }
}

TEST(Scharr, LinearForPositiveScale) {
  std::mt19937_64 rng(2);
  const Grid3f v = oracle::random_grid(Extents3::cube(7), rng);
  Grid3f scaled = v;
  for (float& x : scaled.values()) x *= 3.0f;
  const EdgeMap a = scharr3d(v), b = scharr3d(scaled);
  for (std::size_t i = 0; i < v.size(); ++i) ASSERT_NEAR(b.magnitude[i], 3.0f * a.magnitude[i], 1e-5);
}

TEST(Scharr, ExactlyEquivariantUnderCubeGroup) {
  std::mt19937_64 rng(3);
  const Grid3f v = oracle::random_grid(Extents3::cube(7), rng);
  const Grid3f base = scharr3d(v).magnitude;
  for (const TransformRecord& t : oracle::cube_group()) {
    EXPECT_EQ(scharr3d(apply_spatial(v, t)).magnitude, apply_spatial(base, t)) << t.describe();
  }
}

TEST(Scharr, RejectsSmallCrops) {
  EXPECT_THROW(scharr3d(Grid3f({2, 8, 8})), InvalidArgument);
}

TEST(BoundaryTarget, ConstantCropIsAllZero) {
  const EdgeMap t = boundary_target(Grid3f(Extents3::cube(5), 1.0f));
  EXPECT_TRUE(t.normalized);
  for (float v : t.magnitude.values()) EXPECT_EQ(v, 0.0f);
}

TEST(BoundaryTarget, StepGivesUnitPlateauOnFaces) {
  Grid3f step(Extents3::cube(16), 0.0f);
  for (std::int64_t z = 0; z < 16; ++z)
    for (std::int64_t y = 0; y < 16; ++y)
      for (std::int64_t x = 8; x < 16; ++x) step(x, y, z) = 1.0f;
  const EdgeMap t = boundary_target(step);
  // Dense oracle: the only non-zero responses sit on x = 7 and x = 8.
  const Grid3<double> dense = oracle::scharr_dense(step);
  for (std::int64_t z = 0; z < 16; ++z)
    for (std::int64_t y = 0; y < 16; ++y)
      for (std::int64_t x = 0; x < 16; ++x) {
        const double expect = dense(x, y, z) / 0.5;
        EXPECT_NEAR(t.magnitude(x, y, z), expect, 1e-6);
        if (x == 7 || x == 8) EXPECT_EQ(t.magnitude(x, y, z), 1.0f);
        if (x < 6 || x > 9) EXPECT_EQ(t.magnitude(x, y, z), 0.0f);
      }
}

TEST(BoundaryTarget, InvariantToIntensityScale) {
  std::mt19937_64 rng(4);
  const Grid3f v = oracle::random_grid(Extents3::cube(8), rng);
  Grid3f half = v;
  for (float& x : half.values()) x *= 0.5f;
  EXPECT_EQ(boundary_target(v).magnitude, boundary_target(half).magnitude);
}

TEST(BoundaryTarget, RangeAndPeak) {
  std::mt19937_64 rng(5);
  const EdgeMap t = boundary_target(oracle::random_grid(Extents3::cube(9), rng));
  const auto vals = t.magnitude.values();
  EXPECT_EQ(*std::max_element(vals.begin(), vals.end()), 1.0f);
  EXPECT_GE(*std::min_element(vals.begin(), vals.end()), 0.0f);
}

}  // namespace
}  // namespace vectorpose
