#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support/oracles.hpp"
#include "vectorpose/spatial.hpp"

namespace vectorpose {
namespace {

Grid3f marked(Extents3 e, Extents3 at) {
  Grid3f g(e, 0.0f);
  g(at.x, at.y, at.z) = 1.0f;
  return g;
}

TEST(SampleSpatial, ZeroProbabilitiesGiveIdentity) {
  Rng rng(3);
  SpatialAugmentConfig cfg{{0, 0, 0}, 0};
  for (int i = 0; i < 20; ++i) EXPECT_TRUE(sample_spatial(rng, cfg).empty());
}

TEST(SampleSpatial, CertainFlipsInAxisOrder) {
  Rng rng(3);
  SpatialAugmentConfig cfg{{1, 1, 1}, 0};
  const TransformRecord r = sample_spatial(rng, cfg);
  EXPECT_EQ(r, (TransformRecord{{Flip{Axis::kX}, Flip{Axis::kY}, Flip{Axis::kZ}}}));
}

TEST(SampleSpatial, DeterministicPerSeedAndAtMostOneRotation) {
  SpatialAugmentConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const TransformRecord ra = sample_spatial(a, cfg);
    EXPECT_EQ(ra, sample_spatial(b, cfg));
    EXPECT_LE(std::count_if(ra.ops.begin(), ra.ops.end(),
                            [](const SpatialOp& op) { return std::holds_alternative<Rot90>(op); }),
              1);
  }
}

TEST(SampleSpatial, UnequalPlanesOnlyGetHalfTurns) {
  SpatialAugmentConfig cfg{{0, 0, 0}, 1.0};
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const TransformRecord r = sample_spatial(rng, cfg, Extents3{8, 8, 4});
    const auto& rot = std::get<Rot90>(r.ops.at(0));
    if (rot.plane != Plane::kXY) EXPECT_EQ(rot.k, 2);
    EXPECT_NO_THROW(check_compatible(r, {8, 8, 4}));
  }
}

TEST(ApplySpatial, FlipMovesMarkedVoxel) {
  const Grid3f g = marked(Extents3::cube(8), {1, 2, 3});
  const Grid3f f = apply_spatial(g, {{Flip{Axis::kX}}});
  EXPECT_EQ(f(6, 2, 3), 1.0f);
  EXPECT_EQ(std::count(f.values().begin(), f.values().end(), 1.0f), 1);
}

TEST(ApplySpatial, InvolutionsRestoreInput) {
  std::mt19937_64 rng(4);
  const Grid3f g = oracle::random_grid({6, 6, 6}, rng);
  EXPECT_EQ(apply_spatial(g, {{Flip{Axis::kX}, Flip{Axis::kX}}}), g);
  EXPECT_EQ(apply_spatial(g, {{Rot90{Plane::kXY, 2}, Rot90{Plane::kXY, 2}}}), g);
  EXPECT_EQ(apply_spatial(apply_spatial(g, {{Rot90{Plane::kYZ, 1}}}), {{Rot90{Plane::kYZ, 3}}}), g);
}

TEST(ApplySpatial, RecordThenInverseIsExactOverGroup) {
  std::mt19937_64 rng(5);
  const Grid3f g = oracle::random_grid(Extents3::cube(5), rng);
  std::vector<float> sorted_in(g.values().begin(), g.values().end());
  std::sort(sorted_in.begin(), sorted_in.end());
  for (const TransformRecord& t : oracle::cube_group()) {
    const Grid3f moved = apply_spatial(g, t);
    std::vector<float> sorted_out(moved.values().begin(), moved.values().end());
    std::sort(sorted_out.begin(), sorted_out.end());
    ASSERT_EQ(sorted_out, sorted_in) << t.describe();
    ASSERT_EQ(apply_spatial(moved, t.inverse()), g) << t.describe();
  }
}

TEST(ApplySpatial, RotationNeedsEqualExtents) {
  const Grid3f g(Extents3{8, 6, 6});
  EXPECT_THROW(apply_spatial(g, {{Rot90{Plane::kXY, 1}}}), InvalidArgument);
  EXPECT_NO_THROW(apply_spatial(g, {{Rot90{Plane::kXY, 2}}}));
  EXPECT_NO_THROW(apply_spatial(g, {{Rot90{Plane::kYZ, 1}}}));
}

TEST(ApplySpatial, HalfTurnOnNonSquarePlane) {
  const Grid3f g = marked({8, 6, 3}, {1, 2, 0});
  const Grid3f r = apply_spatial(g, {{Rot90{Plane::kXY, 2}}});
  EXPECT_EQ(r(6, 3, 0), 1.0f);
}

TEST(InvertPoint, IdentityAndFlip) {
  const Extents3 e{96, 96, 96};
  EXPECT_EQ(invert_point({}, {3.5, 7, 9}, e), (Vec3{3.5, 7, 9}));
  EXPECT_EQ(invert_point({{Flip{Axis::kX}}}, {95, 0, 0}, e), (Vec3{0, 0, 0}));
  EXPECT_THROW(invert_point({}, {96, 0, 0}, e), InvalidArgument);
  EXPECT_THROW(invert_point({}, {-0.5, 0, 0}, e), InvalidArgument);
}

TEST(InvertPoint, MatchesExhaustiveForwardLookup) {
  // Oracle: push every voxel of a 4^3 grid forward by moving a marker through
  // apply_spatial, then check invert_point recovers the source voxel.
  const Extents3 e = Extents3::cube(4);
  std::vector<TransformRecord> records{{{Flip{Axis::kX}, Rot90{Plane::kXY, 1}}},
                                       {{Rot90{Plane::kXZ, 3}, Flip{Axis::kZ}}}};
  for (const auto& t : oracle::cube_group()) records.push_back(t);
  for (const TransformRecord& t : records) {
    for (std::int64_t z = 0; z < e.z; ++z)
      for (std::int64_t y = 0; y < e.y; ++y)
        for (std::int64_t x = 0; x < e.x; ++x) {
          const Grid3f moved = apply_spatial(marked(e, {x, y, z}), t);
          const auto it = std::find(moved.values().begin(), moved.values().end(), 1.0f);
          const auto idx = std::int64_t(it - moved.values().begin());
          const Vec3 image{double(idx % 4), double((idx / 4) % 4), double(idx / 16)};
          ASSERT_EQ(invert_point(t, image, e), (Vec3{double(x), double(y), double(z)})) << t.describe();
          ASSERT_EQ(forward_point(t, {double(x), double(y), double(z)}, e), image);
        }
  }
}

TEST(Validate, RejectsBadQuarterTurns) {
  EXPECT_THROW(validate(TransformRecord{{Rot90{Plane::kXY, 0}}}), UnsupportedTransform);
  EXPECT_THROW(validate(TransformRecord{{Rot90{Plane::kXY, 4}}}), UnsupportedTransform);
  EXPECT_NO_THROW(validate(TransformRecord{{Rot90{Plane::kYZ, 3}, Flip{Axis::kY}}}));
}

TEST(TransformRecord, Describe) {
  EXPECT_EQ(TransformRecord{}.describe(), "identity");
  EXPECT_EQ((TransformRecord{{Flip{Axis::kY}, Rot90{Plane::kXZ, 3}}}.describe()), "flip(y) rot90(xz,3)");
}

}  // namespace
}  // namespace vectorpose
