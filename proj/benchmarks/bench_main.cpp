#include <benchmark/benchmark.h>

#include "vectorpose/boundary.hpp"
#include "vectorpose/config.hpp"
#include "vectorpose/geometry.hpp"
#include "vectorpose/network.hpp"
#include "vectorpose/pretrain.hpp"
#include "vectorpose/spatial.hpp"

namespace vp = vectorpose;

namespace {

vp::Grid3f random_crop(std::int64_t e) {
  vp::Rng rng = vp::make_stream(11, vp::StreamTag::kInspect);
  vp::Grid3f g(vp::Extents3::cube(e));
  for (float& v : g.values()) v = static_cast<float>(vp::uniform(rng, 0.0, 1.0));
  return g;
}

void BM_Scharr3d(benchmark::State& state) {
  const vp::Grid3f crop = random_crop(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(vp::scharr3d(crop));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(crop.size()));
}
BENCHMARK(BM_Scharr3d)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ApplySpatial(benchmark::State& state) {
  const vp::Grid3f crop = random_crop(state.range(0));
  const vp::TransformRecord t{{vp::Flip{vp::Axis::kY}, vp::Rot90{vp::Plane::kXZ, 1}}};
  for (auto _ : state) benchmark::DoNotOptimize(vp::apply_spatial(crop, t));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(crop.size()));
}
BENCHMARK(BM_ApplySpatial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_VpTargets(benchmark::State& state) {
  const vp::Extents3 volume = vp::Extents3::cube(128);
  vp::Rng rng = vp::make_stream(3, vp::StreamTag::kInspect);
  vp::CropPlacement p;
  p.offset = {10, 20, 30};
  p.extents = p.crop_extents = vp::Extents3::cube(64);
  p.landmark = vp::make_landmark(volume, 0.1, rng);
  const vp::OriginPointSet origins = vp::make_origin_points(p.crop_extents, vp::OriginLayout::center_plus_corners());
  const vp::TransformRecord t{{vp::Flip{vp::Axis::kX}, vp::Rot90{vp::Plane::kXY, 3}}};
  const double radius = vp::circumscribing_radius(volume);
  for (auto _ : state) benchmark::DoNotOptimize(vp::vp_targets(p, t, origins, p.landmark, radius));
}
BENCHMARK(BM_VpTargets);

void BM_TinyForward(benchmark::State& state) {
  vp::configure_determinism(false);
  vp::RunConfig cfg;
  vp::VectorPoseNet net = vp::make_network(cfg.pretrain_network(), vp::NetworkMode::kPretrain, 0);
  net->eval();
  torch::NoGradGuard no_grad;
  const std::int64_t e = state.range(0);
  const torch::Tensor x = torch::rand({1, 1, e, e, e});
  for (auto _ : state) benchmark::DoNotOptimize(net->forward_pretrain(x));
}
BENCHMARK(BM_TinyForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
