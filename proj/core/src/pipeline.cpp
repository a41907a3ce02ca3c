#include "vectorpose/pipeline.hpp"

#include "vectorpose/boundary.hpp"

namespace vectorpose {

SampleSettings sample_settings(const RunConfig& cfg) {
  SampleSettings s;
  s.crop_extents = cfg.pretrain.crop_extents;
  s.n_vectors = cfg.pretrain.n_vectors;
  s.eta = cfg.pretrain.eta;
  s.spatial = cfg.pretrain.spatial_augment && s.n_vectors != 2 && s.n_vectors != 5;
  s.intensity = cfg.pretrain.intensity_augment;
  s.spatial_cfg = cfg.augment.spatial;
  s.intensity_cfg = cfg.augment.intensity;
  s.crop_cfg = cfg.augment.crop;
  s.seed = cfg.pretrain.seed;
  return s;
}

PretrainSample build_pretrain_sample(const Volume& volume, std::size_t volume_index, const SampleSettings& s,
                                     std::uint64_t index) {
  Rng rng = make_stream(s.seed, StreamTag::kPretrainSample, index);
  PretrainSample out;
  out.index = index;
  out.volume_index = volume_index;

  const Landmark landmark = make_landmark(volume.shape(), s.eta, rng);
  CropSample crop = sample_crop(volume, s.crop_extents, s.crop_cfg, rng);
  crop.placement.landmark = landmark;
  out.placement = crop.placement;

  if (s.spatial) out.transform = sample_spatial(rng, s.spatial_cfg, s.crop_extents);
  out.voxel_target = apply_spatial(crop.data, out.transform);

  if (s.n_vectors > 0) {
    const OriginPointSet origins = make_origin_points(s.crop_extents, layout_for_vector_count(s.n_vectors));
    out.vp = vp_targets(out.placement, out.transform, origins, landmark, circumscribing_radius(volume.shape()));
  }
  out.boundary_target = boundary_target(out.voxel_target).magnitude;
  out.input = s.intensity ? apply_intensity(out.voxel_target, s.intensity_cfg, rng) : out.voxel_target;
  return out;
}

}  // namespace vectorpose
