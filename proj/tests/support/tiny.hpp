#pragma once

#include "vectorpose/config.hpp"

namespace vectorpose::fixtures {

/// Smallest configuration that still exercises every stage: 24^3 phantoms,
/// a two-stage TINY network (stride 4) and 8^3 pretraining crops.
inline RunConfig tiny_config() {
  RunConfig cfg;
  cfg.data.phantom_count = 6;
  cfg.data.phantom_shape = Extents3::cube(24);
  cfg.data.split = {2, 2, 2};
  cfg.network.tiny_stages = 2;
  cfg.network.base_channels = 4;
  cfg.network.vp_hidden = 16;
  cfg.pretrain.epochs = 1;
  cfg.pretrain.batch_size = 2;
  cfg.pretrain.crop_extents = Extents3::cube(8);
  cfg.pretrain.crops_per_volume = 2;
  cfg.augment.intensity.shuffle_block_extents = Extents3::cube(2);
  cfg.finetune.epochs = 1;
  cfg.finetune.batch_size = 2;
  cfg.finetune.runs = 1;
  cfg.finetune.crops_per_volume = 1;
  cfg.output.checkpoint_every = 0;
  cfg.output.num_workers = 0;
  return cfg;
}

}  // namespace vectorpose::fixtures
