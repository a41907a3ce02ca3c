#pragma once

#include <filesystem>
#include <vector>

#include "vectorpose/config.hpp"
#include "vectorpose/volume.hpp"

namespace vectorpose {

struct LabeledVolume {
  Volume volume;  // normalized
  LabelGrid labels;  // empty when the source had none
};

struct DatasetSplits {
  std::vector<LabeledVolume> train, val, test;
};

/// Phantom i is generated from the seed drawn from (phantom_seed, kPhantom, i)
/// and split in index order: the first split[0] go to train, and so on.
DatasetSplits make_phantom_dataset(const DataConfig& cfg);

/// Reads `dir`/volumes/* and, when present, `dir`/labels/* with matching file
/// names. Files are taken in name order and split by the configured counts.
DatasetSplits load_dataset_dir(const std::filesystem::path& dir, const DataConfig& cfg, bool require_labels);

/// Dispatches on `source`: "phantom" or a directory.
DatasetSplits load_dataset(const DataConfig& cfg, bool require_labels);

std::vector<Volume> volumes_of(const std::vector<LabeledVolume>& items);

/// Writes the phantoms in the layout load_dataset_dir reads. Returns the count.
int write_phantoms(const std::filesystem::path& dir, const DataConfig& cfg);

}  // namespace vectorpose
