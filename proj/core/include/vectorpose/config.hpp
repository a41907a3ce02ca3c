#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "vectorpose/intensity.hpp"
#include "vectorpose/losses.hpp"
#include "vectorpose/network.hpp"
#include "vectorpose/spatial.hpp"
#include "vectorpose/volume.hpp"

namespace vectorpose {

// Extents are written as [x, y, z] everywhere in JSON. A torch tensor of a
// crop has shape (z, y, x), so a (64, 128, 128) crop is [128, 128, 64] here.

struct DataConfig {
  std::string source = "phantom";  // "phantom" or a directory with volumes/ (and labels/)
  int phantom_count = 20;
  Extents3 phantom_shape = Extents3::cube(48);
  std::uint64_t phantom_seed = 0;
  std::array<int, 3> split{12, 4, 4};  // train, val, test volume counts
  double clip_lo_pct = 0.5;
  double clip_hi_pct = 99.5;
  int num_classes = 7;  // background + 6 phantom organs
};

struct AugmentConfig {
  SpatialAugmentConfig spatial;
  IntensityNoiseConfig intensity;
  CropSamplingConfig crop;
};

struct PretrainConfig {
  int epochs = 300;
  int batch_size = 12;
  double learning_rate = 2e-4;
  double weight_decay = 1e-4;
  Extents3 crop_extents = Extents3::cube(96);
  int n_vectors = 9;
  double eta = 0.05;
  double alpha = 5.0;
  double lambda = 0.5;
  ReconNorm recon_norm = ReconNorm::kL1;
  int crops_per_volume = 16;  // one epoch = crops_per_volume crops from every volume
  std::string schedule = "constant";  // or "cosine"
  std::uint64_t seed = 0;
  bool spatial_augment = true;
  bool intensity_augment = true;
};

struct FinetuneConfig {
  int epochs = 200;
  int batch_size = 4;
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  Extents3 crop_extents{128, 128, 64};
  double fraction = 1.0;
  int runs = 8;
  std::uint64_t seed = 0;
  int crops_per_volume = 4;
  std::string schedule = "constant";
  double flip_prob = 0.5;  // per axis
  double brightness_prob = 0.3;
  double brightness_range = 0.1;
  double gamma_prob = 0.3;
  std::array<double, 2> gamma_range{0.7, 1.5};
  double blur_prob = 0.2;
  std::array<double, 2> blur_sigma{0.5, 1.0};
  double dice_weight = 1.0;
};

struct OutputConfig {
  int checkpoint_every = 10;  // epochs; 0 keeps only the final checkpoint
  bool figures = false;
  int num_workers = 1;  // overridden by VECTORPOSE_NUM_WORKERS
  int prefetch = 8;
  bool deterministic = false;
};

struct RunConfig {
  DataConfig data;
  AugmentConfig augment;
  NetworkConfig network;
  PretrainConfig pretrain;
  FinetuneConfig finetune;
  OutputConfig output;

  NetworkConfig pretrain_network() const;
  NetworkConfig segment_network() const;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Full network description including head sizes, as stored in checkpoints.
nlohmann::json to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& doc);

/// Parses a (possibly partial) document over the defaults. Unknown keys and
/// ill-typed values raise ConfigError naming the dotted key.
RunConfig run_config_from_json(const nlohmann::json& doc);

/// The raw JSON object in `path`; ConfigError when missing or malformed.
nlohmann::json read_config_document(const std::filesystem::path& path);

/// Reads, parses and validates. A missing or malformed file is a ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies "section.key=value" to a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Range checks across sections; throws ConfigError naming the first bad key.
void validate(const RunConfig& cfg);

/// Worker count after the VECTORPOSE_NUM_WORKERS override.
int effective_workers(const OutputConfig& cfg);

std::string to_string(ReconNorm n);

}  // namespace vectorpose
