#pragma once

#include <filesystem>
#include <limits>
#include <string>

#include <torch/torch.h>

#include "json.hpp"
#include "vectorpose/network.hpp"

namespace vectorpose {

inline constexpr std::int64_t kCheckpointFormatVersion = 1;

struct CheckpointMeta {
  std::string kind;           // "pretrain" or "finetune"
  nlohmann::json run_config;  // resolved RunConfig of the producing run
  NetworkConfig network;
  NetworkMode mode = NetworkMode::kPretrain;
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  std::uint64_t samples_consumed = 0;
  int run = 0;
  double best_dice = std::numeric_limits<double>::quiet_NaN();
  std::int64_t best_epoch = -1;
};

/// Versioned container: format version, meta JSON, parameters and buffers
/// under their canonical names, and optionally the optimizer state.
void save_checkpoint(const std::filesystem::path& path, VectorPoseNet& net, torch::optim::Optimizer* optimizer,
                     const CheckpointMeta& meta);

/// Throws IoError when unreadable and IncompatibleCheckpoint on a version mismatch.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

/// Rebuilds the network described by the checkpoint and loads its tensors.
VectorPoseNet load_network(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

/// Restores optimizer state saved alongside the network.
void load_optimizer_state(const std::filesystem::path& path, torch::optim::Optimizer& optimizer);

}  // namespace vectorpose
