#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "vectorpose/config.hpp"
#include "vectorpose/dataset.hpp"
#include "vectorpose/dice.hpp"
#include "vectorpose/metrics.hpp"

namespace vectorpose {

/// floor(fraction * train_count); throws InvalidArgument when that is zero.
std::size_t label_subset_size(double fraction, std::size_t train_count);

/// Crop extents actually used on `volume`: the configured extents clamped to
/// the volume and rounded down to a multiple of the network stride.
Extents3 finetune_crop_extents(Extents3 configured, Extents3 volume, std::int64_t stride);

struct FinetuneSample {
  Grid3f image;
  LabelGrid labels;
};

/// Random crop of one labeled volume followed by flips, brightness, gamma and
/// blur, drawn from the stream (run_seed, kFinetuneSample, index).
FinetuneSample build_finetune_sample(const LabeledVolume& item, const FinetuneConfig& cfg, Extents3 crop,
                                     std::uint64_t run_seed, std::uint64_t index);

void gaussian_blur(Grid3f& grid, double sigma);

/// Cross-entropy plus dice_weight times the soft-Dice loss over foreground classes.
torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& labels, double dice_weight);

/// Whole-volume argmax labels. The input is zero-padded up to the stride.
LabelGrid predict_labels(VectorPoseNet& net, const Volume& volume);

/// Mean Dice of `net` over labeled volumes.
DiceResult evaluate_split(VectorPoseNet& net, const std::vector<LabeledVolume>& items, int num_classes);

struct FinetuneRunResult {
  int run = 0;
  std::uint64_t seed = 0;
  double best_val_dice = 0.0;
  std::int64_t best_epoch = 0;
  DiceResult test;  // best-epoch weights on the test split
};

struct FinetuneSummary {
  std::vector<FinetuneRunResult> runs;
  double mean_best_val = 0.0, std_best_val = 0.0;
  double mean_test = 0.0, std_test = 0.0;
};

struct FinetuneOptions {
  VectorPoseNet pretrained{nullptr};  // null: random initialization
  MetricsWriter* metrics = nullptr;
  std::optional<std::filesystem::path> checkpoint_dir;  // best-epoch checkpoint per run
};

/// Seed of run r: drawn from (finetune.seed, kFinetuneSample, r).
std::uint64_t finetune_run_seed(std::uint64_t seed, int run);

FinetuneRunResult finetune_run(const RunConfig& cfg, const DatasetSplits& data, int run,
                               const FinetuneOptions& options);

/// finetune.runs independent runs with their mean and sample standard deviation.
FinetuneSummary finetune(const RunConfig& cfg, const DatasetSplits& data, const FinetuneOptions& options);

}  // namespace vectorpose
