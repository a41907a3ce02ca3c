#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include <torch/torch.h>

#include "vectorpose/checkpoint.hpp"
#include "vectorpose/config.hpp"
#include "vectorpose/metrics.hpp"
#include "vectorpose/pipeline.hpp"

namespace vectorpose {

/// Single-threaded torch and deterministic kernels. Needed for bit-exact reruns.
void configure_determinism(bool deterministic);

/// Stacks crops into a (B, 1, D, H, W) float tensor.
torch::Tensor stack_grids(const std::vector<const Grid3f*>& grids);

struct PretextTargets {
  torch::Tensor vp;        // (B, n, 3) double
  torch::Tensor voxel;     // (B, D, H, W) float
  torch::Tensor boundary;  // (B, D, H, W) float
};

PretextTargets stack_targets(const std::vector<PretrainSample>& batch, int n_vectors);

/// Batch mean of the per-crop objective lambda * L_bfr + (1 - lambda) * L_vp.
/// Forward values and backward gradients both come from the analytic losses
/// module; the returned scalar is differentiable w.r.t. both head outputs.
torch::Tensor pretext_loss(const PretextOutput& out, const PretextTargets& targets, double alpha, double lambda,
                           ReconNorm norm, LossBreakdown* breakdown);

struct PretrainState {
  RunConfig cfg;
  VectorPoseNet net{nullptr};
  std::unique_ptr<torch::optim::AdamW> optimizer;
  std::int64_t step = 0;
  std::int64_t epoch = 0;  // completed epochs
  std::uint64_t samples_consumed = 0;
};

PretrainState init_pretrain_state(const RunConfig& cfg);

/// One optimizer update on a prepared batch. Throws DivergedTraining carrying
/// the batch's sample indices when the loss is not finite; the state is left
/// untouched in that case.
LossBreakdown pretrain_step(PretrainState& state, const std::vector<PretrainSample>& batch);

void save_pretrain_state(const std::filesystem::path& path, PretrainState& state);
PretrainState load_pretrain_state(const std::filesystem::path& path);

/// Epoch loop over a fixed volume set. Sample i of the run uses volume
/// i % volumes and its own RNG stream, so a resumed run replays exactly.
class Pretrainer {
 public:
  Pretrainer(PretrainState& state, const std::vector<Volume>& volumes);

  std::uint64_t samples_per_epoch() const;
  std::int64_t steps_per_epoch() const;

  /// Builds the next batch (never crossing an epoch boundary) and trains on it.
  LossBreakdown step();

  /// Trains until `state.epoch == epochs`. `on_epoch` runs after each epoch.
  void run(int epochs, MetricsWriter* metrics, const std::function<void(PretrainState&)>& on_epoch = {});

 private:
  double learning_rate() const;
  void reset_loader();

  PretrainState& state_;
  const std::vector<Volume>& volumes_;
  SampleSettings settings_;
  std::unique_ptr<OrderedPrefetcher<PretrainSample>> loader_;
  std::uint64_t loader_next_ = 0;
};

}  // namespace vectorpose
