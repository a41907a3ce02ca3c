#include "vectorpose/finetune.hpp"

#include <cmath>
#include <numbers>

#include "vectorpose/checkpoint.hpp"
#include "vectorpose/network.hpp"
#include "vectorpose/pipeline.hpp"
#include "vectorpose/pretrain.hpp"
#include "vectorpose/spatial.hpp"

namespace vectorpose {

std::size_t label_subset_size(double fraction, std::size_t train_count) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("label fraction must lie in (0, 1]");
  // The small epsilon keeps 0.1 * 10 at 1 rather than 0.9999...
  const auto n = static_cast<std::size_t>(std::floor(fraction * double(train_count) + 1e-9));
  if (n == 0) {
    throw InvalidArgument("label fraction " + std::to_string(fraction) + " of " + std::to_string(train_count) +
                          " training volumes leaves none");
  }
  return n;
}

Extents3 finetune_crop_extents(Extents3 configured, Extents3 volume, std::int64_t stride) {
  Extents3 out;
  for (int a = 0; a < 3; ++a) {
    out[a] = std::min(configured[a], volume[a]) / stride * stride;
    if (out[a] == 0) {
      throw InvalidArgument("volume " + to_string(volume) + " is smaller than the network stride " +
                            std::to_string(stride));
    }
  }
  return out;
}

void gaussian_blur(Grid3f& grid, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) norm += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& k : kernel) k /= norm;

  const Extents3 e = grid.extents();
  Grid3f tmp(e);
  for (int axis = 0; axis < 3; ++axis) {
    for (std::int64_t z = 0; z < e.z; ++z) {
      for (std::int64_t y = 0; y < e.y; ++y) {
        for (std::int64_t x = 0; x < e.x; ++x) {
          const std::int64_t p[3] = {x, y, z};
          double acc = 0.0;
          for (int i = -radius; i <= radius; ++i) {
            std::int64_t q[3] = {x, y, z};
            q[axis] = std::clamp<std::int64_t>(p[axis] + i, 0, e[axis] - 1);
            acc += kernel[i + radius] * grid(q[0], q[1], q[2]);
          }
          tmp(x, y, z) = float(acc);
        }
      }
    }
    std::swap(grid, tmp);
  }
}

FinetuneSample build_finetune_sample(const LabeledVolume& item, const FinetuneConfig& cfg, Extents3 crop,
                                     std::uint64_t run_seed, std::uint64_t index) {
  Rng rng = make_stream(run_seed, StreamTag::kFinetuneSample, index);
  const Extents3 shape = item.volume.shape();
  Extents3 offset;
  for (int a = 0; a < 3; ++a) offset[a] = uniform_int(rng, 0, shape[a] - crop[a]);
  FinetuneSample s{extract_box(item.volume.data, offset, crop), extract_box(item.labels, offset, crop)};

  TransformRecord flips;
  for (Axis axis : {Axis::kX, Axis::kY, Axis::kZ}) {
    if (bernoulli(rng, cfg.flip_prob)) flips.ops.push_back(Flip{axis});
  }
  if (!flips.empty()) {
    s.image = apply_spatial(s.image, flips);
    s.labels = apply_spatial(s.labels, flips);
  }
  if (bernoulli(rng, cfg.brightness_prob)) {
    const double factor = 1.0 + uniform(rng, -cfg.brightness_range, cfg.brightness_range);
    for (float& v : s.image.values()) v = float(v * factor);
  }
  if (bernoulli(rng, cfg.gamma_prob)) {
    const double g = uniform(rng, cfg.gamma_range[0], cfg.gamma_range[1]);
    for (float& v : s.image.values()) v = float(std::pow(std::clamp(double(v), 0.0, 1.0), g));
  }
  if (bernoulli(rng, cfg.blur_prob)) gaussian_blur(s.image, uniform(rng, cfg.blur_sigma[0], cfg.blur_sigma[1]));
  return s;
}

torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& labels, double dice_weight) {
  const std::int64_t classes = logits.size(1);
  torch::Tensor loss = torch::nn::functional::cross_entropy(logits, labels);
  if (dice_weight == 0.0) return loss;
  const torch::Tensor probs = torch::softmax(logits, 1);
  const torch::Tensor onehot = torch::one_hot(labels, classes).permute({0, 4, 1, 2, 3}).to(probs.dtype());
  const std::vector<std::int64_t> reduce{0, 2, 3, 4};
  const torch::Tensor inter = (probs * onehot).sum(reduce);
  const torch::Tensor denom = probs.sum(reduce) + onehot.sum(reduce);
  constexpr double eps = 1e-5;
  const torch::Tensor dice = (2.0 * inter + eps) / (denom + eps);
  return loss + dice_weight * (1.0 - dice.slice(0, 1).mean());
}

LabelGrid predict_labels(VectorPoseNet& net, const Volume& volume) {
  const Extents3 e = volume.shape();
  const std::int64_t s = net->config().total_stride();
  auto up = [s](std::int64_t v) { return (v + s - 1) / s * s; };
  torch::NoGradGuard no_grad;
  torch::Tensor x = torch::from_blob(const_cast<float*>(volume.data.data()), {1, 1, e.z, e.y, e.x}, torch::kFloat32);
  x = torch::constant_pad_nd(x, {0, up(e.x) - e.x, 0, up(e.y) - e.y, 0, up(e.z) - e.z}, 0.0);
  torch::Tensor pred = net->forward_segment(x).argmax(1)[0];
  pred = pred.slice(0, 0, e.z).slice(1, 0, e.y).slice(2, 0, e.x).to(torch::kInt32).contiguous();
  const std::int32_t* p = pred.data_ptr<std::int32_t>();
  return LabelGrid(e, std::vector<std::int32_t>(p, p + e.voxels()));
}

DiceResult evaluate_split(VectorPoseNet& net, const std::vector<LabeledVolume>& items, int num_classes) {
  if (items.empty()) throw InvalidArgument("evaluate_split: no volumes");
  const bool was_training = net->is_training();
  net->eval();
  std::vector<DiceResult> results;
  for (const LabeledVolume& item : items) {
    if (item.labels.empty()) throw InvalidArgument("volume " + item.volume.id + " has no labels");
    results.push_back(dice_score(predict_labels(net, item.volume), item.labels, num_classes));
  }
  net->train(was_training);
  return average_dice(results);
}

std::uint64_t finetune_run_seed(std::uint64_t seed, int run) {
  return make_stream(seed, StreamTag::kFinetuneSample, std::uint64_t(run))();
}

namespace {

std::vector<torch::Tensor> snapshot(VectorPoseNet& net) {
  std::vector<torch::Tensor> out;
  for (const auto& p : net->parameters()) out.push_back(p.detach().clone());
  for (const auto& b : net->buffers()) out.push_back(b.detach().clone());
  return out;
}

void restore(VectorPoseNet& net, const std::vector<torch::Tensor>& saved) {
  torch::NoGradGuard no_grad;
  std::size_t i = 0;
  for (auto& p : net->parameters()) p.copy_(saved[i++]);
  for (auto& b : net->buffers()) b.copy_(saved[i++]);
}

torch::Tensor stack_labels(const std::vector<FinetuneSample>& batch) {
  const Extents3 e = batch.front().labels.extents();
  torch::Tensor out = torch::empty({std::int64_t(batch.size()), e.z, e.y, e.x}, torch::kInt64);
  std::int64_t* dst = out.data_ptr<std::int64_t>();
  for (const FinetuneSample& s : batch) dst = std::copy(s.labels.data(), s.labels.data() + s.labels.size(), dst);
  return out;
}

}  // namespace

FinetuneRunResult finetune_run(const RunConfig& cfg, const DatasetSplits& data, int run,
                               const FinetuneOptions& options) {
  const FinetuneConfig& f = cfg.finetune;
  const int classes = cfg.data.num_classes;
  const std::size_t n = label_subset_size(f.fraction, data.train.size());
  if (data.val.empty()) throw InvalidArgument("fine-tuning needs a validation split");
  const std::vector<LabeledVolume> subset(data.train.begin(), data.train.begin() + std::ptrdiff_t(n));
  for (const LabeledVolume& item : subset) {
    if (item.labels.empty()) throw InvalidArgument("training volume " + item.volume.id + " has no labels");
  }

  FinetuneRunResult result;
  result.run = run;
  result.seed = finetune_run_seed(f.seed, run);
  VectorPoseNet net = make_network(cfg.segment_network(), NetworkMode::kSegment, result.seed);
  if (options.pretrained) {
    VectorPoseNet source = options.pretrained;  // shares the module
    transfer_weights(source, net);
  }
  torch::optim::AdamW optimizer(net->parameters(),
                                torch::optim::AdamWOptions(f.learning_rate).weight_decay(f.weight_decay));

  // All crops of a batch must share extents, so fit them to the smallest volume.
  Extents3 smallest = subset.front().volume.shape();
  for (const LabeledVolume& item : subset) {
    for (int a = 0; a < 3; ++a) smallest[a] = std::min(smallest[a], item.volume.shape()[a]);
  }
  const Extents3 crop = finetune_crop_extents(f.crop_extents, smallest, net->config().total_stride());

  const std::uint64_t per_epoch = std::uint64_t(n) * std::uint64_t(f.crops_per_volume);
  const std::uint64_t B = std::uint64_t(f.batch_size);
  const std::int64_t steps_per_epoch = std::int64_t((per_epoch + B - 1) / B);
  OrderedPrefetcher<FinetuneSample> loader(
      [&](std::uint64_t i) { return build_finetune_sample(subset[i % n], f, crop, result.seed, i); }, 0,
      effective_workers(cfg.output), std::size_t(cfg.output.prefetch) * B);

  std::vector<torch::Tensor> best;
  result.best_val_dice = -1.0;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= f.epochs; ++epoch) {
    net->train();
    double loss_sum = 0.0;
    std::uint64_t left = per_epoch;
    while (left > 0) {
      const std::uint64_t count = std::min(left, B);
      left -= count;
      std::vector<FinetuneSample> batch;
      std::vector<const Grid3f*> images;
      for (std::uint64_t i = 0; i < count; ++i) batch.push_back(loader.next());
      for (const FinetuneSample& s : batch) images.push_back(&s.image);

      double lr = f.learning_rate;
      if (f.schedule == "cosine") {
        const double t = double(step) / (double(f.epochs) * double(steps_per_epoch));
        lr = 0.5 * f.learning_rate * (1.0 + std::cos(std::numbers::pi * std::min(1.0, t)));
      }
      for (auto& group : optimizer.param_groups()) group.options().set_lr(lr);

      const torch::Tensor loss = segmentation_loss(net->forward_segment(stack_grids(images)), stack_labels(batch),
                                                   f.dice_weight);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        throw DivergedTraining("non-finite fine-tuning loss in run " + std::to_string(run) + " at step " +
                                   std::to_string(step),
                               {});
      }
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      loss_sum += value;
      ++step;
    }

    const DiceResult val = evaluate_split(net, data.val, classes);
    if (options.metrics) {
      MetricRecord r;
      r.kind = "finetune";
      r.step = step;
      r.epoch = epoch;
      r.run = run;
      r.train_loss = loss_sum / double(steps_per_epoch);
      r.dice_per_class = val.per_class;
      r.dice_mean = val.mean;
      options.metrics->write(std::move(r));
    }
    if (val.mean > result.best_val_dice) {
      result.best_val_dice = val.mean;
      result.best_epoch = epoch;
      best = snapshot(net);
      if (options.checkpoint_dir) {
        CheckpointMeta meta;
        meta.kind = "finetune";
        meta.run_config = to_json(cfg);
        meta.network = net->config();
        meta.mode = NetworkMode::kSegment;
        meta.step = step;
        meta.epoch = epoch;
        meta.run = run;
        meta.best_dice = val.mean;
        meta.best_epoch = epoch;
        save_checkpoint(*options.checkpoint_dir / ("finetune_run" + std::to_string(run) + "_best.pt"), net, nullptr,
                        meta);
      }
    }
  }

  if (!best.empty()) restore(net, best);
  if (!data.test.empty()) {
    result.test = evaluate_split(net, data.test, classes);
    if (options.metrics) {
      MetricRecord r;
      r.kind = "evaluate";
      r.step = step;
      r.epoch = result.best_epoch;
      r.run = run;
      r.dice_per_class = result.test.per_class;
      r.dice_mean = result.test.mean;
      options.metrics->write(std::move(r));
    }
  }
  return result;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(var / double(v.size() - 1)) : 0.0};
}

}  // namespace

FinetuneSummary finetune(const RunConfig& cfg, const DatasetSplits& data, const FinetuneOptions& options) {
  if (cfg.finetune.runs < 1) throw InvalidArgument("finetune.runs must be positive");
  FinetuneSummary s;
  std::vector<double> val, test;
  for (int run = 0; run < cfg.finetune.runs; ++run) {
    s.runs.push_back(finetune_run(cfg, data, run, options));
    val.push_back(s.runs.back().best_val_dice);
    test.push_back(s.runs.back().test.mean);
  }
  std::tie(s.mean_best_val, s.std_best_val) = mean_std(val);
  std::tie(s.mean_test, s.std_test) = mean_std(test);
  return s;
}

}  // namespace vectorpose
