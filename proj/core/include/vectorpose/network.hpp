#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "vectorpose/common.hpp"

namespace vectorpose {

enum class EncoderVariant { kTiny, kResNet50 };
enum class VpSource { kEncoder, kDecoder };

std::string to_string(EncoderVariant v);
std::string to_string(VpSource s);
EncoderVariant encoder_variant_from_string(const std::string& s);
VpSource vp_source_from_string(const std::string& s);

struct NetworkConfig {
  EncoderVariant variant = EncoderVariant::kTiny;
  int base_channels = 8;
  int tiny_stages = 4;  // TINY only; ResNet-50 always has strides 2..32
  int norm_groups = 8;
  int vp_hidden = 256;
  VpSource vp_source = VpSource::kEncoder;
  int n_vectors = 9;
  int bfr_channels = 2;
  int seg_classes = 0;

  /// Stride of each encoder stage relative to the input, shallowest first.
  std::vector<std::int64_t> stage_strides() const;
  std::int64_t total_stride() const { return stage_strides().back(); }
  /// Encoder/decoder fields only; two configs with equal bodies can exchange weights.
  bool same_body(const NetworkConfig& other) const;
};

void validate(const NetworkConfig& cfg);

enum class NetworkMode { kPretrain, kSegment };

struct PretextOutput {
  torch::Tensor vp;   // (B, n, 3)
  torch::Tensor bfr;  // (B, 2, D, H, W)
};

/// Conv3d, GroupNorm, ReLU.
class ConvNormActImpl : public torch::nn::Module {
 public:
  ConvNormActImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride, int groups);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv3d conv_{nullptr};
  torch::nn::GroupNorm norm_{nullptr};
};
TORCH_MODULE(ConvNormAct);

/// ResNet bottleneck: 1x1 reduce, 3x3x3 (strided), 1x1 expand, projected shortcut.
class BottleneckImpl : public torch::nn::Module {
 public:
  BottleneckImpl(std::int64_t in, std::int64_t planes, std::int64_t stride, int groups);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvNormAct reduce_{nullptr}, spatial_{nullptr};
  torch::nn::Conv3d expand_{nullptr};
  torch::nn::GroupNorm expand_norm_{nullptr};
  torch::nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(Bottleneck);

/// Returns one feature map per stage, shallowest first.
class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const NetworkConfig& cfg);
  std::vector<torch::Tensor> forward(const torch::Tensor& x);
  const std::vector<std::int64_t>& channels() const { return channels_; }

 private:
  std::vector<torch::nn::Sequential> stages_;
  std::vector<std::int64_t> channels_;
};
TORCH_MODULE(Encoder);

/// Light decoder: trilinear upsampling and additive fusion, back to input resolution.
class DecoderImpl : public torch::nn::Module {
 public:
  DecoderImpl(const NetworkConfig& cfg, const std::vector<std::int64_t>& encoder_channels);
  torch::Tensor forward(const std::vector<torch::Tensor>& features, torch::IntArrayRef input_size);
  std::int64_t out_channels() const { return widths_.front(); }

 private:
  // Level 0 is full resolution, level l >= 1 is encoder stage l - 1. A null
  // projection means the channel counts already match.
  std::vector<std::int64_t> widths_;
  std::vector<torch::nn::Conv3d> lateral_;  // encoder stage -> decoder width, per level >= 1
  std::vector<torch::nn::Conv3d> up_;       // level l + 1 -> level l
  std::vector<ConvNormAct> fuse_;
};
TORCH_MODULE(Decoder);

/// Encoder E, decoder D and the heads. Parameter names are rooted at
/// encoder.*, decoder.*, vp_head.*, bfr_head.* and seg_head.*.
class VectorPoseNetImpl : public torch::nn::Module {
 public:
  VectorPoseNetImpl(NetworkConfig cfg, NetworkMode mode);

  PretextOutput forward_pretrain(const torch::Tensor& x);
  torch::Tensor forward_segment(const torch::Tensor& x);

  const NetworkConfig& config() const { return cfg_; }
  NetworkMode mode() const { return mode_; }

 private:
  void check_input(const torch::Tensor& x) const;

  NetworkConfig cfg_;
  NetworkMode mode_;
  Encoder encoder_{nullptr};
  Decoder decoder_{nullptr};
  torch::nn::Sequential vp_head_{nullptr};
  torch::nn::Conv3d bfr_head_{nullptr};
  torch::nn::Conv3d seg_head_{nullptr};
};
TORCH_MODULE(VectorPoseNet);

/// Seeds torch's generator from (seed, kNetworkInit) and builds the network.
VectorPoseNet make_network(const NetworkConfig& cfg, NetworkMode mode, std::uint64_t seed);

struct TransferManifest {
  std::vector<std::string> transferred;
  std::vector<std::string> fresh;
};

/// Copies every encoder.* and decoder.* tensor of `from` into `to`. Heads of
/// `to` keep their fresh initialization. Throws IncompatibleCheckpoint naming
/// every differing key when the bodies do not match.
TransferManifest transfer_weights(VectorPoseNet& from, VectorPoseNet& to);

/// Names of all parameters and buffers, for checkpoint and manifest checks.
std::vector<std::string> tensor_names(torch::nn::Module& m);

}  // namespace vectorpose
