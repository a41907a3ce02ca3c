#include "vectorpose/network.hpp"

#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "vectorpose/rng.hpp"

namespace vectorpose {
namespace F = torch::nn::functional;

std::string to_string(EncoderVariant v) { return v == EncoderVariant::kTiny ? "TINY" : "RESNET50_3D"; }
std::string to_string(VpSource s) { return s == VpSource::kEncoder ? "encoder" : "decoder"; }

EncoderVariant encoder_variant_from_string(const std::string& s) {
  if (s == "TINY") return EncoderVariant::kTiny;
  if (s == "RESNET50_3D") return EncoderVariant::kResNet50;
  throw InvalidArgument("unknown encoder variant '" + s + "' (expected TINY or RESNET50_3D)");
}

VpSource vp_source_from_string(const std::string& s) {
  if (s == "encoder") return VpSource::kEncoder;
  if (s == "decoder") return VpSource::kDecoder;
  throw InvalidArgument("unknown vp source '" + s + "' (expected encoder or decoder)");
}

std::vector<std::int64_t> NetworkConfig::stage_strides() const {
  const int stages = variant == EncoderVariant::kTiny ? tiny_stages : 5;
  std::vector<std::int64_t> s;
  for (int i = 0; i < stages; ++i) s.push_back(std::int64_t{2} << i);
  return s;
}

bool NetworkConfig::same_body(const NetworkConfig& o) const {
  return variant == o.variant && base_channels == o.base_channels && norm_groups == o.norm_groups &&
         (variant != EncoderVariant::kTiny || tiny_stages == o.tiny_stages);
}

void validate(const NetworkConfig& c) {
  if (c.base_channels < 1) throw InvalidArgument("network: base_channels must be positive");
  if (c.variant == EncoderVariant::kTiny && (c.tiny_stages < 1 || c.tiny_stages > 6)) {
    throw InvalidArgument("network: tiny_stages must lie in [1, 6]");
  }
  if (c.norm_groups < 1) throw InvalidArgument("network: norm_groups must be positive");
  if (c.vp_hidden < 1) throw InvalidArgument("network: vp_hidden must be positive");
  if (c.n_vectors < 0) throw InvalidArgument("network: n_vectors must be non-negative");
  if (c.bfr_channels != 2) throw InvalidArgument("network: bfr_channels must be 2 (voxel + boundary)");
  if (c.seg_classes != 0 && c.seg_classes < 2) throw InvalidArgument("network: seg_classes must be 0 or >= 2");
}

namespace {

int groups_for(std::int64_t channels, int max_groups) {
  return static_cast<int>(std::gcd<std::int64_t>(channels, max_groups));
}

torch::nn::Conv3d pointwise(std::int64_t in, std::int64_t out) {
  return torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, 1));
}

}  // namespace

ConvNormActImpl::ConvNormActImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                                 int groups) {
  conv_ = register_module(
      "conv", torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, kernel).stride(stride).padding(kernel / 2).bias(false)));
  norm_ = register_module("norm", torch::nn::GroupNorm(groups_for(out, groups), out));
}

torch::Tensor ConvNormActImpl::forward(const torch::Tensor& x) { return torch::relu(norm_(conv_(x))); }

BottleneckImpl::BottleneckImpl(std::int64_t in, std::int64_t planes, std::int64_t stride, int groups) {
  const std::int64_t out = planes * 4;
  reduce_ = register_module("reduce", ConvNormAct(in, planes, 1, 1, groups));
  spatial_ = register_module("spatial", ConvNormAct(planes, planes, 3, stride, groups));
  expand_ = register_module("expand", torch::nn::Conv3d(torch::nn::Conv3dOptions(planes, out, 1).bias(false)));
  expand_norm_ = register_module("expand_norm", torch::nn::GroupNorm(groups_for(out, groups), out));
  if (in != out || stride != 1) {
    shortcut_ = register_module(
        "shortcut",
        torch::nn::Sequential(torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, 1).stride(stride).bias(false)),
                              torch::nn::GroupNorm(groups_for(out, groups), out)));
  }
}

torch::Tensor BottleneckImpl::forward(const torch::Tensor& x) {
  const torch::Tensor y = expand_norm_(expand_(spatial_(reduce_(x))));
  return torch::relu(y + (shortcut_ ? shortcut_->forward(x) : x));
}

EncoderImpl::EncoderImpl(const NetworkConfig& cfg) {
  const int g = cfg.norm_groups;
  const std::int64_t b = cfg.base_channels;
  if (cfg.variant == EncoderVariant::kTiny) {
    std::int64_t in = 1;
    for (int s = 0; s < cfg.tiny_stages; ++s) {
      const std::int64_t c = b << s;
      stages_.push_back(torch::nn::Sequential(ConvNormAct(in, c, 3, 2, g), ConvNormAct(c, c, 3, 1, g)));
      channels_.push_back(c);
      in = c;
    }
  } else {
    // 3D ResNet-50: stem at stride 2, then [3, 4, 6, 3] bottlenecks at strides 4..32.
    stages_.push_back(torch::nn::Sequential(ConvNormAct(1, b, 7, 2, g)));
    channels_.push_back(b);
    const int blocks[4] = {3, 4, 6, 3};
    std::int64_t in = b;
    for (int s = 0; s < 4; ++s) {
      const std::int64_t planes = b << s;
      torch::nn::Sequential stage;
      if (s == 0) stage->push_back(torch::nn::MaxPool3d(torch::nn::MaxPool3dOptions(3).stride(2).padding(1)));
      for (int k = 0; k < blocks[s]; ++k) {
        stage->push_back(Bottleneck(in, planes, (k == 0 && s > 0) ? 2 : 1, g));
        in = planes * 4;
      }
      stages_.push_back(stage);
      channels_.push_back(in);
    }
  }
  for (std::size_t s = 0; s < stages_.size(); ++s) register_module("stage" + std::to_string(s), stages_[s]);
}

std::vector<torch::Tensor> EncoderImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> out;
  torch::Tensor h = x;
  for (auto& stage : stages_) {
    h = stage->forward(h);
    out.push_back(h);
  }
  return out;
}

DecoderImpl::DecoderImpl(const NetworkConfig& cfg, const std::vector<std::int64_t>& enc) {
  const std::size_t levels = enc.size();
  widths_.push_back(cfg.base_channels);
  for (std::size_t s = 0; s < levels; ++s) {
    widths_.push_back(std::min<std::int64_t>(enc[s], std::int64_t{cfg.base_channels} << s));
  }
  lateral_.resize(levels + 1, nullptr);
  up_.resize(levels, nullptr);
  for (std::size_t l = 1; l <= levels; ++l) {
    if (enc[l - 1] != widths_[l]) {
      lateral_[l] = register_module("lateral" + std::to_string(l), pointwise(enc[l - 1], widths_[l]));
    }
  }
  for (std::size_t l = 0; l < levels; ++l) {
    if (widths_[l + 1] != widths_[l]) {
      up_[l] = register_module("up" + std::to_string(l), pointwise(widths_[l + 1], widths_[l]));
    }
    fuse_.push_back(register_module("fuse" + std::to_string(l), ConvNormAct(widths_[l], widths_[l], 3, 1, cfg.norm_groups)));
  }
}

torch::Tensor DecoderImpl::forward(const std::vector<torch::Tensor>& f, torch::IntArrayRef input_size) {
  const std::size_t levels = f.size();
  torch::Tensor x = lateral_[levels] ? lateral_[levels](f[levels - 1]) : f[levels - 1];
  for (std::size_t l = levels; l-- > 0;) {
    const std::vector<std::int64_t> size = l >= 1 ? f[l - 1].sizes().slice(2).vec() : input_size.vec();
    x = F::interpolate(x, F::InterpolateFuncOptions().size(size).mode(torch::kTrilinear).align_corners(false));
    if (up_[l]) x = up_[l](x);
    if (l >= 1) x = x + (lateral_[l] ? lateral_[l](f[l - 1]) : f[l - 1]);
    x = fuse_[l](x);
  }
  return x;
}

VectorPoseNetImpl::VectorPoseNetImpl(NetworkConfig cfg, NetworkMode mode) : cfg_(cfg), mode_(mode) {
  validate(cfg_);
  encoder_ = register_module("encoder", Encoder(cfg_));
  decoder_ = register_module("decoder", Decoder(cfg_, encoder_->channels()));
  if (mode_ == NetworkMode::kPretrain) {
    if (cfg_.n_vectors > 0) {
      const std::int64_t in = cfg_.vp_source == VpSource::kEncoder ? encoder_->channels().back() : decoder_->out_channels();
      vp_head_ = register_module("vp_head", torch::nn::Sequential(torch::nn::Linear(in, cfg_.vp_hidden), torch::nn::ReLU(),
                                                                 torch::nn::Linear(cfg_.vp_hidden, 3 * cfg_.n_vectors)));
    }
    bfr_head_ = register_module("bfr_head", pointwise(decoder_->out_channels(), cfg_.bfr_channels));
  } else {
    if (cfg_.seg_classes < 2) throw InvalidArgument("network: segmentation mode needs seg_classes >= 2");
    seg_head_ = register_module("seg_head", pointwise(decoder_->out_channels(), cfg_.seg_classes));
  }
}

void VectorPoseNetImpl::check_input(const torch::Tensor& x) const {
  if (x.dim() != 5 || x.size(1) != 1) {
    std::ostringstream msg;
    msg << "network: expected input of shape (B, 1, D, H, W), got " << x.sizes();
    throw InvalidArgument(msg.str());
  }
  const std::int64_t stride = cfg_.total_stride();
  for (int a = 2; a < 5; ++a) {
    if (x.size(a) % stride != 0) {
      std::ostringstream msg;
      msg << "network: input extents " << x.sizes() << " are not divisible by the total stride " << stride;
      throw InvalidArgument(msg.str());
    }
  }
}

PretextOutput VectorPoseNetImpl::forward_pretrain(const torch::Tensor& x) {
  if (mode_ != NetworkMode::kPretrain) throw InvalidArgument("network: built for segmentation, not pretraining");
  check_input(x);
  const std::vector<torch::Tensor> features = encoder_(x);
  const torch::Tensor decoded = decoder_(features, x.sizes().slice(2));
  PretextOutput out;
  out.bfr = bfr_head_(decoded);
  if (vp_head_) {
    const torch::Tensor& source = cfg_.vp_source == VpSource::kEncoder ? features.back() : decoded;
    const torch::Tensor pooled = source.mean({2, 3, 4});
    out.vp = vp_head_->forward(pooled).view({x.size(0), cfg_.n_vectors, 3});
  } else {
    out.vp = torch::zeros({x.size(0), 0, 3}, x.options());
  }
  return out;
}

torch::Tensor VectorPoseNetImpl::forward_segment(const torch::Tensor& x) {
  if (mode_ != NetworkMode::kSegment) throw InvalidArgument("network: built for pretraining, not segmentation");
  check_input(x);
  return seg_head_(decoder_(encoder_(x), x.sizes().slice(2)));
}

VectorPoseNet make_network(const NetworkConfig& cfg, NetworkMode mode, std::uint64_t seed) {
  Rng rng = make_stream(seed, StreamTag::kNetworkInit, 0);
  torch::manual_seed(rng() >> 1);
  return VectorPoseNet(cfg, mode);
}

std::vector<std::string> tensor_names(torch::nn::Module& m) {
  std::vector<std::string> names;
  for (const auto& p : m.named_parameters()) names.push_back(p.key());
  for (const auto& b : m.named_buffers()) names.push_back(b.key());
  return names;
}

namespace {

bool is_body(const std::string& name) { return name.rfind("encoder.", 0) == 0 || name.rfind("decoder.", 0) == 0; }

std::map<std::string, torch::Tensor> body_tensors(torch::nn::Module& m) {
  std::map<std::string, torch::Tensor> out;
  for (const auto& p : m.named_parameters()) {
    if (is_body(p.key())) out[p.key()] = p.value();
  }
  for (const auto& b : m.named_buffers()) {
    if (is_body(b.key())) out[b.key()] = b.value();
  }
  return out;
}

}  // namespace

TransferManifest transfer_weights(VectorPoseNet& from, VectorPoseNet& to) {
  const auto src = body_tensors(*from);
  const auto dst = body_tensors(*to);
  std::vector<std::string> diffs;
  for (const auto& [name, t] : dst) {
    const auto it = src.find(name);
    if (it == src.end()) {
      diffs.push_back(name + ": missing in source");
    } else if (it->second.sizes() != t.sizes()) {
      std::ostringstream msg;
      msg << name << ": shape " << it->second.sizes() << " vs " << t.sizes();
      diffs.push_back(msg.str());
    }
  }
  for (const auto& [name, t] : src) {
    if (!dst.count(name)) diffs.push_back(name + ": missing in target");
  }
  if (!diffs.empty()) throw IncompatibleCheckpoint("encoder/decoder mismatch", diffs);

  TransferManifest manifest;
  torch::NoGradGuard guard;
  for (const auto& [name, t] : dst) {
    t.copy_(src.at(name));
    manifest.transferred.push_back(name);
  }
  for (const std::string& name : tensor_names(*to)) {
    if (!is_body(name)) manifest.fresh.push_back(name);
  }
  return manifest;
}

}  // namespace vectorpose
