#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "vectorpose/checkpoint.hpp"
#include "vectorpose/config.hpp"
#include "vectorpose/network.hpp"

using namespace vectorpose;

namespace {

bool all_equal(torch::nn::Module& a, torch::nn::Module& b, const std::string& prefix) {
  auto pa = a.named_parameters(), pb = b.named_parameters();
  for (const auto& item : pa) {
    if (item.key().rfind(prefix, 0) != 0) continue;
    if (!torch::equal(item.value(), pb[item.key()])) return false;
  }
  return true;
}

}  // namespace

TEST(Network, TinyPretrainShapes) {
  NetworkConfig cfg;
  auto net = make_network(cfg, NetworkMode::kPretrain, 0);
  const auto out = net->forward_pretrain(torch::randn({2, 1, 32, 32, 32}));
  EXPECT_EQ(out.vp.sizes(), (std::vector<std::int64_t>{2, 9, 3}));
  EXPECT_EQ(out.bfr.sizes(), (std::vector<std::int64_t>{2, 2, 32, 32, 32}));
}

TEST(Network, SegmentShapesFollowTheInput) {
  NetworkConfig cfg;
  cfg.seg_classes = 7;
  cfg.n_vectors = 0;
  auto net = make_network(cfg, NetworkMode::kSegment, 0);
  const auto y = net->forward_segment(torch::randn({1, 1, 16, 32, 32}));
  EXPECT_EQ(y.sizes(), (std::vector<std::int64_t>{1, 7, 16, 32, 32}));
}

TEST(Network, FinetuneCropShape) {
  NetworkConfig cfg;
  cfg.seg_classes = 7;
  auto net = make_network(cfg, NetworkMode::kSegment, 0);
  torch::NoGradGuard no_grad;
  const auto y = net->forward_segment(torch::zeros({4, 1, 64, 128, 128}));
  EXPECT_EQ(y.sizes(), (std::vector<std::int64_t>{4, 7, 64, 128, 128}));
}

TEST(Network, ResNet50Shapes) {
  NetworkConfig cfg;
  cfg.variant = EncoderVariant::kResNet50;
  EXPECT_EQ(cfg.total_stride(), 32);
  auto net = make_network(cfg, NetworkMode::kPretrain, 0);
  torch::NoGradGuard no_grad;
  const auto out = net->forward_pretrain(torch::randn({1, 1, 32, 32, 32}));
  EXPECT_EQ(out.vp.sizes(), (std::vector<std::int64_t>{1, 9, 3}));
  EXPECT_EQ(out.bfr.sizes(), (std::vector<std::int64_t>{1, 2, 32, 32, 32}));
}

TEST(Network, DecoderSourcedVpHead) {
  NetworkConfig cfg;
  cfg.vp_source = VpSource::kDecoder;
  cfg.n_vectors = 5;
  auto net = make_network(cfg, NetworkMode::kPretrain, 0);
  EXPECT_EQ(net->forward_pretrain(torch::randn({1, 1, 16, 16, 16})).vp.sizes(), (std::vector<std::int64_t>{1, 5, 3}));
}

TEST(Network, NoVectorsGivesAnEmptyVpOutput) {
  NetworkConfig cfg;
  cfg.n_vectors = 0;
  auto net = make_network(cfg, NetworkMode::kPretrain, 0);
  EXPECT_EQ(net->forward_pretrain(torch::randn({2, 1, 16, 16, 16})).vp.sizes(), (std::vector<std::int64_t>{2, 0, 3}));
  for (const auto& name : tensor_names(*net)) EXPECT_EQ(name.rfind("vp_head", 0), std::string::npos) << name;
}

TEST(Network, IndivisibleInputIsRejected) {
  auto net = make_network(NetworkConfig{}, NetworkMode::kPretrain, 0);
  EXPECT_THROW(net->forward_pretrain(torch::randn({1, 1, 30, 32, 32})), InvalidArgument);
  EXPECT_THROW(net->forward_pretrain(torch::randn({1, 2, 32, 32, 32})), InvalidArgument);
}

TEST(Network, InitializationIsSeeded) {
  NetworkConfig cfg;
  auto a = make_network(cfg, NetworkMode::kPretrain, 5);
  auto b = make_network(cfg, NetworkMode::kPretrain, 5);
  auto c = make_network(cfg, NetworkMode::kPretrain, 6);
  EXPECT_TRUE(all_equal(*a, *b, ""));
  EXPECT_FALSE(all_equal(*a, *c, ""));
}

TEST(Network, TransferCopiesEncoderAndDecoderExactly) {
  NetworkConfig pre;
  NetworkConfig seg = pre;
  seg.n_vectors = 0;
  seg.seg_classes = 7;
  auto from = make_network(pre, NetworkMode::kPretrain, 1);
  auto to = make_network(seg, NetworkMode::kSegment, 2);
  EXPECT_FALSE(all_equal(*from, *to, "encoder."));
  const TransferManifest m = transfer_weights(from, to);
  EXPECT_TRUE(all_equal(*from, *to, "encoder."));
  EXPECT_TRUE(all_equal(*from, *to, "decoder."));

  std::size_t body = 0, heads = 0;
  for (const auto& name : tensor_names(*to)) {
    (name.rfind("encoder.", 0) == 0 || name.rfind("decoder.", 0) == 0 ? body : heads) += 1;
  }
  EXPECT_EQ(m.transferred.size(), body);
  EXPECT_EQ(m.fresh.size(), heads);
  EXPECT_EQ(heads, 2u);  // seg_head weight and bias
}

TEST(Network, TransferMismatchNamesTheDifferingTensors) {
  NetworkConfig a;
  NetworkConfig b = a;
  b.base_channels = 16;
  b.seg_classes = 7;
  auto from = make_network(a, NetworkMode::kPretrain, 0);
  auto to = make_network(b, NetworkMode::kSegment, 0);
  try {
    transfer_weights(from, to);
    FAIL() << "expected IncompatibleCheckpoint";
  } catch (const IncompatibleCheckpoint& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.stage0"), std::string::npos) << e.what();
    EXPECT_FALSE(e.differences().empty());
  }
}

TEST(Checkpoint, RoundTripRestoresEveryTensor) {
  NetworkConfig cfg;
  cfg.base_channels = 4;
  auto net = make_network(cfg, NetworkMode::kPretrain, 3);
  torch::optim::AdamW opt(net->parameters(), torch::optim::AdamWOptions(1e-3));
  const auto path = std::filesystem::temp_directory_path() / "vectorpose_ckpt_test.pt";
  CheckpointMeta meta;
  meta.kind = "pretrain";
  meta.network = cfg;
  meta.run_config = to_json(RunConfig{});
  meta.step = 17;
  save_checkpoint(path, net, &opt, meta);

  CheckpointMeta read;
  auto back = load_network(path, &read);
  EXPECT_EQ(read.step, 17);
  EXPECT_EQ(read.network.base_channels, 4);
  EXPECT_TRUE(all_equal(*net, *back, ""));
  EXPECT_NO_THROW(load_optimizer_state(path, opt));
  std::filesystem::remove(path);
}

TEST(Checkpoint, MissingAndCorruptFilesAreIoErrors) {
  EXPECT_THROW(load_network("/nonexistent/ckpt.pt"), IoError);
  const auto path = std::filesystem::temp_directory_path() / "vectorpose_corrupt.pt";
  std::ofstream(path) << "garbage";
  EXPECT_THROW(load_network(path), IoError);
  std::filesystem::remove(path);
}
