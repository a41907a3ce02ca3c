#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "vectorpose/config.hpp"

using namespace vectorpose;
using nlohmann::json;

namespace {

std::string key_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, DefaultsFollowThePublishedProtocol) {
  const RunConfig c;
  EXPECT_EQ(c.pretrain.epochs, 300);
  EXPECT_EQ(c.pretrain.batch_size, 12);
  EXPECT_DOUBLE_EQ(c.pretrain.learning_rate, 2e-4);
  EXPECT_DOUBLE_EQ(c.pretrain.weight_decay, 1e-4);
  EXPECT_EQ(c.pretrain.crop_extents, Extents3::cube(96));
  EXPECT_EQ(c.pretrain.n_vectors, 9);
  EXPECT_DOUBLE_EQ(c.pretrain.eta, 0.05);
  EXPECT_DOUBLE_EQ(c.pretrain.alpha, 5.0);
  EXPECT_DOUBLE_EQ(c.pretrain.lambda, 0.5);
  EXPECT_EQ(c.finetune.epochs, 200);
  EXPECT_EQ(c.finetune.batch_size, 4);
  EXPECT_DOUBLE_EQ(c.finetune.learning_rate, 1e-3);
  EXPECT_DOUBLE_EQ(c.finetune.weight_decay, 1e-3);
  EXPECT_EQ(c.finetune.crop_extents, (Extents3{128, 128, 64}));
  EXPECT_EQ(c.finetune.runs, 8);
  EXPECT_EQ(c.network.vp_hidden, 256);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, UnknownKeyIsRejectedWithItsPath) {
  EXPECT_EQ(key_of([] { run_config_from_json(json::parse(R"({"pretrain": {"lamda": 0.5}})")); }), "pretrain.lamda");
  EXPECT_EQ(key_of([] { run_config_from_json(json::parse(R"({"pretext": {}})")); }), "pretext");
}

TEST(Config, IllTypedValueNamesTheKey) {
  EXPECT_EQ(key_of([] { run_config_from_json(json::parse(R"({"pretrain": {"epochs": "many"}})")); }),
            "pretrain.epochs");
}

TEST(Config, LambdaOutsideUnitIntervalIsAConfigError) {
  const RunConfig c = run_config_from_json(json::parse(R"({"pretrain": {"lambda": 1.5}})"));
  EXPECT_EQ(key_of([&] { validate(c); }), "pretrain.lambda");
}

TEST(Config, CropMustBeDivisibleByTheStride) {
  RunConfig c;
  c.pretrain.crop_extents = Extents3::cube(40);  // TINY has stride 16
  EXPECT_EQ(key_of([&] { validate(c); }), "pretrain.crop_extents");
}

TEST(Config, RoundTripIsLossless) {
  RunConfig c;
  c.pretrain.lambda = 0.25;
  c.pretrain.crop_extents = {32, 48, 64};
  c.network.variant = EncoderVariant::kResNet50;
  c.pretrain.recon_norm = ReconNorm::kL2;
  c.finetune.gamma_range = {0.8, 1.2};
  const json j = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
  EXPECT_EQ(j["pretrain"]["crop_extents"], json::array({32, 48, 64}));
}

TEST(Config, OverridesParseJsonThenFallBackToString) {
  json doc = json::object();
  apply_override(doc, "pretrain.epochs=30");
  apply_override(doc, "data.source=/data/ct");
  apply_override(doc, "pretrain.crop_extents=[16,16,16]");
  const RunConfig c = run_config_from_json(doc);
  EXPECT_EQ(c.pretrain.epochs, 30);
  EXPECT_EQ(c.data.source, "/data/ct");
  EXPECT_EQ(c.pretrain.crop_extents, Extents3::cube(16));
  EXPECT_THROW(apply_override(doc, "no-equals-sign"), ConfigError);
}

TEST(Config, MissingOrMalformedFileIsAConfigError) {
  EXPECT_EQ(key_of([] { load_run_config("/nonexistent/run.json"); }), "config");
  const auto path = std::filesystem::temp_directory_path() / "vectorpose_bad_config.json";
  std::ofstream(path) << "{ not json";
  EXPECT_EQ(key_of([&] { load_run_config(path); }), "config");
  std::filesystem::remove(path);
}

TEST(Config, WorkerCountHonoursEnvironment) {
  OutputConfig o;
  o.num_workers = 3;
  ::unsetenv("VECTORPOSE_NUM_WORKERS");
  EXPECT_EQ(effective_workers(o), 3);
  ::setenv("VECTORPOSE_NUM_WORKERS", "0", 1);
  EXPECT_EQ(effective_workers(o), 0);
  ::setenv("VECTORPOSE_NUM_WORKERS", "two", 1);
  EXPECT_THROW(effective_workers(o), ConfigError);
  ::unsetenv("VECTORPOSE_NUM_WORKERS");
}

TEST(Config, SegmentNetworkSharesTheBody) {
  RunConfig c;
  c.pretrain.n_vectors = 5;
  EXPECT_EQ(c.pretrain_network().n_vectors, 5);
  EXPECT_EQ(c.segment_network().seg_classes, c.data.num_classes);
  EXPECT_TRUE(c.pretrain_network().same_body(c.segment_network()));
}
