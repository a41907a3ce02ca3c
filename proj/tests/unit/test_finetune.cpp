#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <set>

#include "support/tiny.hpp"
#include "vectorpose/ablation.hpp"
#include "vectorpose/dataset.hpp"
#include "vectorpose/finetune.hpp"
#include "vectorpose/pretrain.hpp"
#include "vectorpose/volume_io.hpp"

using namespace vectorpose;
namespace fs = std::filesystem;

TEST(LabelSubset, FloorOfFractionTimesCount) {
  EXPECT_EQ(label_subset_size(0.1, 12), 1u);
  EXPECT_EQ(label_subset_size(0.25, 12), 3u);
  EXPECT_EQ(label_subset_size(0.5, 12), 6u);
  EXPECT_EQ(label_subset_size(1.0, 12), 12u);
  EXPECT_EQ(label_subset_size(0.1, 10), 1u);
  EXPECT_THROW(label_subset_size(0.05, 12), InvalidArgument);
  EXPECT_THROW(label_subset_size(0.0, 12), InvalidArgument);
}

TEST(FinetuneCrop, ClampsToVolumeAndStride) {
  EXPECT_EQ(finetune_crop_extents({128, 128, 64}, Extents3::cube(48), 16), Extents3::cube(48));
  EXPECT_EQ(finetune_crop_extents({128, 128, 64}, {200, 50, 70}, 16), (Extents3{128, 48, 64}));
  EXPECT_THROW(finetune_crop_extents({128, 128, 64}, {8, 64, 64}, 16), InvalidArgument);
}

TEST(Dataset, PhantomSplitsAreDeterministic) {
  const RunConfig cfg = fixtures::tiny_config();
  const DatasetSplits a = make_phantom_dataset(cfg.data), b = make_phantom_dataset(cfg.data);
  ASSERT_EQ(a.train.size(), 2u);
  ASSERT_EQ(a.val.size(), 2u);
  ASSERT_EQ(a.test.size(), 2u);
  EXPECT_EQ(a.train[0].volume.data, b.train[0].volume.data);
  EXPECT_EQ(a.test[1].labels, b.test[1].labels);
  EXPECT_NE(a.train[0].volume.data, a.train[1].volume.data);
  EXPECT_TRUE(a.train[0].volume.normalized);
}

TEST(Dataset, WrittenPhantomsLoadBackIdentically) {
  const RunConfig cfg = fixtures::tiny_config();
  const fs::path dir = fs::temp_directory_path() / "vectorpose_phantom_dir";
  fs::remove_all(dir);
  EXPECT_EQ(write_phantoms(dir, cfg.data), 6);
  const DatasetSplits from_disk = load_dataset_dir(dir, cfg.data, true);
  const DatasetSplits direct = make_phantom_dataset(cfg.data);
  ASSERT_EQ(from_disk.test.size(), 2u);
  EXPECT_EQ(from_disk.test[1].volume.data, direct.test[1].volume.data);
  EXPECT_EQ(from_disk.train[0].labels, direct.train[0].labels);
  EXPECT_EQ(from_disk.train[0].volume.id, "phantom_000");
  fs::remove_all(dir / "labels");
  EXPECT_THROW(load_dataset_dir(dir, cfg.data, true), IoError);
  EXPECT_NO_THROW(load_dataset_dir(dir, cfg.data, false));
  fs::remove_all(dir);
}

TEST(FinetuneSample, DeterministicAndLabelAligned) {
  const RunConfig cfg = fixtures::tiny_config();
  const DatasetSplits data = make_phantom_dataset(cfg.data);
  FinetuneConfig f = cfg.finetune;
  f.flip_prob = 1.0;
  f.brightness_prob = f.gamma_prob = f.blur_prob = 0.0;
  const FinetuneSample a = build_finetune_sample(data.train[0], f, Extents3::cube(24), 3, 0);
  const FinetuneSample b = build_finetune_sample(data.train[0], f, Extents3::cube(24), 3, 0);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.labels, b.labels);
  // All three flips applied to the full volume: voxel (0,0,0) comes from the far corner.
  EXPECT_EQ(a.image(0, 0, 0), data.train[0].volume.data(23, 23, 23));
  EXPECT_EQ(a.labels(1, 2, 3), data.train[0].labels(22, 21, 20));
}

TEST(FinetuneSample, BlurPreservesConstantsAndMass) {
  Grid3f g(Extents3::cube(6), 0.25f);
  gaussian_blur(g, 1.0);
  for (float v : g.values()) EXPECT_NEAR(v, 0.25f, 1e-6);
}

TEST(SegmentationLoss, PerfectLogitsGiveNearZero) {
  torch::Tensor labels = torch::randint(0, 3, {2, 4, 4, 4}, torch::kInt64);
  torch::Tensor logits = 50.0 * torch::one_hot(labels, 3).permute({0, 4, 1, 2, 3}).to(torch::kFloat32);
  EXPECT_LT(segmentation_loss(logits, labels, 1.0).item<double>(), 1e-6);
  EXPECT_GT(segmentation_loss(torch::zeros_like(logits), labels, 1.0).item<double>(), 1.0);
}

TEST(Finetune, PredictionPadsToTheStride) {
  RunConfig cfg = fixtures::tiny_config();
  auto net = make_network(cfg.segment_network(), NetworkMode::kSegment, 0);
  Volume v;
  v.data = Grid3f({10, 9, 7}, 0.5f);
  const LabelGrid pred = predict_labels(net, v);
  EXPECT_EQ(pred.extents(), (Extents3{10, 9, 7}));
  for (std::int32_t l : pred.values()) EXPECT_TRUE(l >= 0 && l < cfg.data.num_classes);
}

TEST(Finetune, RunsUseDistinctSeedsAndWriteMetrics) {
  configure_determinism(true);
  RunConfig cfg = fixtures::tiny_config();
  cfg.finetune.runs = 3;
  const DatasetSplits data = make_phantom_dataset(cfg.data);
  const fs::path metrics = fs::temp_directory_path() / "vectorpose_ft_metrics.jsonl";
  fs::remove(metrics);
  FinetuneSummary s;
  {
    MetricsWriter w(metrics, false);
    FinetuneOptions o;
    o.metrics = &w;
    s = finetune(cfg, data, o);
  }
  std::set<std::uint64_t> seeds;
  for (const auto& r : s.runs) seeds.insert(r.seed);
  EXPECT_EQ(seeds.size(), 3u);
  std::ifstream in(metrics);
  std::string line;
  std::set<int> runs;
  while (std::getline(in, line)) runs.insert(nlohmann::json::parse(line)["run"].get<int>());
  EXPECT_EQ(runs, (std::set<int>{0, 1, 2}));
  for (const auto& r : s.runs) {
    EXPECT_GE(r.best_val_dice, 0.0);
    EXPECT_LE(r.best_val_dice, 1.0);
  }
  fs::remove(metrics);
}

TEST(Finetune, TransfersPretrainedBody) {
  RunConfig cfg = fixtures::tiny_config();
  const DatasetSplits data = make_phantom_dataset(cfg.data);
  PretrainState state = init_pretrain_state(cfg);
  FinetuneOptions o;
  o.pretrained = state.net;
  EXPECT_NO_THROW(finetune_run(cfg, data, 0, o));
  RunConfig other = cfg;
  other.network.base_channels = 8;
  EXPECT_THROW(finetune_run(other, data, 0, o), IncompatibleCheckpoint);
}

TEST(Ablation, SixCellsInTableOrder) {
  const auto cells = standard_cells();
  ASSERT_EQ(cells.size(), 6u);
  std::vector<int> n;
  for (const auto& c : cells) n.push_back(c.n_vectors());
  EXPECT_EQ(n, (std::vector<int>{0, 0, 1, 2, 5, 9}));
  const RunConfig base;
  EXPECT_EQ(cells[0].apply(base).pretrain.alpha, 0.0);
  EXPECT_EQ(cells[0].apply(base).pretrain.lambda, 1.0);
  EXPECT_EQ(cells[1].apply(base).pretrain.alpha, 5.0);
  EXPECT_EQ(cells[5].apply(base).pretrain.lambda, 0.5);
  EXPECT_THROW(ablation_cell("corner3"), InvalidArgument);
}

TEST(Ablation, ProducesOneRowPerCellInOrder) {
  configure_determinism(true);
  RunConfig cfg = fixtures::tiny_config();
  const DatasetSplits data = make_phantom_dataset(cfg.data);
  AblationOptions o;
  o.seeds = {0, 1};
  o.pretrain_per_seed = false;
  const auto rows = run_ablation(cfg, data, {ablation_cell("voxel"), ablation_cell("corner8")}, o);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].cell.name, "voxel");
  EXPECT_EQ(rows[1].best_val_dice.size(), 2u);
  const fs::path csv = fs::temp_directory_path() / "vectorpose_ablation.csv";
  write_ablation_csv(csv, rows);
  std::ifstream in(csv);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) ++count;
  EXPECT_EQ(count, 3);
  fs::remove(csv);
}
