#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/tiny.hpp"
#include "vectorpose/geometry.hpp"
#include "vectorpose/phantom.hpp"
#include "vectorpose/volume_io.hpp"

using namespace vectorpose;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vectorpose_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Result run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(VECTORPOSE_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                          err.string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream s;
  s << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path tiny_config_file(const fs::path& dir) {
  const fs::path p = dir / "tiny.json";
  std::ofstream(p) << to_json(fixtures::tiny_config()).dump(2);
  return p;
}

fs::path phantom_file(const fs::path& dir) {
  const Phantom ph = generate_phantom(default_phantom_spec(1, Extents3::cube(32)));
  const fs::path p = dir / "phantom.vpr";
  save_volume(p, ph.volume);
  return p;
}

std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, MissingConfigExitsWithConfigCode) {
  const fs::path d = scratch("missing");
  const Result r = run("pretrain --config /nonexistent.json --out " + d.string(), d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("config"), std::string::npos);
}

TEST(Cli, LambdaOutOfRangeNamesTheKey) {
  const fs::path d = scratch("lambda");
  const Result r = run("pretrain --config " + tiny_config_file(d).string() + " --set pretrain.lambda=1.5 --out " +
                           (d / "out").string(),
                       d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("pretrain.lambda"), std::string::npos) << r.err;
}

TEST(Cli, UnknownSubcommandOrFlagIsAConfigError) {
  const fs::path d = scratch("flags");
  EXPECT_EQ(run("pretrain --no-such-flag", d).code, 2);
  EXPECT_EQ(run("", d).code, 2);
}

TEST(Cli, FractionOutsideTheStandardSet) {
  const fs::path d = scratch("fraction");
  const std::string base = "finetune --from-scratch --config " + tiny_config_file(d).string() + " --out " +
                           (d / "out").string() + " --deterministic";
  const Result r = run(base + " --fraction 0.07", d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("finetune.fraction"), std::string::npos);
  // Allowed with the escape hatch as long as the floor leaves a volume: 0.5 * 2 = 1.
  EXPECT_EQ(run(base + " --fraction 0.6 --any-fraction", d).code, 0);
}

TEST(Cli, PretrainFinetuneEvaluateChain) {
  const fs::path d = scratch("chain");
  const std::string cfg = tiny_config_file(d).string();
  ASSERT_EQ(run("pretrain --data phantom --config " + cfg + " --seed 7 --deterministic --out " + (d / "pt").string(), d).code,
            0);
  EXPECT_TRUE(fs::exists(d / "pt" / "config.json"));
  EXPECT_TRUE(fs::exists(d / "pt" / "metrics.jsonl"));
  ASSERT_TRUE(fs::exists(d / "pt" / "checkpoints" / "pretrain_final.pt"));

  ASSERT_EQ(run("finetune --config " + cfg + " --checkpoint " + (d / "pt/checkpoints/pretrain_final.pt").string() +
                    " --fraction 1.0 --runs 2 --deterministic --out " + (d / "ft").string(),
                d)
                .code,
            0);
  const std::string table = read(d / "ft" / "tables" / "finetune.csv");
  EXPECT_NE(table.find("mean,"), std::string::npos);
  EXPECT_NE(table.find("std,"), std::string::npos);
  ASSERT_TRUE(fs::exists(d / "ft" / "checkpoints" / "finetune_run1_best.pt"));

  EXPECT_EQ(run("evaluate --checkpoint " + (d / "ft/checkpoints/finetune_run0_best.pt").string() + " --out " +
                    (d / "ev").string(),
                d)
                .code,
            0);
  EXPECT_TRUE(fs::exists(d / "ev" / "tables" / "evaluate.csv"));
  // A pretraining checkpoint is not something evaluate can score.
  EXPECT_EQ(run("evaluate --checkpoint " + (d / "pt/checkpoints/pretrain_final.pt").string() + " --out " +
                    (d / "ev2").string(),
                d)
                .code,
            4);
}

TEST(Cli, IncompatibleCheckpointExitsWithManifestDiff) {
  const fs::path d = scratch("incompatible");
  const std::string cfg = tiny_config_file(d).string();
  ASSERT_EQ(run("pretrain --config " + cfg + " --out " + (d / "pt").string(), d).code, 0);
  const Result r = run("finetune --config " + cfg + " --set network.base_channels=8 --checkpoint " +
                           (d / "pt/checkpoints/pretrain_final.pt").string() + " --out " + (d / "ft").string(),
                       d);
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("encoder.stage0"), std::string::npos) << r.err;
  EXPECT_EQ(run("finetune --config " + cfg + " --checkpoint /nonexistent.pt --out " + (d / "ft").string(), d).code, 4);
}

TEST(Cli, DeterministicRunsAndEchoedConfigReproduceMetrics) {
  const fs::path d = scratch("repro");
  const std::string cfg = tiny_config_file(d).string();
  ASSERT_EQ(run("pretrain --data phantom --config " + cfg + " --seed 7 --deterministic --out " + (d / "a").string(), d).code,
            0);
  ASSERT_EQ(run("pretrain --data phantom --config " + cfg + " --seed 7 --deterministic --out " + (d / "b").string(), d).code,
            0);
  ASSERT_EQ(run("pretrain --config " + (d / "a" / "config.json").string() + " --deterministic --out " +
                    (d / "c").string(),
                d)
                .code,
            0);
  const std::string a = read(d / "a" / "metrics.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, read(d / "b" / "metrics.jsonl"));
  EXPECT_EQ(a, read(d / "c" / "metrics.jsonl"));
}

TEST(Cli, InspectTargetsMatchesTheGeometryModule) {
  const fs::path d = scratch("inspect");
  const fs::path vol = phantom_file(d);
  ASSERT_EQ(run("inspect-targets --volume " + vol.string() + " --crop 4,6,8:16,16,16 --seed 3 --out " +
                    (d / "id").string(),
                d)
                .code,
            0);
  const auto rows = csv_rows(d / "id" / "targets.csv");
  ASSERT_EQ(rows.size(), 9u);

  CropPlacement placement;
  placement.offset = {4, 6, 8};
  placement.extents = placement.crop_extents = Extents3::cube(16);
  Rng rng = make_stream(3, StreamTag::kInspect);
  const Landmark lm = make_landmark(Extents3::cube(32), 0.05, rng);
  const VpTargetSet expect =
      vp_targets(placement, {}, make_origin_points(Extents3::cube(16), OriginLayout::center_plus_corners()), lm,
                 circumscribing_radius(Extents3::cube(32)));
  for (std::size_t m = 0; m < 9; ++m) {
    EXPECT_EQ(rows[m][13], expect.targets[m].r_norm);
    EXPECT_EQ(rows[m][14], expect.targets[m].theta_norm);
    EXPECT_EQ(rows[m][15], expect.targets[m].phi_norm);
  }

  // With a flip the rows are the identity rows permuted by the corner map.
  ASSERT_EQ(run("inspect-targets --volume " + vol.string() + " --crop 4,6,8:16,16,16 --seed 3 --flip x --out " +
                    (d / "fx").string(),
                d)
                .code,
            0);
  const auto flipped = csv_rows(d / "fx" / "targets.csv");
  const std::vector<int> perm = permutation_for({{Flip{Axis::kX}}}, OriginLayout::center_plus_corners());
  for (std::size_t m = 0; m < 9; ++m) {
    for (int c = 13; c < 16; ++c) EXPECT_EQ(flipped[m][c], rows[perm[m]][c]) << m;
  }
}

TEST(Cli, InspectTargetsRejectsCropsOutsideTheVolume) {
  const fs::path d = scratch("inspect_oob");
  const fs::path vol = phantom_file(d);
  EXPECT_EQ(run("inspect-targets --volume " + vol.string() + " --crop 20,0,0:16,16,16 --out " + (d / "o").string(), d)
                .code,
            2);
}

TEST(Cli, InspectTargetsFigures) {
  const fs::path d = scratch("inspect_fig");
  const fs::path vol = phantom_file(d);
  ASSERT_EQ(run("inspect-targets --volume " + vol.string() + " --figures --out " + (d / "o").string(), d).code, 0);
  EXPECT_TRUE(fs::exists(d / "o" / "figures" / "vectors_overlay.png"));
  EXPECT_TRUE(fs::exists(d / "o" / "figures" / "crop_boundary.png"));
}

TEST(Cli, MakePhantomsAndEdges) {
  const fs::path d = scratch("phantoms");
  ASSERT_EQ(run("make-phantoms --count 2 --set data.split=[1,1,0] --set data.phantom_shape=[16,16,16] --out " +
                    (d / "ph").string(),
                d)
                .code,
            0);
  const fs::path v = d / "ph" / "volumes" / "phantom_000.nii.gz";
  ASSERT_TRUE(fs::exists(v));
  EXPECT_TRUE(fs::exists(d / "ph" / "labels" / "phantom_001.nii.gz"));
  ASSERT_EQ(run("edges --volume " + v.string() + " --normalized --out " + (d / "edges.vpr").string() +
                    " --figure " + (d / "edges.png").string(),
                d)
                .code,
            0);
  const Volume e = load_volume(d / "edges.vpr");
  EXPECT_EQ(e.shape(), Extents3::cube(16));
  float hi = 0;
  for (float x : e.data.values()) hi = std::max(hi, x);
  EXPECT_FLOAT_EQ(hi, 1.0f);
  EXPECT_TRUE(fs::exists(d / "edges.png"));
}
