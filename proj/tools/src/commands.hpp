#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vectorpose::cli {

/// Exit codes; stable across releases.
enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kDiverged = 3, kCheckpoint = 4 };

struct CommonArgs {
  std::string config;
  std::vector<std::string> sets;  // dotted overrides, applied after the config file
  std::optional<std::string> data;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

struct FinetuneArgs {
  std::string checkpoint;
  bool from_scratch = false;
  std::optional<double> fraction;
  bool any_fraction = false;
  std::optional<int> runs;
};

struct InspectArgs {
  std::string volume;
  std::string crop;  // "ox,oy,oz:ex,ey,ez"; empty centers a crop of up to 96^3
  std::uint64_t seed = 0;
  double eta = 0.05;
  int n_vectors = 9;
  std::vector<std::string> flips;
  std::vector<std::string> rots;
  std::string out = "inspect";
  bool figures = false;
};

struct EdgesArgs {
  std::string volume;
  std::string out;
  bool normalized = false;
  bool normalize_input = false;
  std::string figure;
};

struct AblationArgs {
  std::vector<std::string> cells;
  int seeds = 5;
  bool shared_pretrain = false;
};

int cmd_pretrain(const CommonArgs& args, const std::string& resume);
int cmd_finetune(const CommonArgs& args, const FinetuneArgs& ft);
int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint);
int cmd_make_phantoms(const CommonArgs& args, std::optional<int> count);
int cmd_inspect_targets(const InspectArgs& args);
int cmd_edges(const EdgesArgs& args);
int cmd_ablation(const CommonArgs& args, const AblationArgs& ab);

}  // namespace vectorpose::cli
