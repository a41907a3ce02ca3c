#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "vectorpose/common.hpp"

using namespace vectorpose;
using namespace vectorpose::cli;

namespace {

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "JSON run config");
  cmd->add_option("--set", a.sets, "Override a config key, e.g. --set pretrain.epochs=30");
  cmd->add_option("--data", a.data, "'phantom' or a directory with volumes/ and labels/");
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--seed", a.seed, "Seed for pretraining and fine-tuning");
  cmd->add_flag("--deterministic", a.deterministic, "Single-threaded deterministic kernels, no wall time in metrics");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised pretraining of 3D segmentation networks with vector prediction and "
               "boundary-focused reconstruction."};
  app.require_subcommand(1);

  CommonArgs common;
  std::string resume;
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain encoder and decoder on the pretext tasks");
  add_common(pretrain, common);
  pretrain->add_option("--resume", resume, "Continue from a pretraining checkpoint");

  FinetuneArgs ft;
  auto* finetune = app.add_subcommand("finetune", "Fine-tune for segmentation on a fraction of the labels");
  add_common(finetune, common);
  finetune->add_option("--checkpoint", ft.checkpoint, "Pretrained checkpoint to transfer");
  finetune->add_flag("--from-scratch", ft.from_scratch, "Random initialization baseline");
  finetune->add_option("--fraction", ft.fraction, "Label fraction: 0.1, 0.25, 0.5 or 1.0");
  finetune->add_flag("--any-fraction", ft.any_fraction, "Allow fractions outside the standard set");
  finetune->add_option("--runs", ft.runs, "Independent runs");

  std::string eval_checkpoint;
  auto* evaluate = app.add_subcommand("evaluate", "Test-split Dice of a fine-tuned checkpoint");
  add_common(evaluate, common);
  evaluate->add_option("--checkpoint", eval_checkpoint, "Fine-tuned checkpoint")->required();

  std::optional<int> count;
  auto* phantoms = app.add_subcommand("make-phantoms", "Write synthetic phantoms with labels");
  add_common(phantoms, common);
  phantoms->add_option("--count", count, "Number of phantoms");

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect-targets", "Dump the vector targets of one crop");
  inspect_cmd->add_option("--volume", inspect.volume, "Volume file")->required();
  inspect_cmd->add_option("--crop", inspect.crop, "ox,oy,oz:ex,ey,ez");
  inspect_cmd->add_option("--seed", inspect.seed, "Landmark jitter seed");
  inspect_cmd->add_option("--eta", inspect.eta, "Landmark jitter fraction");
  inspect_cmd->add_option("--n-vectors", inspect.n_vectors, "1, 2, 5 or 9");
  inspect_cmd->add_option("--flip", inspect.flips, "Flip axis (x, y, z), repeatable");
  inspect_cmd->add_option("--rot", inspect.rots, "Quarter turn as plane:k, e.g. xy:1, repeatable");
  inspect_cmd->add_option("--out", inspect.out, "Output directory");
  inspect_cmd->add_flag("--figures", inspect.figures, "Write mid-slice PNGs");

  EdgesArgs edges;
  auto* edges_cmd = app.add_subcommand("edges", "Scharr gradient magnitude of a volume");
  edges_cmd->add_option("--volume", edges.volume, "Input volume")->required();
  edges_cmd->add_option("--out", edges.out, "Output volume (.vpr, .nii, .nii.gz)")->required();
  edges_cmd->add_flag("--normalized", edges.normalized, "Scale by the maximum as the boundary target does");
  edges_cmd->add_flag("--normalize-input", edges.normalize_input, "Percentile-normalize the input first");
  edges_cmd->add_option("--figure", edges.figure, "PNG of the middle slice");

  AblationArgs ab;
  auto* ablation = app.add_subcommand("ablation", "Component ablation: pretrain and fine-tune per cell and seed");
  add_common(ablation, common);
  ablation->add_option("--cells", ab.cells, "Subset of voxel, boundary, center, corner1, corner4, corner8")
      ->delimiter(',');
  ablation->add_option("--seeds", ab.seeds, "Seeds per cell");
  ablation->add_flag("--shared-pretrain", ab.shared_pretrain, "One pretraining per cell instead of per seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*pretrain) return cmd_pretrain(common, resume);
    if (*finetune) return cmd_finetune(common, ft);
    if (*evaluate) return cmd_evaluate(common, eval_checkpoint);
    if (*phantoms) return cmd_make_phantoms(common, count);
    if (*inspect_cmd) return cmd_inspect_targets(inspect);
    if (*edges_cmd) return cmd_edges(edges);
    if (*ablation) return cmd_ablation(common, ab);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DivergedTraining& e) {
    std::cerr << "training diverged: " << e.what() << "\n  samples:";
    for (auto id : e.sample_ids()) std::cerr << ' ' << id;
    std::cerr << '\n';
    return kDiverged;
  } catch (const IncompatibleCheckpoint& e) {
    std::cerr << "incompatible checkpoint: " << e.what() << '\n';
    return kCheckpoint;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
