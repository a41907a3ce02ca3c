#include "vectorpose/ablation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "vectorpose/pretrain.hpp"

namespace vectorpose {

RunConfig AblationCell::apply(const RunConfig& base) const {
  RunConfig cfg = base;
  cfg.pretrain.n_vectors = n_vectors();
  cfg.pretrain.alpha = boundary ? base.pretrain.alpha : 0.0;
  if (n_vectors() == 0) cfg.pretrain.lambda = 1.0;
  return cfg;
}

std::vector<AblationCell> standard_cells() {
  return {
      {"voxel", true, false, false, 0},         {"boundary", true, true, false, 0},
      {"center", true, true, true, 0},          {"corner1", true, true, true, 1},
      {"corner4", true, true, true, 4},         {"corner8", true, true, true, 8},
  };
}

AblationCell ablation_cell(const std::string& name) {
  std::string names;
  for (const AblationCell& c : standard_cells()) {
    if (c.name == name) return c;
    names += (names.empty() ? "" : ", ") + c.name;
  }
  throw InvalidArgument("unknown ablation cell '" + name + "' (expected one of " + names + ")");
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

VectorPoseNet pretrain_cell(const RunConfig& cfg, const std::vector<Volume>& volumes, MetricsWriter* metrics) {
  PretrainState state = init_pretrain_state(cfg);
  Pretrainer trainer(state, volumes);
  trainer.run(cfg.pretrain.epochs, metrics);
  return state.net;
}

}  // namespace

std::vector<AblationRow> run_ablation(const RunConfig& base, const DatasetSplits& data,
                                      const std::vector<AblationCell>& cells, const AblationOptions& options) {
  if (options.seeds.empty()) throw InvalidArgument("run_ablation: no seeds");
  const std::vector<Volume> volumes = volumes_of(data.train);
  std::vector<AblationRow> rows;
  for (const AblationCell& cell : cells) {
    RunConfig cfg = cell.apply(base);
    validate(cfg);
    AblationRow row;
    row.cell = cell;
    VectorPoseNet shared{nullptr};
    for (std::uint64_t seed : options.seeds) {
      cfg.pretrain.seed = seed;
      cfg.finetune.seed = seed;
      cfg.finetune.runs = 1;
      VectorPoseNet pretrained{nullptr};
      if (options.pretrain_per_seed || !shared) {
        pretrained = pretrain_cell(cfg, volumes, options.metrics);
        if (!options.pretrain_per_seed) shared = pretrained;
      } else {
        pretrained = shared;
      }
      FinetuneOptions fo;
      fo.pretrained = pretrained;
      fo.metrics = options.metrics;
      const FinetuneRunResult r = finetune_run(cfg, data, 0, fo);
      row.seeds.push_back(seed);
      row.best_val_dice.push_back(r.best_val_dice);
      row.test_dice.push_back(r.test.mean);
    }
    std::tie(row.mean_val, row.std_val) = mean_std(row.best_val_dice);
    std::tie(row.mean_test, row.std_test) = mean_std(row.test_dice);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot write");
  out << "cell,voxel_rec,boundary_rec,center_vector,corner_vectors,n_vectors,seeds,"
         "mean_best_val_dice,std_best_val_dice,mean_test_dice,std_test_dice,per_seed_best_val_dice\n";
  out << std::setprecision(6) << std::fixed;
  for (const AblationRow& r : rows) {
    out << r.cell.name << ',' << int(r.cell.voxel) << ',' << int(r.cell.boundary) << ',' << int(r.cell.center) << ','
        << r.cell.corners << ',' << r.cell.n_vectors() << ',' << r.seeds.size() << ',' << r.mean_val << ','
        << r.std_val << ',' << r.mean_test << ',' << r.std_test << ',';
    for (std::size_t i = 0; i < r.best_val_dice.size(); ++i) out << (i ? ";" : "") << r.best_val_dice[i];
    out << '\n';
  }
}

}  // namespace vectorpose
