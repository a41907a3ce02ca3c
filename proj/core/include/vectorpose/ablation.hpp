#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vectorpose/finetune.hpp"

namespace vectorpose {

/// One column of the component ablation.
struct AblationCell {
  std::string name;
  bool voxel = true;
  bool boundary = false;
  bool center = false;
  int corners = 0;

  int n_vectors() const { return center ? 1 + corners : 0; }
  /// The cell's pretraining settings on top of `base`. Cells without vectors
  /// train on reconstruction alone (lambda = 1); alpha = 0 drops the boundary term.
  RunConfig apply(const RunConfig& base) const;
};

/// voxel only, +boundary, +center, +1 corner, +4 corners, +8 corners.
std::vector<AblationCell> standard_cells();

/// Looks a cell up by name; throws InvalidArgument listing the valid names.
AblationCell ablation_cell(const std::string& name);

struct AblationRow {
  AblationCell cell;
  std::vector<std::uint64_t> seeds;
  std::vector<double> best_val_dice;  // one per seed
  std::vector<double> test_dice;
  double mean_val = 0.0, std_val = 0.0;
  double mean_test = 0.0, std_test = 0.0;
};

struct AblationOptions {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// Pretrain once per seed; otherwise one pretraining (with the first seed)
  /// is shared by all fine-tuning seeds of a cell.
  bool pretrain_per_seed = true;
  MetricsWriter* metrics = nullptr;
};

/// For each cell in order: pretrain with the cell's settings, then fine-tune
/// one run per seed. Seeds are shared across cells.
std::vector<AblationRow> run_ablation(const RunConfig& base, const DatasetSplits& data,
                                      const std::vector<AblationCell>& cells, const AblationOptions& options);

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace vectorpose
