#pragma once

#include <vector>

#include "vectorpose/grid.hpp"

namespace vectorpose {

struct DiceResult {
  std::vector<double> per_class;  // foreground classes 1..C-1; NaN when absent from both masks
  double mean = 0.0;              // over included classes
  int included = 0;
};

/// Per-class 2|P and T| / (|P| + |T|) over the foreground classes. A class
/// missing from both prediction and target is left out of the mean; if every
/// class is left out the labelings agree and the mean is 1.
DiceResult dice_score(const LabelGrid& prediction, const LabelGrid& target, int num_classes);

/// Averages several volumes: each class over the volumes that include it, and
/// the mean as the average of the per-volume means.
DiceResult average_dice(const std::vector<DiceResult>& results);

}  // namespace vectorpose
