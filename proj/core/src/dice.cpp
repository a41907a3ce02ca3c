#include "vectorpose/dice.hpp"

#include <cmath>
#include <limits>

namespace vectorpose {

DiceResult dice_score(const LabelGrid& prediction, const LabelGrid& target, int num_classes) {
  if (prediction.extents() != target.extents()) {
    throw InvalidArgument("dice_score: prediction " + to_string(prediction.extents()) + " and target " +
                          to_string(target.extents()) + " differ in extent");
  }
  if (num_classes < 2) throw InvalidArgument("dice_score: need at least one foreground class");
  std::vector<std::int64_t> pred(num_classes, 0), truth(num_classes, 0), both(num_classes, 0);
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const std::int32_t p = prediction[i], t = target[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes) {
      throw InvalidArgument("dice_score: label outside [0, " + std::to_string(num_classes) + ")");
    }
    ++pred[p];
    ++truth[t];
    if (p == t) ++both[p];
  }
  DiceResult r;
  double sum = 0.0;
  for (int c = 1; c < num_classes; ++c) {
    const std::int64_t denom = pred[c] + truth[c];
    if (denom == 0) {
      r.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double d = 2.0 * double(both[c]) / double(denom);
    r.per_class.push_back(d);
    sum += d;
    ++r.included;
  }
  r.mean = r.included > 0 ? sum / r.included : 1.0;
  return r;
}

DiceResult average_dice(const std::vector<DiceResult>& results) {
  if (results.empty()) throw InvalidArgument("average_dice: no results");
  const std::size_t classes = results.front().per_class.size();
  DiceResult out;
  std::vector<double> sums(classes, 0.0);
  std::vector<int> counts(classes, 0);
  double mean_sum = 0.0;
  for (const DiceResult& r : results) {
    if (r.per_class.size() != classes) throw InvalidArgument("average_dice: class counts differ");
    for (std::size_t c = 0; c < classes; ++c) {
      if (std::isnan(r.per_class[c])) continue;
      sums[c] += r.per_class[c];
      ++counts[c];
    }
    mean_sum += r.mean;
  }
  for (std::size_t c = 0; c < classes; ++c) {
    out.per_class.push_back(counts[c] > 0 ? sums[c] / counts[c] : std::numeric_limits<double>::quiet_NaN());
    if (counts[c] > 0) ++out.included;
  }
  out.mean = mean_sum / double(results.size());
  return out;
}

}  // namespace vectorpose
