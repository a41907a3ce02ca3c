#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vectorpose/losses.hpp"

namespace vectorpose {

/// One line of metrics.jsonl. Pretraining fills `losses`; fine-tuning fills
/// `train_loss` and the Dice fields.
struct MetricRecord {
  std::string kind;  // "pretrain", "finetune" or "evaluate"
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  std::optional<int> run;
  std::optional<LossBreakdown> losses;
  std::optional<double> train_loss;
  std::vector<double> dice_per_class;  // foreground classes 1..C-1; NaN when excluded
  std::optional<double> dice_mean;
  std::optional<double> wall_time;  // seconds since the writer was opened
};

nlohmann::json to_json(const MetricRecord& r);
nlohmann::json to_json(const LossBreakdown& b);

/// Appends JSON lines. Safe to call from several threads; lines never interleave.
/// Wall time is left out when `with_wall_time` is false so deterministic runs
/// produce byte-identical files.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, bool with_wall_time);
  void write(MetricRecord record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  bool with_wall_time_;
  std::chrono::steady_clock::time_point start_;
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace vectorpose
