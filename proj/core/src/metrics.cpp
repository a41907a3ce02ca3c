#include "vectorpose/metrics.hpp"

#include <cmath>

namespace vectorpose {
using nlohmann::json;

json to_json(const LossBreakdown& b) {
  return {{"l_total", b.l_total}, {"l_vp", b.l_vp},   {"l_bfr", b.l_bfr},     {"r", b.r},
          {"theta", b.theta},     {"phi", b.phi},     {"voxel", b.voxel},     {"boundary", b.boundary}};
}

json to_json(const MetricRecord& r) {
  json j = {{"kind", r.kind}, {"step", r.step}, {"epoch", r.epoch}};
  if (r.run) j["run"] = *r.run;
  if (r.losses) j.update(to_json(*r.losses));
  if (r.train_loss) j["train_loss"] = *r.train_loss;
  if (!r.dice_per_class.empty()) {
    json per = json::array();
    for (double d : r.dice_per_class) per.push_back(std::isnan(d) ? json(nullptr) : json(d));
    j["dice_per_class"] = per;
  }
  if (r.dice_mean) j["dice_mean"] = *r.dice_mean;
  if (r.wall_time) j["wall_time"] = *r.wall_time;
  return j;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool with_wall_time)
    : path_(path), with_wall_time_(with_wall_time), start_(std::chrono::steady_clock::now()) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app);
  if (!out_) throw IoError(path_.string(), "cannot open metrics file for writing");
}

void MetricsWriter::write(MetricRecord record) {
  if (with_wall_time_) {
    record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  } else {
    record.wall_time.reset();
  }
  const std::string line = to_json(record).dump();
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
}

}  // namespace vectorpose
