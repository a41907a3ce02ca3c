#include "vectorpose/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "vectorpose/phantom.hpp"
#include "vectorpose/volume_io.hpp"

namespace vectorpose {
namespace fs = std::filesystem;

namespace {

std::string phantom_id(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phantom_%03d", i);
  return buf;
}

Phantom build_phantom(const DataConfig& cfg, int i) {
  const std::uint64_t seed = make_stream(cfg.phantom_seed, StreamTag::kPhantom, std::uint64_t(i))();
  Phantom p = generate_phantom(default_phantom_spec(seed, cfg.phantom_shape));
  p.volume.id = phantom_id(i);
  return p;
}

DatasetSplits split(std::vector<LabeledVolume> items, const DataConfig& cfg) {
  const auto [ntr, nva, nte] = cfg.split;
  if (std::size_t(ntr + nva + nte) > items.size()) {
    throw ConfigError("data.split", "asks for " + std::to_string(ntr + nva + nte) + " volumes but only " +
                                        std::to_string(items.size()) + " are available");
  }
  DatasetSplits s;
  auto it = std::make_move_iterator(items.begin());
  s.train.assign(it, it + ntr);
  s.val.assign(it + ntr, it + ntr + nva);
  s.test.assign(it + ntr + nva, it + ntr + nva + nte);
  return s;
}

std::string stem_of(const fs::path& p) {
  std::string name = p.filename().string();
  for (const char* ext : {".nii.gz", ".nii", ".vpr"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0) {
      return name.substr(0, name.size() - e.size());
    }
  }
  return name;
}

}  // namespace

DatasetSplits make_phantom_dataset(const DataConfig& cfg) {
  std::vector<LabeledVolume> items;
  for (int i = 0; i < cfg.phantom_count; ++i) {
    Phantom p = build_phantom(cfg, i);
    LabeledVolume lv;
    lv.volume = normalize(p.volume, cfg.clip_lo_pct, cfg.clip_hi_pct);
    lv.labels = std::move(p.labels);
    items.push_back(std::move(lv));
  }
  return split(std::move(items), cfg);
}

DatasetSplits load_dataset_dir(const fs::path& dir, const DataConfig& cfg, bool require_labels) {
  const fs::path vdir = dir / "volumes";
  if (!fs::is_directory(vdir)) throw IoError(vdir.string(), "no volumes/ directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(vdir)) {
    if (e.is_regular_file() && is_volume_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  const fs::path ldir = dir / "labels";
  std::vector<LabeledVolume> items;
  for (const fs::path& f : files) {
    LabeledVolume lv;
    Volume v = load_volume(f);
    v.id = stem_of(f);
    lv.volume = normalize(v, cfg.clip_lo_pct, cfg.clip_hi_pct);
    const fs::path label = ldir / f.filename();
    if (fs::exists(label)) {
      lv.labels = load_labels(label);
      if (lv.labels.extents() != lv.volume.shape()) {
        throw IoError(label.string(), "label extents " + to_string(lv.labels.extents()) + " differ from the volume's");
      }
    } else if (require_labels) {
      throw IoError(label.string(), "missing label file");
    }
    items.push_back(std::move(lv));
  }
  return split(std::move(items), cfg);
}

DatasetSplits load_dataset(const DataConfig& cfg, bool require_labels) {
  if (cfg.source == "phantom") return make_phantom_dataset(cfg);
  return load_dataset_dir(cfg.source, cfg, require_labels);
}

std::vector<Volume> volumes_of(const std::vector<LabeledVolume>& items) {
  std::vector<Volume> out;
  out.reserve(items.size());
  for (const LabeledVolume& lv : items) out.push_back(lv.volume);
  return out;
}

int write_phantoms(const fs::path& dir, const DataConfig& cfg) {
  fs::create_directories(dir / "volumes");
  fs::create_directories(dir / "labels");
  for (int i = 0; i < cfg.phantom_count; ++i) {
    const Phantom p = build_phantom(cfg, i);
    const std::string name = phantom_id(i) + ".nii.gz";
    save_volume(dir / "volumes" / name, p.volume);
    save_labels(dir / "labels" / name, p.labels, p.volume.spacing);
  }
  return cfg.phantom_count;
}

}  // namespace vectorpose
