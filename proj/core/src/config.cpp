#include "vectorpose/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace vectorpose {
using nlohmann::json;

std::string to_string(ReconNorm n) { return n == ReconNorm::kL1 ? "l1" : "l2"; }

NetworkConfig RunConfig::pretrain_network() const {
  NetworkConfig n = network;
  n.n_vectors = pretrain.n_vectors;
  n.seg_classes = 0;
  return n;
}

NetworkConfig RunConfig::segment_network() const {
  NetworkConfig n = network;
  n.n_vectors = 0;
  n.seg_classes = data.num_classes;
  return n;
}

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Field visitors shared by the reader and the writer, so the two can never
// disagree about which keys exist.

template <class V, class C>
void visit(V& v, C& c, DataConfig*) {
  v("source", c.source);
  v("phantom_count", c.phantom_count);
  v("phantom_shape", c.phantom_shape);
  v("phantom_seed", c.phantom_seed);
  v("split", c.split);
  v("clip_lo_pct", c.clip_lo_pct);
  v("clip_hi_pct", c.clip_hi_pct);
  v("num_classes", c.num_classes);
}

template <class V, class C>
void visit(V& v, C& c, SpatialAugmentConfig*) {
  v("flip_prob", c.flip_prob);
  v("rot_prob", c.rot_prob);
}

template <class V, class C>
void visit(V& v, C& c, IntensityNoiseConfig*) {
  v("intensity_shift_prob", c.intensity_shift_prob);
  v("shuffle_prob", c.shuffle_prob);
  v("shuffle_block_extents", c.shuffle_block_extents);
  v("shuffle_block_count", c.shuffle_block_count);
  v("paint_prob", c.paint_prob);
  v("outpaint_prob", c.outpaint_prob);
  v("inpaint_box_count_min", c.inpaint_box_count_min);
  v("inpaint_box_count_max", c.inpaint_box_count_max);
  v("inpaint_box_frac_min", c.inpaint_box_frac_min);
  v("inpaint_box_frac_max", c.inpaint_box_frac_max);
  v("outpaint_box_count_min", c.outpaint_box_count_min);
  v("outpaint_box_count_max", c.outpaint_box_count_max);
  v("outpaint_box_frac_min", c.outpaint_box_frac_min);
  v("outpaint_box_frac_max", c.outpaint_box_frac_max);
}

template <class V, class C>
void visit(V& v, C& c, CropSamplingConfig*) {
  v("background_threshold", c.background_threshold);
  v("min_informative_fraction", c.min_informative_fraction);
  v("max_retries", c.max_retries);
  v("scale_jitter", c.scale_jitter);
}

template <class V, class C>
void visit(V& v, C& c, AugmentConfig*) {
  v.section("spatial", c.spatial);
  v.section("intensity", c.intensity);
  v.section("crop", c.crop);
}

template <class V, class C>
void visit(V& v, C& c, NetworkConfig*) {
  v("variant", c.variant);
  v("base_channels", c.base_channels);
  v("tiny_stages", c.tiny_stages);
  v("norm_groups", c.norm_groups);
  v("vp_hidden", c.vp_hidden);
  v("vp_source", c.vp_source);
}

template <class V, class C>
void visit(V& v, C& c, PretrainConfig*) {
  v("epochs", c.epochs);
  v("batch_size", c.batch_size);
  v("learning_rate", c.learning_rate);
  v("weight_decay", c.weight_decay);
  v("crop_extents", c.crop_extents);
  v("n_vectors", c.n_vectors);
  v("eta", c.eta);
  v("alpha", c.alpha);
  v("lambda", c.lambda);
  v("recon_norm", c.recon_norm);
  v("crops_per_volume", c.crops_per_volume);
  v("schedule", c.schedule);
  v("seed", c.seed);
  v("spatial_augment", c.spatial_augment);
  v("intensity_augment", c.intensity_augment);
}

template <class V, class C>
void visit(V& v, C& c, FinetuneConfig*) {
  v("epochs", c.epochs);
  v("batch_size", c.batch_size);
  v("learning_rate", c.learning_rate);
  v("weight_decay", c.weight_decay);
  v("crop_extents", c.crop_extents);
  v("fraction", c.fraction);
  v("runs", c.runs);
  v("seed", c.seed);
  v("crops_per_volume", c.crops_per_volume);
  v("schedule", c.schedule);
  v("flip_prob", c.flip_prob);
  v("brightness_prob", c.brightness_prob);
  v("brightness_range", c.brightness_range);
  v("gamma_prob", c.gamma_prob);
  v("gamma_range", c.gamma_range);
  v("blur_prob", c.blur_prob);
  v("blur_sigma", c.blur_sigma);
  v("dice_weight", c.dice_weight);
}

template <class V, class C>
void visit(V& v, C& c, OutputConfig*) {
  v("checkpoint_every", c.checkpoint_every);
  v("figures", c.figures);
  v("num_workers", c.num_workers);
  v("prefetch", c.prefetch);
  v("deterministic", c.deterministic);
}

template <class V, class C>
void visit(V& v, C& c, RunConfig*) {
  v.section("data", c.data);
  v.section("augment", c.augment);
  v.section("network", c.network);
  v.section("pretrain", c.pretrain);
  v.section("finetune", c.finetune);
  v.section("output", c.output);
}

template <class T>
using Plain = std::remove_cv_t<std::remove_reference_t<T>>;

class Writer {
 public:
  json out = json::object();

  template <class T>
  void operator()(const char* key, const T& value) {
    out[key] = encode(value);
  }
  template <class T>
  void section(const char* key, const T& value) {
    Writer w;
    visit(w, value, static_cast<Plain<T>*>(nullptr));
    out[key] = std::move(w.out);
  }

 private:
  template <class T>
  static json encode(const T& v) { return v; }
  static json encode(const Extents3& e) { return json::array({e.x, e.y, e.z}); }
  static json encode(EncoderVariant v) { return to_string(v); }
  static json encode(VpSource v) { return to_string(v); }
  static json encode(ReconNorm v) { return to_string(v); }
};

class Reader {
 public:
  Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected a JSON object");
  }

  template <class T>
  void operator()(const char* key, T& value) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const std::string path = join(prefix_, key);
    try {
      decode(obj_.at(key), value, path);
    } catch (const json::exception& e) {
      throw ConfigError(path, std::string("wrong type: ") + e.what());
    }
  }
  template <class T>
  void section(const char* key, T& value) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    Reader r(obj_.at(key), join(prefix_, key));
    visit(r, value, static_cast<Plain<T>*>(nullptr));
    r.finish();
  }
  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(join(prefix_, item.key()), "unknown key");
    }
  }

 private:
  template <class T>
  static void decode(const json& j, T& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError(path, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
      if (std::is_unsigned_v<T> && j.get<std::int64_t>() < 0 && !j.is_number_unsigned()) {
        throw ConfigError(path, "expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError(path, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError(path, "expected a string");
    }
    v = j.get<T>();
  }
  template <class T, std::size_t N>
  static void decode(const json& j, std::array<T, N>& v, const std::string& path) {
    if (!j.is_array() || j.size() != N) throw ConfigError(path, "expected an array of " + std::to_string(N));
    for (std::size_t i = 0; i < N; ++i) decode(j[i], v[i], path + "[" + std::to_string(i) + "]");
  }
  static void decode(const json& j, Extents3& e, const std::string& path) {
    std::array<std::int64_t, 3> a{};
    decode(j, a, path);
    e = {a[0], a[1], a[2]};
  }
  template <class E, class F>
  static void decode_enum(const json& j, E& v, const std::string& path, F parse) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    try {
      v = parse(j.get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ConfigError(path, e.what());
    }
  }
  static void decode(const json& j, EncoderVariant& v, const std::string& path) {
    decode_enum(j, v, path, encoder_variant_from_string);
  }
  static void decode(const json& j, VpSource& v, const std::string& path) {
    decode_enum(j, v, path, vp_source_from_string);
  }
  static void decode(const json& j, ReconNorm& v, const std::string& path) {
    decode_enum(j, v, path, [](const std::string& s) {
      if (s == "l1") return ReconNorm::kL1;
      if (s == "l2") return ReconNorm::kL2;
      throw InvalidArgument("expected l1 or l2, got '" + s + "'");
    });
  }

  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

void check_extents(Extents3 e, std::int64_t stride, const std::string& key) {
  require(e.positive(), key, "extents must be positive");
  for (int a = 0; a < 3; ++a) {
    require(e[a] >= 3, key, "extents must be at least 3 per axis");
    require(e[a] % stride == 0, key,
            "extents " + to_string(e) + " must be divisible by the network stride " + std::to_string(stride));
  }
}

}  // namespace

json to_json(const RunConfig& cfg) {
  Writer w;
  visit(w, cfg, static_cast<RunConfig*>(nullptr));
  return w.out;
}

json to_json(const NetworkConfig& cfg) {
  Writer w;
  visit(w, cfg, static_cast<NetworkConfig*>(nullptr));
  w("n_vectors", cfg.n_vectors);
  w("bfr_channels", cfg.bfr_channels);
  w("seg_classes", cfg.seg_classes);
  return w.out;
}

NetworkConfig network_config_from_json(const json& doc) {
  NetworkConfig cfg;
  Reader r(doc, "network");
  visit(r, cfg, static_cast<NetworkConfig*>(nullptr));
  r("n_vectors", cfg.n_vectors);
  r("bfr_channels", cfg.bfr_channels);
  r("seg_classes", cfg.seg_classes);
  r.finish();
  return cfg;
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig cfg;
  Reader r(doc, "");
  visit(r, cfg, static_cast<RunConfig*>(nullptr));
  r.finish();
  return cfg;
}

json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config", "malformed JSON in " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config", path.string() + " does not hold a JSON object");
  return doc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg = run_config_from_json(read_config_document(path));
  validate(cfg);
  return cfg;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must look like section.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path, "empty key in override");
    if (!node->is_object()) throw ConfigError(path, "override descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

void validate(const RunConfig& c) {
  const DataConfig& d = c.data;
  require(!d.source.empty(), "data.source", "must be 'phantom' or a directory");
  require(d.phantom_count >= 1, "data.phantom_count", "must be positive");
  require(d.phantom_shape.positive(), "data.phantom_shape", "must be positive");
  require(d.split[0] >= 1 && d.split[1] >= 0 && d.split[2] >= 0, "data.split", "needs >= 1 train volume");
  if (d.source == "phantom") {
    require(d.split[0] + d.split[1] + d.split[2] <= d.phantom_count, "data.split",
            "split uses more volumes than data.phantom_count");
  }
  require(d.clip_lo_pct >= 0 && d.clip_lo_pct < d.clip_hi_pct && d.clip_hi_pct <= 100, "data.clip_lo_pct",
          "need 0 <= clip_lo_pct < clip_hi_pct <= 100");
  require(d.num_classes >= 2, "data.num_classes", "must be at least 2");

  const AugmentConfig& a = c.augment;
  for (double p : a.spatial.flip_prob) require(is_prob(p), "augment.spatial.flip_prob", "must lie in [0, 1]");
  require(is_prob(a.spatial.rot_prob), "augment.spatial.rot_prob", "must lie in [0, 1]");
  try {
    validate(a.intensity, c.pretrain.crop_extents);
  } catch (const InvalidArgument& e) {
    throw ConfigError("augment.intensity", e.what());
  }
  require(is_prob(a.crop.background_threshold), "augment.crop.background_threshold", "must lie in [0, 1]");
  require(is_prob(a.crop.min_informative_fraction), "augment.crop.min_informative_fraction", "must lie in [0, 1]");
  require(a.crop.max_retries >= 0, "augment.crop.max_retries", "must be non-negative");
  require(a.crop.scale_jitter >= 0 && a.crop.scale_jitter < 0.5, "augment.crop.scale_jitter", "must lie in [0, 0.5)");

  const NetworkConfig& n = c.network;
  require(n.base_channels >= 1, "network.base_channels", "must be positive");
  require(n.tiny_stages >= 1 && n.tiny_stages <= 6, "network.tiny_stages", "must lie in [1, 6]");
  require(n.norm_groups >= 1, "network.norm_groups", "must be positive");
  require(n.vp_hidden >= 1, "network.vp_hidden", "must be positive");
  const std::int64_t stride = n.total_stride();

  const PretrainConfig& p = c.pretrain;
  require(p.epochs >= 1, "pretrain.epochs", "must be positive");
  require(p.batch_size >= 1, "pretrain.batch_size", "must be positive");
  require(p.learning_rate > 0, "pretrain.learning_rate", "must be positive");
  require(p.weight_decay >= 0, "pretrain.weight_decay", "must be non-negative");
  check_extents(p.crop_extents, stride, "pretrain.crop_extents");
  require(p.n_vectors == 0 || p.n_vectors == 1 || p.n_vectors == 2 || p.n_vectors == 5 || p.n_vectors == 9,
          "pretrain.n_vectors", "must be one of 0, 1, 2, 5, 9");
  require(p.eta >= 0 && p.eta < 0.5, "pretrain.eta", "must lie in [0, 0.5)");
  require(p.alpha >= 0, "pretrain.alpha", "must be non-negative");
  require(p.lambda >= 0 && p.lambda <= 1, "pretrain.lambda", "must lie in [0, 1]");
  require(p.crops_per_volume >= 1, "pretrain.crops_per_volume", "must be positive");
  require(p.schedule == "constant" || p.schedule == "cosine", "pretrain.schedule", "must be constant or cosine");

  const FinetuneConfig& f = c.finetune;
  require(f.epochs >= 1, "finetune.epochs", "must be positive");
  require(f.batch_size >= 1, "finetune.batch_size", "must be positive");
  require(f.learning_rate > 0, "finetune.learning_rate", "must be positive");
  require(f.weight_decay >= 0, "finetune.weight_decay", "must be non-negative");
  check_extents(f.crop_extents, stride, "finetune.crop_extents");
  require(f.fraction > 0 && f.fraction <= 1, "finetune.fraction", "must lie in (0, 1]");
  require(f.runs >= 1, "finetune.runs", "must be positive");
  require(f.crops_per_volume >= 1, "finetune.crops_per_volume", "must be positive");
  require(f.schedule == "constant" || f.schedule == "cosine", "finetune.schedule", "must be constant or cosine");
  require(is_prob(f.flip_prob), "finetune.flip_prob", "must lie in [0, 1]");
  require(is_prob(f.brightness_prob), "finetune.brightness_prob", "must lie in [0, 1]");
  require(f.brightness_range >= 0 && f.brightness_range < 1, "finetune.brightness_range", "must lie in [0, 1)");
  require(is_prob(f.gamma_prob), "finetune.gamma_prob", "must lie in [0, 1]");
  require(f.gamma_range[0] > 0 && f.gamma_range[0] <= f.gamma_range[1], "finetune.gamma_range",
          "need 0 < low <= high");
  require(is_prob(f.blur_prob), "finetune.blur_prob", "must lie in [0, 1]");
  require(f.blur_sigma[0] > 0 && f.blur_sigma[0] <= f.blur_sigma[1], "finetune.blur_sigma", "need 0 < low <= high");
  require(f.dice_weight >= 0, "finetune.dice_weight", "must be non-negative");

  const OutputConfig& o = c.output;
  require(o.checkpoint_every >= 0, "output.checkpoint_every", "must be non-negative");
  require(o.num_workers >= 0, "output.num_workers", "must be non-negative");
  require(o.prefetch >= 1, "output.prefetch", "must be positive");
}

int effective_workers(const OutputConfig& cfg) {
  if (const char* env = std::getenv("VECTORPOSE_NUM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 0) return static_cast<int>(v);
    throw ConfigError("VECTORPOSE_NUM_WORKERS", "must be a non-negative integer");
  }
  return cfg.num_workers;
}

}  // namespace vectorpose
