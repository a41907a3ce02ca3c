#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "vectorpose/ablation.hpp"
#include "vectorpose/boundary.hpp"
#include "vectorpose/checkpoint.hpp"
#include "vectorpose/dataset.hpp"
#include "vectorpose/finetune.hpp"
#include "vectorpose/pretrain.hpp"
#include "vectorpose/volume_io.hpp"
#include "png_slices.hpp"

namespace vectorpose::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig resolve_config(const CommonArgs& args, json doc = json::object()) {
  if (!args.config.empty()) doc.merge_patch(read_config_document(args.config));
  for (const std::string& s : args.sets) apply_override(doc, s);
  if (args.data) doc["data"]["source"] = *args.data;
  if (args.seed) {
    doc["pretrain"]["seed"] = *args.seed;
    doc["finetune"]["seed"] = *args.seed;
  }
  if (args.deterministic) doc["output"]["deterministic"] = true;
  RunConfig cfg = run_config_from_json(doc);
  validate(cfg);
  return cfg;
}

void prepare_out(const fs::path& out, const RunConfig& cfg) {
  fs::create_directories(out);
  std::ofstream f(out / "config.json");
  if (!f) throw IoError((out / "config.json").string(), "cannot write");
  f << to_json(cfg).dump(2) << '\n';
}

/// Fresh metrics file; an existing one from an earlier run would be appended to.
std::unique_ptr<MetricsWriter> open_metrics(const fs::path& out, const RunConfig& cfg, bool append) {
  const fs::path path = out / "metrics.jsonl";
  if (!append) fs::remove(path);
  return std::make_unique<MetricsWriter>(path, !cfg.output.deterministic);
}

std::string fmt(double v, int precision = 4) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

std::string checkpoint_name(const std::string& kind, std::int64_t epoch) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_epoch%04lld.pt", kind.c_str(), static_cast<long long>(epoch));
  return buf;
}

void write_pretrain_figure(const fs::path& path, PretrainState& state, const std::vector<Volume>& volumes) {
  const SampleSettings settings = sample_settings(state.cfg);
  const PretrainSample s = build_pretrain_sample(volumes[0], 0, settings, 0);
  torch::NoGradGuard no_grad;
  state.net->eval();
  const PretextOutput out = state.net->forward_pretrain(stack_grids({&s.input}));
  state.net->train();
  const Extents3 e = s.input.extents();
  const torch::Tensor probs = torch::sigmoid(out.bfr[0]).contiguous();
  const float* p = probs.data_ptr<float>();
  const Grid3f voxel(e, std::vector<float>(p, p + e.voxels()));
  const Grid3f boundary(e, std::vector<float>(p + e.voxels(), p + 2 * e.voxels()));
  const std::int64_t z = e.z / 2;
  write_png(path, hstack({slice_image(s.input, z), slice_image(s.voxel_target, z), slice_image(s.boundary_target, z),
                          slice_image(voxel, z), slice_image(boundary, z)}));
}

void check_fraction(double fraction, bool any) {
  if (any) return;
  for (double allowed : {0.1, 0.25, 0.5, 1.0}) {
    if (std::abs(fraction - allowed) < 1e-12) return;
  }
  throw ConfigError("finetune.fraction", "must be one of 0.1, 0.25, 0.5, 1.0 (pass --any-fraction to allow " +
                                             fmt(fraction) + ")");
}

Extents3 parse_triple(const std::string& text, const std::string& key) {
  Extents3 e;
  char sep1 = 0, sep2 = 0;
  long long a = 0, b = 0, c = 0;
  std::istringstream in(text);
  if (!(in >> a >> sep1 >> b >> sep2 >> c) || sep1 != ',' || sep2 != ',' || !in.eof()) {
    throw ConfigError(key, "expected x,y,z but got '" + text + "'");
  }
  e.x = a;
  e.y = b;
  e.z = c;
  return e;
}

Axis parse_axis(const std::string& s) {
  if (s == "x") return Axis::kX;
  if (s == "y") return Axis::kY;
  if (s == "z") return Axis::kZ;
  throw ConfigError("flip", "axis must be x, y or z, got '" + s + "'");
}

Rot90 parse_rot(const std::string& s) {
  const auto colon = s.find(':');
  const std::string plane = s.substr(0, colon);
  Rot90 r;
  if (plane == "xy") r.plane = Plane::kXY;
  else if (plane == "xz") r.plane = Plane::kXZ;
  else if (plane == "yz") r.plane = Plane::kYZ;
  else throw ConfigError("rot", "plane must be xy, xz or yz, got '" + plane + "'");
  r.k = colon == std::string::npos ? 1 : std::stoi(s.substr(colon + 1));
  if (r.k < 1 || r.k > 3) throw ConfigError("rot", "quarter turns must be 1, 2 or 3");
  return r;
}

/// Any failure to use a checkpoint, including a missing file, maps to the checkpoint exit code.
template <class F>
auto with_checkpoint(F&& f) {
  try {
    return f();
  } catch (const IoError& e) {
    throw IncompatibleCheckpoint(e.what());
  }
}

}  // namespace

int cmd_pretrain(const CommonArgs& args, const std::string& resume) {
  PretrainState state;
  if (!resume.empty()) {
    state = with_checkpoint([&] { return load_pretrain_state(resume); });
    const RunConfig cfg = resolve_config(args, to_json(state.cfg));
    const NetworkConfig want = cfg.pretrain_network();
    const NetworkConfig have = state.net->config();
    if (!want.same_body(have) || want.n_vectors != have.n_vectors) {
      throw IncompatibleCheckpoint("resumed run asks for a different network than " + resume);
    }
    state.cfg = cfg;
  } else {
    state = init_pretrain_state(resolve_config(args));
  }
  const RunConfig& cfg = state.cfg;
  configure_determinism(cfg.output.deterministic);
  const fs::path out = args.out;
  prepare_out(out, cfg);
  const DatasetSplits data = load_dataset(cfg.data, false);
  const std::vector<Volume> volumes = volumes_of(data.train);
  auto metrics = open_metrics(out, cfg, !resume.empty());

  Pretrainer trainer(state, volumes);
  std::cout << "pretraining " << to_string(cfg.network.variant) << " on " << volumes.size() << " volumes, "
            << trainer.steps_per_epoch() << " steps per epoch, epochs " << state.epoch << " -> " << cfg.pretrain.epochs
            << std::endl;
  trainer.run(cfg.pretrain.epochs, metrics.get(), [&](PretrainState& s) {
    if (cfg.output.checkpoint_every > 0 && s.epoch % cfg.output.checkpoint_every == 0) {
      save_pretrain_state(out / "checkpoints" / checkpoint_name("pretrain", s.epoch), s);
    }
  });
  save_pretrain_state(out / "checkpoints" / "pretrain_final.pt", state);
  if (cfg.output.figures) write_pretrain_figure(out / "figures" / "pretrain_sample.png", state, volumes);
  std::cout << "done: step " << state.step << ", checkpoint " << (out / "checkpoints" / "pretrain_final.pt").string()
            << std::endl;
  return 0;
}

int cmd_finetune(const CommonArgs& args, const FinetuneArgs& ft) {
  CommonArgs a = args;
  if (ft.fraction) a.sets.push_back("finetune.fraction=" + fmt(*ft.fraction, 17));
  if (ft.runs) a.sets.push_back("finetune.runs=" + std::to_string(*ft.runs));
  const RunConfig cfg = resolve_config(a);
  check_fraction(cfg.finetune.fraction, ft.any_fraction);
  if (ft.from_scratch == !ft.checkpoint.empty()) {
    throw ConfigError("checkpoint", "pass exactly one of --checkpoint and --from-scratch");
  }
  configure_determinism(cfg.output.deterministic);

  FinetuneOptions options;
  if (!ft.checkpoint.empty()) {
    options.pretrained = with_checkpoint([&] { return load_network(ft.checkpoint); });
    // Fail before any data work if the bodies differ.
    VectorPoseNet probe(cfg.segment_network(), NetworkMode::kSegment);
    const TransferManifest m = transfer_weights(options.pretrained, probe);
    std::cout << "transferring " << m.transferred.size() << " tensors from " << ft.checkpoint << ", "
              << m.fresh.size() << " fresh" << std::endl;
  }
  const fs::path out = args.out;
  prepare_out(out, cfg);
  const DatasetSplits data = load_dataset(cfg.data, true);
  auto metrics = open_metrics(out, cfg, false);
  options.metrics = metrics.get();
  options.checkpoint_dir = out / "checkpoints";

  const std::size_t n = label_subset_size(cfg.finetune.fraction, data.train.size());
  const std::string init = ft.from_scratch ? "random" : "pretrained";
  std::cout << "fine-tuning (" << init << " init) on " << n << " of " << data.train.size() << " volumes, "
            << cfg.finetune.runs << " runs" << std::endl;
  const FinetuneSummary summary = finetune(cfg, data, options);

  fs::create_directories(out / "tables");
  std::ofstream csv(out / "tables" / "finetune.csv");
  csv << "run,seed,init,fraction,train_volumes,best_epoch,best_val_dice,test_dice\n";
  for (const FinetuneRunResult& r : summary.runs) {
    csv << r.run << ',' << r.seed << ',' << init << ',' << cfg.finetune.fraction << ',' << n << ',' << r.best_epoch
        << ',' << fmt(r.best_val_dice, 6) << ',' << fmt(r.test.mean, 6) << '\n';
    std::cout << "run " << r.run << ": best val Dice " << fmt(r.best_val_dice) << " (epoch " << r.best_epoch
              << "), test Dice " << fmt(r.test.mean) << std::endl;
  }
  csv << "mean,,," << cfg.finetune.fraction << ',' << n << ",," << fmt(summary.mean_best_val, 6) << ','
      << fmt(summary.mean_test, 6) << '\n';
  csv << "std,,," << cfg.finetune.fraction << ',' << n << ",," << fmt(summary.std_best_val, 6) << ','
      << fmt(summary.std_test, 6) << '\n';
  std::cout << "aggregate over " << summary.runs.size() << " runs: best val Dice " << fmt(summary.mean_best_val)
            << " +- " << fmt(summary.std_best_val) << ", test Dice " << fmt(summary.mean_test) << " +- "
            << fmt(summary.std_test) << std::endl;
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint) {
  CheckpointMeta meta = with_checkpoint([&] { return read_checkpoint_meta(checkpoint); });
  if (meta.mode != NetworkMode::kSegment) {
    throw IncompatibleCheckpoint(checkpoint + " holds a pretraining network; evaluate needs a fine-tuned one");
  }
  const RunConfig cfg = resolve_config(args, meta.run_config);
  configure_determinism(cfg.output.deterministic);
  VectorPoseNet net = load_network(checkpoint, &meta);
  if (net->config().seg_classes != cfg.data.num_classes) {
    throw IncompatibleCheckpoint(checkpoint + " predicts " + std::to_string(net->config().seg_classes) +
                                 " classes but data.num_classes is " + std::to_string(cfg.data.num_classes));
  }
  const fs::path out = args.out;
  prepare_out(out, cfg);
  const DatasetSplits data = load_dataset(cfg.data, true);
  if (data.test.empty()) throw ConfigError("data.split", "the test split is empty");

  net->eval();
  std::vector<DiceResult> per_volume;
  fs::create_directories(out / "tables");
  std::ofstream csv(out / "tables" / "evaluate.csv");
  csv << "volume,mean_dice";
  for (int c = 1; c < cfg.data.num_classes; ++c) csv << ",class" << c;
  csv << '\n';
  for (const LabeledVolume& item : data.test) {
    per_volume.push_back(dice_score(predict_labels(net, item.volume), item.labels, cfg.data.num_classes));
    csv << item.volume.id << ',' << fmt(per_volume.back().mean, 6);
    for (double d : per_volume.back().per_class) csv << ',' << fmt(d, 6);
    csv << '\n';
  }
  const DiceResult avg = average_dice(per_volume);
  csv << "mean," << fmt(avg.mean, 6);
  for (double d : avg.per_class) csv << ',' << fmt(d, 6);
  csv << '\n';

  auto metrics = open_metrics(out, cfg, false);
  MetricRecord r;
  r.kind = "evaluate";
  r.step = meta.step;
  r.epoch = meta.epoch;
  r.run = meta.run;
  r.dice_per_class = avg.per_class;
  r.dice_mean = avg.mean;
  metrics->write(std::move(r));
  std::cout << "test Dice over " << data.test.size() << " volumes: " << fmt(avg.mean) << std::endl;
  return 0;
}

int cmd_make_phantoms(const CommonArgs& args, std::optional<int> count) {
  CommonArgs a = args;
  if (count) a.sets.push_back("data.phantom_count=" + std::to_string(*count));
  if (args.seed) a.sets.push_back("data.phantom_seed=" + std::to_string(*args.seed));
  a.seed.reset();
  const RunConfig cfg = resolve_config(a);
  prepare_out(args.out, cfg);
  const int n = write_phantoms(args.out, cfg.data);
  std::cout << "wrote " << n << " phantoms to " << args.out << std::endl;
  return 0;
}

int cmd_inspect_targets(const InspectArgs& in) {
  Volume volume = normalize(load_volume(in.volume));
  volume.id = fs::path(in.volume).filename().string();
  const Extents3 shape = volume.shape();

  CropPlacement placement;
  if (in.crop.empty()) {
    for (int a = 0; a < 3; ++a) {
      placement.extents[a] = std::min<std::int64_t>(96, shape[a]);
      placement.offset[a] = (shape[a] - placement.extents[a]) / 2;
    }
  } else {
    const auto colon = in.crop.find(':');
    if (colon == std::string::npos) throw ConfigError("crop", "expected ox,oy,oz:ex,ey,ez");
    placement.offset = parse_triple(in.crop.substr(0, colon), "crop");
    placement.extents = parse_triple(in.crop.substr(colon + 1), "crop");
  }
  for (int a = 0; a < 3; ++a) {
    if (placement.offset[a] < 0 || placement.extents[a] < 1 || placement.offset[a] + placement.extents[a] > shape[a]) {
      throw ConfigError("crop", "crop at " + to_string(placement.offset) + " with extents " +
                                    to_string(placement.extents) + " leaves the volume " + to_string(shape));
    }
  }
  placement.crop_extents = placement.extents;
  placement.source_volume_id = volume.id;

  TransformRecord transform;
  for (const std::string& f : in.flips) transform.ops.push_back(Flip{parse_axis(f)});
  for (const std::string& r : in.rots) transform.ops.push_back(parse_rot(r));
  try {
    check_compatible(transform, placement.crop_extents);
  } catch (const InvalidArgument& e) {
    throw ConfigError("rot", e.what());
  }
  if (!(in.eta >= 0.0 && in.eta < 0.5)) throw ConfigError("eta", "must lie in [0, 0.5)");

  Rng rng = make_stream(in.seed, StreamTag::kInspect);
  const Landmark landmark = make_landmark(shape, in.eta, rng);
  placement.landmark = landmark;
  const OriginPointSet origins = make_origin_points(placement.crop_extents, layout_for_vector_count(in.n_vectors));
  const double radius = circumscribing_radius(shape);
  const VpTargetSet targets = vp_targets(placement, transform, origins, landmark, radius);

  const fs::path out = in.out;
  fs::create_directories(out);
  std::ofstream csv(out / "targets.csv");
  if (!csv) throw IoError((out / "targets.csv").string(), "cannot write");
  csv << std::setprecision(17);
  csv << "m,origin_x,origin_y,origin_z,world_x,world_y,world_z,dx,dy,dz,r,theta,phi,r_norm,theta_norm,phi_norm\n";
  std::vector<Vec3> world_points;
  for (std::size_t m = 0; m < origins.points.size(); ++m) {
    const Vec3 p = origins.points[m];
    const Vec3 world = placement.to_volume(invert_point(transform, p, placement.crop_extents));
    world_points.push_back(world);
    const Vec3 d = landmark.position - world;
    const Spherical s = to_spherical(d);
    const VpTarget& t = targets.targets[m];
    csv << m << ',' << p.x << ',' << p.y << ',' << p.z << ',' << world.x << ',' << world.y << ',' << world.z << ','
        << d.x << ',' << d.y << ',' << d.z << ',' << s.r << ',' << s.theta << ',' << s.phi << ',' << t.r_norm << ','
        << t.theta_norm << ',' << t.phi_norm << '\n';
  }
  std::cout << "landmark " << to_string(landmark.position) << ", radius " << radius << ", transform "
            << (transform.empty() ? "identity" : transform.describe()) << ", " << origins.points.size()
            << " targets written to " << (out / "targets.csv").string() << std::endl;

  if (in.figures) {
    const Grid3f crop = apply_spatial(extract_box(volume.data, placement.offset, placement.extents), transform);
    const Grid3f edges = boundary_target(crop).magnitude;
    const std::int64_t z = crop.extents().z / 2;
    write_png(out / "figures" / "crop_boundary.png", hstack({slice_image(crop, z), slice_image(edges, z)}));

    // Axial slice through the landmark with the crop outline, the origins and their vectors.
    const auto lz = std::clamp<std::int64_t>(std::llround(landmark.position.z), 0, shape.z - 1);
    Image overlay = slice_image(volume.data, lz);
    const int x0 = int(placement.offset.x), y0 = int(placement.offset.y);
    const int x1 = int(placement.offset.x + placement.extents.x - 1), y1 = int(placement.offset.y + placement.extents.y - 1);
    draw_line(overlay, x0, y0, x1, y0, 80, 80, 255);
    draw_line(overlay, x1, y0, x1, y1, 80, 80, 255);
    draw_line(overlay, x1, y1, x0, y1, 80, 80, 255);
    draw_line(overlay, x0, y1, x0, y0, 80, 80, 255);
    const int lx = int(std::lround(landmark.position.x)), ly = int(std::lround(landmark.position.y));
    for (const Vec3& w : world_points) {
      const int wx = int(std::lround(w.x)), wy = int(std::lround(w.y));
      draw_line(overlay, wx, wy, lx, ly, 255, 200, 0);
      draw_marker(overlay, wx, wy, 0, 220, 0);
    }
    draw_marker(overlay, lx, ly, 255, 0, 0);
    write_png(out / "figures" / "vectors_overlay.png", overlay);
  }
  return 0;
}

int cmd_edges(const EdgesArgs& e) {
  Volume volume = load_volume(e.volume);
  if (e.normalize_input) volume = normalize(volume);
  const EdgeMap map = e.normalized ? boundary_target(volume.data) : scharr3d(volume.data);
  Volume out;
  out.data = map.magnitude;
  out.spacing = volume.spacing;
  save_volume(e.out, out);
  if (!e.figure.empty()) {
    const std::int64_t z = volume.shape().z / 2;
    double hi = 0.0;
    for (float v : out.data.values()) hi = std::max(hi, double(v));
    double lo = 0.0, vhi = 0.0;
    for (float v : volume.data.values()) vhi = std::max(vhi, double(v)), lo = std::min(lo, double(v));
    write_png(e.figure, hstack({slice_image(volume.data, z, lo, vhi), slice_image(out.data, z, 0.0, hi)}));
  }
  std::cout << "wrote " << (e.normalized ? "normalized " : "") << "Scharr magnitude of " << e.volume << " to "
            << e.out << std::endl;
  return 0;
}

int cmd_ablation(const CommonArgs& args, const AblationArgs& ab) {
  const RunConfig cfg = resolve_config(args);
  configure_determinism(cfg.output.deterministic);
  std::vector<AblationCell> cells;
  if (ab.cells.empty()) {
    cells = standard_cells();
  } else {
    for (const std::string& name : ab.cells) {
      try {
        cells.push_back(ablation_cell(name));
      } catch (const InvalidArgument& e) {
        throw ConfigError("cells", e.what());
      }
    }
  }
  if (ab.seeds < 1) throw ConfigError("seeds", "must be positive");
  const fs::path out = args.out;
  prepare_out(out, cfg);
  const DatasetSplits data = load_dataset(cfg.data, true);
  auto metrics = open_metrics(out, cfg, false);

  AblationOptions options;
  options.seeds.clear();
  for (int i = 0; i < ab.seeds; ++i) options.seeds.push_back(cfg.finetune.seed + std::uint64_t(i));
  options.pretrain_per_seed = !ab.shared_pretrain;
  options.metrics = metrics.get();
  const std::vector<AblationRow> rows = run_ablation(cfg, data, cells, options);
  write_ablation_csv(out / "tables" / "ablation.csv", rows);
  for (const AblationRow& r : rows) {
    std::cout << std::left << std::setw(10) << r.cell.name << " n=" << r.cell.n_vectors()
              << " best val Dice " << fmt(r.mean_val) << " +- " << fmt(r.std_val) << ", test " << fmt(r.mean_test)
              << " +- " << fmt(r.std_test) << std::endl;
  }
  return 0;
}

}  // namespace vectorpose::cli
