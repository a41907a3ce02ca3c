#include "vectorpose/checkpoint.hpp"

#include <cmath>

#include "vectorpose/config.hpp"

namespace vectorpose {
using nlohmann::json;

namespace {

json meta_to_json(const CheckpointMeta& m) {
  json j = {{"kind", m.kind},
            {"run_config", m.run_config},
            {"network", to_json(m.network)},
            {"mode", m.mode == NetworkMode::kPretrain ? "pretrain" : "segment"},
            {"step", m.step},
            {"epoch", m.epoch},
            {"samples_consumed", m.samples_consumed},
            {"run", m.run},
            {"best_epoch", m.best_epoch}};
  j["best_dice"] = std::isnan(m.best_dice) ? json(nullptr) : json(m.best_dice);
  return j;
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta m;
  m.kind = j.at("kind").get<std::string>();
  m.run_config = j.at("run_config");
  m.network = network_config_from_json(j.at("network"));
  m.mode = j.at("mode").get<std::string>() == "pretrain" ? NetworkMode::kPretrain : NetworkMode::kSegment;
  m.step = j.at("step").get<std::int64_t>();
  m.epoch = j.at("epoch").get<std::int64_t>();
  m.samples_consumed = j.at("samples_consumed").get<std::uint64_t>();
  m.run = j.at("run").get<int>();
  m.best_epoch = j.at("best_epoch").get<std::int64_t>();
  if (!j.at("best_dice").is_null()) m.best_dice = j.at("best_dice").get<double>();
  return m;
}

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError(path.string(), "checkpoint not found");
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw IoError(path.string(), std::string("not a readable checkpoint: ") + e.what_without_backtrace());
  }
  c10::IValue version;
  if (!archive.try_read("format_version", version) || !version.isInt()) {
    throw IncompatibleCheckpoint("checkpoint " + path.string() + " has no format version");
  }
  if (version.toInt() != kCheckpointFormatVersion) {
    throw IncompatibleCheckpoint("checkpoint " + path.string() + " has format version " +
                                 std::to_string(version.toInt()) + ", expected " +
                                 std::to_string(kCheckpointFormatVersion));
  }
  return archive;
}

CheckpointMeta read_meta(torch::serialize::InputArchive& archive, const std::filesystem::path& path) {
  c10::IValue text;
  if (!archive.try_read("meta", text) || !text.isString()) {
    throw IncompatibleCheckpoint("checkpoint " + path.string() + " has no metadata");
  }
  try {
    return meta_from_json(json::parse(text.toStringRef()));
  } catch (const std::exception& e) {
    throw IncompatibleCheckpoint("checkpoint " + path.string() + " has malformed metadata: " + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, VectorPoseNet& net, torch::optim::Optimizer* optimizer,
                     const CheckpointMeta& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  torch::serialize::OutputArchive archive;
  archive.write("format_version", c10::IValue(kCheckpointFormatVersion));
  archive.write("meta", c10::IValue(meta_to_json(meta).dump()));
  torch::serialize::OutputArchive model;
  net->save(model);
  archive.write("model", model);
  if (optimizer) {
    torch::serialize::OutputArchive opt;
    optimizer->save(opt);
    archive.write("optimizer", opt);
  }
  // Write to a sibling file first so an interrupted save never leaves a torn checkpoint.
  const std::filesystem::path tmp = path.string() + ".tmp";
  try {
    archive.save_to(tmp.string());
  } catch (const c10::Error& e) {
    throw IoError(path.string(), std::string("cannot write checkpoint: ") + e.what_without_backtrace());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  auto archive = open_archive(path);
  return read_meta(archive, path);
}

VectorPoseNet load_network(const std::filesystem::path& path, CheckpointMeta* meta_out) {
  auto archive = open_archive(path);
  const CheckpointMeta meta = read_meta(archive, path);
  VectorPoseNet net(meta.network, meta.mode);
  torch::serialize::InputArchive model;
  if (!archive.try_read("model", model)) throw IncompatibleCheckpoint("checkpoint " + path.string() + " has no model");
  try {
    net->load(model);
  } catch (const c10::Error& e) {
    throw IncompatibleCheckpoint("checkpoint " + path.string() + " does not match its network description",
                                 {e.what_without_backtrace()});
  }
  if (meta_out) *meta_out = meta;
  return net;
}

void load_optimizer_state(const std::filesystem::path& path, torch::optim::Optimizer& optimizer) {
  auto archive = open_archive(path);
  torch::serialize::InputArchive opt;
  if (!archive.try_read("optimizer", opt)) {
    throw IncompatibleCheckpoint("checkpoint " + path.string() + " has no optimizer state");
  }
  optimizer.load(opt);
}

}  // namespace vectorpose
