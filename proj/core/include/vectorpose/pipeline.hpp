#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

#include "vectorpose/config.hpp"
#include "vectorpose/geometry.hpp"

namespace vectorpose {

/// Everything one pretraining crop contributes to a step.
struct PretrainSample {
  std::uint64_t index = 0;  // global sample index; reseeds the whole draw
  std::size_t volume_index = 0;
  Grid3f input;            // after T_S and T_I
  Grid3f voxel_target;     // after T_S, before T_I
  Grid3f boundary_target;  // Scharr target of voxel_target
  VpTargetSet vp;
  CropPlacement placement;
  TransformRecord transform;
};

struct SampleSettings {
  Extents3 crop_extents;
  int n_vectors = 9;
  double eta = 0.05;
  bool spatial = true;
  bool intensity = true;
  SpatialAugmentConfig spatial_cfg;
  IntensityNoiseConfig intensity_cfg;
  CropSamplingConfig crop_cfg;
  std::uint64_t seed = 0;
};

/// Spatial transforms are switched off for the partial-corner layouts (n = 2
/// or 5) because their origin correspondence is undefined.
SampleSettings sample_settings(const RunConfig& cfg);

/// Volume used by global sample `index`: index % volume count.
inline std::size_t volume_for_sample(std::uint64_t index, std::size_t volumes) {
  return static_cast<std::size_t>(index % volumes);
}

/// landmark -> crop -> T_S -> targets (VP, voxel, boundary) -> T_I on the
/// input copy. Deterministic in (settings.seed, index).
PretrainSample build_pretrain_sample(const Volume& volume, std::size_t volume_index, const SampleSettings& s,
                                     std::uint64_t index);

/// Builds items for consecutive indices on worker threads and hands them out
/// strictly in index order through a bounded window. With zero workers the
/// items are built on the calling thread. Exceptions from the producer are
/// rethrown by next().
template <class T>
class OrderedPrefetcher {
 public:
  using Producer = std::function<T(std::uint64_t)>;

  OrderedPrefetcher(Producer produce, std::uint64_t start, int workers, std::size_t capacity)
      : produce_(std::move(produce)), claim_(start), emit_(start), capacity_(std::max<std::size_t>(capacity, 1)) {
    for (int i = 0; i < workers; ++i) threads_.emplace_back([this] { work(); });
  }
  OrderedPrefetcher(const OrderedPrefetcher&) = delete;
  OrderedPrefetcher& operator=(const OrderedPrefetcher&) = delete;

  ~OrderedPrefetcher() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  T next() {
    if (threads_.empty()) return produce_(emit_++);
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return ready_.count(emit_) > 0; });
    auto node = ready_.extract(emit_);
    ++emit_;
    lock.unlock();
    cv_.notify_all();
    if (auto* err = std::get_if<std::exception_ptr>(&node.mapped())) std::rethrow_exception(*err);
    return std::move(std::get<T>(node.mapped()));
  }

 private:
  void work() {
    while (true) {
      std::uint64_t index;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || claim_ < emit_ + capacity_; });
        if (stop_) return;
        index = claim_++;
      }
      std::variant<T, std::exception_ptr> item;
      try {
        item = produce_(index);
      } catch (...) {
        item = std::current_exception();
      }
      {
        std::lock_guard lock(mu_);
        ready_.emplace(index, std::move(item));
      }
      cv_.notify_all();
    }
  }

  Producer produce_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t claim_;
  std::uint64_t emit_;
  std::size_t capacity_;
  bool stop_ = false;
  std::map<std::uint64_t, std::variant<T, std::exception_ptr>> ready_;
  std::vector<std::thread> threads_;
};

}  // namespace vectorpose
