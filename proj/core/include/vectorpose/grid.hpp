#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "vectorpose/common.hpp"

namespace vectorpose {

/// Dense 3D scalar array. x varies fastest in memory, so the buffer maps onto a
/// (z, y, x) = (D, H, W) tensor without copying.
template <typename T>
class Grid3 {
 public:
  using value_type = T;

  Grid3() = default;
  explicit Grid3(Extents3 extents, T fill = T{}) : extents_(extents) {
    if (extents.x < 0 || extents.y < 0 || extents.z < 0) {
      throw InvalidArgument("Grid3: negative extent " + to_string(extents));
    }
    data_.assign(static_cast<std::size_t>(extents.voxels()), fill);
  }
  Grid3(Extents3 extents, std::vector<T> data) : extents_(extents), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != extents.voxels()) {
      throw InvalidArgument("Grid3: buffer size does not match extents " + to_string(extents));
    }
  }

  Extents3 extents() const noexcept { return extents_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return static_cast<std::size_t>(x + extents_.x * (y + extents_.y * z));
  }
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return x >= 0 && y >= 0 && z >= 0 && x < extents_.x && y < extents_.y && z < extents_.z;
  }

  T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) { return data_[index(x, y, z)]; }
  const T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[index(x, y, z)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  const std::vector<T>& vector() const noexcept { return data_; }

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  Extents3 extents_{};
  std::vector<T> data_;
};

using Grid3f = Grid3<float>;
using LabelGrid = Grid3<std::int32_t>;

/// Copies the axis-aligned box [offset, offset + extents) out of `source`.
template <typename T>
Grid3<T> extract_box(const Grid3<T>& source, Extents3 offset, Extents3 extents) {
  const Extents3 s = source.extents();
  for (int a = 0; a < 3; ++a) {
    if (offset[a] < 0 || extents[a] < 0 || offset[a] + extents[a] > s[a]) {
      throw InvalidArgument("extract_box: box at " + to_string(offset) + " with extents " +
                            to_string(extents) + " exceeds source " + to_string(s));
    }
  }
  Grid3<T> out(extents);
  for (std::int64_t z = 0; z < extents.z; ++z) {
    for (std::int64_t y = 0; y < extents.y; ++y) {
      const T* row = &source(offset.x, offset.y + y, offset.z + z);
      std::copy(row, row + extents.x, &out(0, y, z));
    }
  }
  return out;
}

}  // namespace vectorpose
