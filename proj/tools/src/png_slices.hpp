#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vectorpose/grid.hpp"

namespace vectorpose::cli {

/// 8-bit RGB image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Axial slice z of `grid`, values in [lo, hi] mapped to gray.
Image slice_image(const Grid3f& grid, std::int64_t z, double lo = 0.0, double hi = 1.0);

/// Side-by-side tiles with a one-pixel gap, for comparing slices.
Image hstack(const std::vector<Image>& tiles);

void draw_marker(Image& img, int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
void draw_line(Image& img, int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b);

void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace vectorpose::cli
