#include "png_slices.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace vectorpose::cli {

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  std::uint8_t* p = &rgb[(std::size_t(y) * width + x) * 3];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

Image slice_image(const Grid3f& grid, std::int64_t z, double lo, double hi) {
  const Extents3 e = grid.extents();
  Image img(int(e.x), int(e.y));
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::int64_t y = 0; y < e.y; ++y) {
    for (std::int64_t x = 0; x < e.x; ++x) {
      const double v = std::clamp((grid(x, y, z) - lo) / span, 0.0, 1.0);
      const auto g = std::uint8_t(std::lround(255.0 * v));
      img.set(int(x), int(y), g, g, g);
    }
  }
  return img;
}

Image hstack(const std::vector<Image>& tiles) {
  int w = 0, h = 0;
  for (const Image& t : tiles) {
    w += t.width + 1;
    h = std::max(h, t.height);
  }
  Image out(std::max(w - 1, 0), h);
  int x0 = 0;
  for (const Image& t : tiles) {
    for (int y = 0; y < t.height; ++y) {
      std::copy_n(&t.rgb[std::size_t(y) * t.width * 3], t.width * 3, &out.rgb[(std::size_t(y) * out.width + x0) * 3]);
    }
    x0 += t.width + 1;
  }
  return out;
}

void draw_marker(Image& img, int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (int d = -1; d <= 1; ++d) {
    img.set(x + d, y, r, g, b);
    img.set(x, y + d, r, g, b);
  }
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
  for (int i = 0; i <= steps; ++i) {
    const double t = double(i) / steps;
    img.set(int(std::lround(x0 + t * (x1 - x0))), int(std::lround(y0 + t * (y1 - y0))), r, g, b);
  }
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw IoError(path.string(), "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError(path.string(), "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string(), "libpng write failed");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&img.rgb[std::size_t(y) * img.width * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace vectorpose::cli
