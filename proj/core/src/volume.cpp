#include "vectorpose/volume.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vectorpose {

Volume normalize(const Volume& volume, double lo_pct, double hi_pct) {
  if (volume.data.empty()) throw InvalidArgument("normalize: empty volume");
  if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 100.0)) {
    throw InvalidArgument("normalize: need 0 <= lo < hi <= 100 percentiles");
  }
  std::vector<float> sorted(volume.data.values().begin(), volume.data.values().end());
  std::sort(sorted.begin(), sorted.end());
  const double last = double(sorted.size() - 1);
  const auto lo_idx = static_cast<std::size_t>(std::floor(lo_pct / 100.0 * last));
  const auto hi_idx = static_cast<std::size_t>(std::ceil(hi_pct / 100.0 * last));
  const double lo = sorted[lo_idx];
  const double hi = sorted[std::min(hi_idx, sorted.size() - 1)];

  Volume out = volume;
  out.normalized = true;
  auto values = out.data.values();
  if (!(hi > lo)) {
    std::fill(values.begin(), values.end(), 0.0f);
    return out;
  }
  const double scale = 1.0 / (hi - lo);
  for (float& v : values) {
    const double c = std::clamp(double(v), lo, hi);
    v = static_cast<float>(std::clamp((c - lo) * scale, 0.0, 1.0));
  }
  return out;
}

double informative_fraction(const Grid3f& crop, double threshold) {
  if (crop.empty()) return 0.0;
  std::size_t count = 0;
  for (float v : crop.values()) count += (double(v) > threshold);
  return double(count) / double(crop.size());
}

Grid3f resample_trilinear(const Grid3f& src, Extents3 e) {
  const Extents3 s = src.extents();
  Grid3f out(e);
  auto coord = [](std::int64_t i, std::int64_t out_n, std::int64_t in_n) {
    return out_n > 1 ? double(i) * double(in_n - 1) / double(out_n - 1) : 0.0;
  };
  for (std::int64_t z = 0; z < e.z; ++z) {
    const double fz = coord(z, e.z, s.z);
    const auto z0 = std::min<std::int64_t>(std::int64_t(fz), s.z - 1);
    const auto z1 = std::min<std::int64_t>(z0 + 1, s.z - 1);
    const double wz = fz - double(z0);
    for (std::int64_t y = 0; y < e.y; ++y) {
      const double fy = coord(y, e.y, s.y);
      const auto y0 = std::min<std::int64_t>(std::int64_t(fy), s.y - 1);
      const auto y1 = std::min<std::int64_t>(y0 + 1, s.y - 1);
      const double wy = fy - double(y0);
      for (std::int64_t x = 0; x < e.x; ++x) {
        const double fx = coord(x, e.x, s.x);
        const auto x0 = std::min<std::int64_t>(std::int64_t(fx), s.x - 1);
        const auto x1 = std::min<std::int64_t>(x0 + 1, s.x - 1);
        const double wx = fx - double(x0);
        const double c00 = src(x0, y0, z0) * (1 - wx) + src(x1, y0, z0) * wx;
        const double c10 = src(x0, y1, z0) * (1 - wx) + src(x1, y1, z0) * wx;
        const double c01 = src(x0, y0, z1) * (1 - wx) + src(x1, y0, z1) * wx;
        const double c11 = src(x0, y1, z1) * (1 - wx) + src(x1, y1, z1) * wx;
        const double c0 = c00 * (1 - wy) + c10 * wy;
        const double c1 = c01 * (1 - wy) + c11 * wy;
        out(x, y, z) = static_cast<float>(c0 * (1 - wz) + c1 * wz);
      }
    }
  }
  return out;
}

CropSample sample_crop(const Volume& volume, Extents3 extents, const CropSamplingConfig& cfg,
                       Rng& rng) {
  const Extents3 shape = volume.shape();
  if (!extents.positive()) throw InvalidArgument("sample_crop: crop extents must be positive");
  for (int a = 0; a < 3; ++a) {
    if (extents[a] > shape[a]) {
      throw InvalidArgument("sample_crop: crop " + to_string(extents) +
                            " does not fit volume " + to_string(shape));
    }
  }
  if (cfg.max_retries < 0) throw InvalidArgument("sample_crop: max_retries must be >= 0");

  CropSample best;
  best.informative_fraction = -1.0;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    Extents3 region = extents;
    if (cfg.scale_jitter > 0.0) {
      const double s = uniform(rng, 1.0 - cfg.scale_jitter, 1.0 + cfg.scale_jitter);
      for (int a = 0; a < 3; ++a) {
        region[a] = std::clamp<std::int64_t>(std::llround(double(extents[a]) * s), 2, shape[a]);
      }
    }
    Extents3 offset;
    for (int a = 0; a < 3; ++a) offset[a] = uniform_int(rng, 0, shape[a] - region[a]);

    Grid3f data = extract_box(volume.data, offset, region);
    if (!(region == extents)) data = resample_trilinear(data, extents);
    const double fraction = informative_fraction(data, cfg.background_threshold);
    if (fraction > best.informative_fraction) {
      best.data = std::move(data);
      best.placement.offset = offset;
      best.placement.extents = region;
      best.placement.crop_extents = extents;
      best.placement.source_volume_id = volume.id;
      best.informative_fraction = fraction;
    }
    if (fraction >= cfg.min_informative_fraction) break;
  }
  return best;
}

}  // namespace vectorpose
