#include "vectorpose/intensity.hpp"

#include <algorithm>
#include <numeric>

namespace vectorpose {
namespace {

constexpr int kCurveSamples = 1000;

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument(std::string("intensity noise: ") + name + " must lie in [0, 1]");
  }
}

Extents3 random_box(Rng& rng, Extents3 crop, double frac_lo, double frac_hi) {
  Extents3 size;
  for (int a = 0; a < 3; ++a) {
    const auto lo = std::max<std::int64_t>(1, std::int64_t(frac_lo * double(crop[a])));
    const auto hi = std::max<std::int64_t>(lo, std::int64_t(frac_hi * double(crop[a])));
    size[a] = std::min(uniform_int(rng, lo, hi), crop[a]);
  }
  return size;
}

Extents3 random_offset(Rng& rng, Extents3 crop, Extents3 size) {
  Extents3 off;
  for (int a = 0; a < 3; ++a) off[a] = uniform_int(rng, 0, crop[a] - size[a]);
  return off;
}

}  // namespace

void validate(const IntensityNoiseConfig& c, Extents3 e) {
  check_prob(c.intensity_shift_prob, "intensity_shift_prob");
  check_prob(c.shuffle_prob, "shuffle_prob");
  check_prob(c.paint_prob, "paint_prob");
  check_prob(c.outpaint_prob, "outpaint_prob");
  for (int a = 0; a < 3; ++a) {
    if (c.shuffle_block_extents[a] < 1 || c.shuffle_block_extents[a] > e[a]) {
      throw InvalidArgument("intensity noise: shuffle block " + to_string(c.shuffle_block_extents) +
                            " does not fit crop " + to_string(e));
    }
  }
  if (c.shuffle_block_count < 0) throw InvalidArgument("intensity noise: negative shuffle_block_count");
  if (c.inpaint_box_count_min < 0 || c.inpaint_box_count_max < c.inpaint_box_count_min ||
      c.outpaint_box_count_min < 0 || c.outpaint_box_count_max < c.outpaint_box_count_min) {
    throw InvalidArgument("intensity noise: box count range is empty or negative");
  }
  for (double f : {c.inpaint_box_frac_min, c.inpaint_box_frac_max, c.outpaint_box_frac_min,
                   c.outpaint_box_frac_max}) {
    if (!(f > 0.0 && f < 1.0)) {
      throw InvalidArgument("intensity noise: box fractions must lie in (0, 1)");
    }
  }
  if (c.inpaint_box_frac_max < c.inpaint_box_frac_min ||
      c.outpaint_box_frac_max < c.outpaint_box_frac_min) {
    throw InvalidArgument("intensity noise: box fraction range is empty");
  }
}

MonotoneCurve::MonotoneCurve(double x1, double y1, double x2, double y2) {
  // Control x's and y's are each sorted, so both Bernstein polynomials are
  // non-decreasing in t and y(x) is monotone.
  const std::array<double, 4> px{0.0, std::min(x1, x2), std::max(x1, x2), 1.0};
  const std::array<double, 4> py{0.0, std::min(y1, y2), std::max(y1, y2), 1.0};
  xs_.resize(kCurveSamples + 1);
  ys_.resize(kCurveSamples + 1);
  for (int i = 0; i <= kCurveSamples; ++i) {
    const double t = double(i) / kCurveSamples;
    const double u = 1.0 - t;
    const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t, b3 = t * t * t;
    xs_[i] = b0 * px[0] + b1 * px[1] + b2 * px[2] + b3 * px[3];
    ys_[i] = b0 * py[0] + b1 * py[1] + b2 * py[2] + b3 * py[3];
  }
}

MonotoneCurve MonotoneCurve::random(Rng& rng) {
  const double x1 = uniform(rng, 0.0, 1.0), y1 = uniform(rng, 0.0, 1.0);
  const double x2 = uniform(rng, 0.0, 1.0), y2 = uniform(rng, 0.0, 1.0);
  return {x1, y1, x2, y2};
}

double MonotoneCurve::operator()(double v) const {
  v = std::clamp(v, 0.0, 1.0);
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), v);
  if (it == xs_.begin()) return ys_.front();
  if (it == xs_.end()) return ys_.back();
  const auto i = std::size_t(it - xs_.begin());
  const double x0 = xs_[i - 1], x1 = xs_[i];
  const double w = x1 > x0 ? (v - x0) / (x1 - x0) : 0.0;
  return std::clamp(ys_[i - 1] + w * (ys_[i] - ys_[i - 1]), 0.0, 1.0);
}

void intensity_shift(Grid3f& crop, const MonotoneCurve& curve) {
  for (float& v : crop.values()) v = static_cast<float>(curve(v));
}

void local_pixel_shuffle(Grid3f& crop, Extents3 block, int count, Rng& rng) {
  const Extents3 e = crop.extents();
  std::vector<float> buffer;
  for (int i = 0; i < count; ++i) {
    Extents3 size;
    for (int a = 0; a < 3; ++a) size[a] = uniform_int(rng, 1, std::min(block[a], e[a]));
    const Extents3 off = random_offset(rng, e, size);
    buffer.clear();
    for (std::int64_t z = 0; z < size.z; ++z)
      for (std::int64_t y = 0; y < size.y; ++y)
        for (std::int64_t x = 0; x < size.x; ++x) buffer.push_back(crop(off.x + x, off.y + y, off.z + z));
    std::shuffle(buffer.begin(), buffer.end(), rng);
    std::size_t k = 0;
    for (std::int64_t z = 0; z < size.z; ++z)
      for (std::int64_t y = 0; y < size.y; ++y)
        for (std::int64_t x = 0; x < size.x; ++x) crop(off.x + x, off.y + y, off.z + z) = buffer[k++];
  }
}

std::int64_t inpaint_box(Grid3f& crop, Extents3 off, Extents3 size, Rng& rng) {
  std::uniform_real_distribution<float> noise(0.0f, 1.0f);
  for (std::int64_t z = 0; z < size.z; ++z)
    for (std::int64_t y = 0; y < size.y; ++y)
      for (std::int64_t x = 0; x < size.x; ++x) crop(off.x + x, off.y + y, off.z + z) = noise(rng);
  return size.voxels();
}

Grid3f apply_intensity(const Grid3f& crop, const IntensityNoiseConfig& cfg, Rng& rng) {
  const Extents3 e = crop.extents();
  validate(cfg, e);
  Grid3f out = crop;

  if (bernoulli(rng, cfg.intensity_shift_prob)) intensity_shift(out, MonotoneCurve::random(rng));
  if (bernoulli(rng, cfg.shuffle_prob)) {
    local_pixel_shuffle(out, cfg.shuffle_block_extents, cfg.shuffle_block_count, rng);
  }
  if (bernoulli(rng, cfg.paint_prob)) {
    if (bernoulli(rng, cfg.outpaint_prob)) {
      // Out-painting: noise everywhere except a few kept boxes.
      const Grid3f kept = out;
      std::uniform_real_distribution<float> noise(0.0f, 1.0f);
      for (float& v : out.values()) v = noise(rng);
      const auto boxes = uniform_int(rng, cfg.outpaint_box_count_min, cfg.outpaint_box_count_max);
      for (std::int64_t b = 0; b < boxes; ++b) {
        const Extents3 size = random_box(rng, e, cfg.outpaint_box_frac_min, cfg.outpaint_box_frac_max);
        const Extents3 off = random_offset(rng, e, size);
        for (std::int64_t z = 0; z < size.z; ++z)
          for (std::int64_t y = 0; y < size.y; ++y)
            for (std::int64_t x = 0; x < size.x; ++x) {
              out(off.x + x, off.y + y, off.z + z) = kept(off.x + x, off.y + y, off.z + z);
            }
      }
    } else {
      const auto boxes = uniform_int(rng, cfg.inpaint_box_count_min, cfg.inpaint_box_count_max);
      for (std::int64_t b = 0; b < boxes; ++b) {
        const Extents3 size = random_box(rng, e, cfg.inpaint_box_frac_min, cfg.inpaint_box_frac_max);
        inpaint_box(out, random_offset(rng, e, size), size, rng);
      }
    }
  }
  for (float& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

}  // namespace vectorpose
