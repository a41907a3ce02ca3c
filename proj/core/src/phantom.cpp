#include "vectorpose/phantom.hpp"

#include <algorithm>
#include <set>

#include "vectorpose/rng.hpp"

namespace vectorpose {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec3 volume_center(Extents3 shape) {
  return {double(shape.x - 1) / 2.0, double(shape.y - 1) / 2.0, double(shape.z - 1) / 2.0};
}

}  // namespace

PhantomSpec default_phantom_spec(std::uint64_t seed, Extents3 shape) {
  PhantomSpec spec;
  spec.seed = seed;
  spec.shape = shape;
  const double s = double(std::min({shape.x, shape.y, shape.z})) / 48.0;
  auto organ = [s](std::int32_t label, Vec3 off, Vec3 radii, double intensity) {
    return OrganSpec{label, s * off, s * radii, intensity, 1.5 * s};
  };
  // Organs 1/2 and 3/5 share intensities: only their position separates them.
  spec.organs = {
      organ(1, {-10.0, 2.0, 0.0}, {5.0, 6.0, 8.0}, 0.55),
      organ(2, {10.0, 2.0, 0.0}, {5.0, 6.0, 8.0}, 0.55),
      organ(3, {0.0, -11.0, 6.0}, {9.0, 4.5, 4.5}, 0.78),
      organ(4, {0.0, 10.0, -8.0}, {6.0, 4.5, 4.5}, 0.35),
      organ(5, {0.0, -10.0, -10.0}, {4.0, 4.0, 4.0}, 0.78),
      organ(6, {0.0, 0.0, 13.0}, {5.0, 5.0, 4.0}, 0.95),
  };
  return spec;
}

void validate(const PhantomSpec& spec) {
  if (!spec.shape.positive()) throw InvalidArgument("phantom: shape must be positive");
  std::set<std::int32_t> seen;
  const Vec3 center = volume_center(spec.shape);
  for (const OrganSpec& o : spec.organs) {
    if (o.label <= 0) throw InvalidArgument("phantom: organ labels must be positive");
    if (!seen.insert(o.label).second) {
      throw InvalidArgument("phantom: duplicate organ label " + std::to_string(o.label));
    }
    if (!(o.radii.x > 0 && o.radii.y > 0 && o.radii.z > 0)) {
      throw InvalidArgument("phantom: organ radii must be positive");
    }
    if (o.position_noise < 0) throw InvalidArgument("phantom: negative positional noise");
    for (int a = 0; a < 3; ++a) {
      const double c = center[a] + o.offset[a];
      if (c - o.radii[a] < 0.0 || c + o.radii[a] > double(spec.shape[a] - 1)) {
        throw InvalidArgument("phantom: organ " + std::to_string(o.label) +
                              " does not fit inside the volume");
      }
    }
  }
}

Phantom generate_phantom(const PhantomSpec& spec) {
  validate(spec);
  Rng rng = make_stream(spec.seed, StreamTag::kPhantom);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<OrganSpec> organs = spec.organs;
  std::sort(organs.begin(), organs.end(),
            [](const OrganSpec& a, const OrganSpec& b) { return a.label < b.label; });
  const Vec3 center = volume_center(spec.shape);
  std::vector<Vec3> centers;
  for (const OrganSpec& o : organs) {
    Vec3 c = center + o.offset;
    for (int a = 0; a < 3; ++a) c[a] += o.position_noise * unit(rng);
    centers.push_back(c);
  }

  const Extents3 e = spec.shape;
  Phantom out;
  out.volume.data = Grid3f(e);
  out.volume.id = "phantom-" + std::to_string(spec.seed);
  out.labels = LabelGrid(e, 0);
  for (std::int64_t z = 0; z < e.z; ++z) {
    for (std::int64_t y = 0; y < e.y; ++y) {
      for (std::int64_t x = 0; x < e.x; ++x) {
        const Vec3 p{double(x), double(y), double(z)};
        double value = spec.background_intensity;
        double organ_weight = 0.0;
        std::int32_t label = 0;
        for (std::size_t i = 0; i < organs.size(); ++i) {
          const OrganSpec& o = organs[i];
          const Vec3 d = p - centers[i];
          const double q = std::sqrt((d.x / o.radii.x) * (d.x / o.radii.x) +
                                     (d.y / o.radii.y) * (d.y / o.radii.y) +
                                     (d.z / o.radii.z) * (d.z / o.radii.z));
          // (1 - q) * r_min approximates the signed distance to the surface in voxels.
          const double r_min = std::min({o.radii.x, o.radii.y, o.radii.z});
          const double w = sigmoid((1.0 - q) * r_min / spec.edge_softness);
          value = (1.0 - w) * value + w * o.intensity;
          organ_weight = std::max(organ_weight, w);
          if (q <= 1.0) label = o.label;
        }
        const double sigma =
            (1.0 - organ_weight) * spec.background_noise + organ_weight * spec.texture_noise;
        value += sigma * unit(rng);
        out.volume.data(x, y, z) = static_cast<float>(value);
        out.labels(x, y, z) = label;
      }
    }
  }
  return out;
}

}  // namespace vectorpose
