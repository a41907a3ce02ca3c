#include "vectorpose/spatial.hpp"

#include <sstream>

namespace vectorpose {
namespace {

constexpr double kBoundsTolerance = 1e-9;

std::pair<int, int> plane_axes(Plane plane) {
  switch (plane) {
    case Plane::kXY: return {0, 1};
    case Plane::kXZ: return {0, 2};
    case Plane::kYZ: return {1, 2};
  }
  throw UnsupportedTransform("unknown rotation plane");
}

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::kX: return "x";
    case Axis::kY: return "y";
    case Axis::kZ: return "z";
  }
  return "?";
}

const char* plane_name(Plane p) {
  switch (p) {
    case Plane::kXY: return "xy";
    case Plane::kXZ: return "xz";
    case Plane::kYZ: return "yz";
  }
  return "?";
}

Vec3 rotate_once(Vec3 p, int a, int b, Extents3 e) {
  Vec3 q = p;
  q[a] = double(e[b] - 1) - p[b];
  q[b] = p[a];
  return q;
}

Vec3 unrotate_once(Vec3 q, int a, int b, Extents3 e) {
  Vec3 p = q;
  p[a] = q[b];
  p[b] = double(e[b] - 1) - q[a];
  return p;
}

// A half turn is a flip of both plane axes; handling it directly keeps
// non-square planes valid (extents are unchanged by an even number of turns).
Vec3 half_turn(Vec3 p, int a, int b, Extents3 e) {
  p[a] = double(e[a] - 1) - p[a];
  p[b] = double(e[b] - 1) - p[b];
  return p;
}

Vec3 invert_op(const SpatialOp& op, Vec3 q, Extents3 e) {
  if (const auto* f = std::get_if<Flip>(&op)) {
    const int a = static_cast<int>(f->axis);
    q[a] = double(e[a] - 1) - q[a];
    return q;
  }
  const auto& r = std::get<Rot90>(op);
  const auto [a, b] = plane_axes(r.plane);
  if (r.k >= 2) q = half_turn(q, a, b, e);
  if (r.k % 2 == 1) q = unrotate_once(q, a, b, e);
  return q;
}

void check_in_bounds(Vec3 p, Extents3 e) {
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] >= -kBoundsTolerance && p[a] <= double(e[a] - 1) + kBoundsTolerance)) {
      throw InvalidArgument("point " + to_string(p) + " lies outside crop extents " + to_string(e));
    }
  }
}

}  // namespace

namespace detail {

Vec3 apply_op(const SpatialOp& op, Vec3 p, Extents3 e) {
  if (const auto* f = std::get_if<Flip>(&op)) {
    const int a = static_cast<int>(f->axis);
    p[a] = double(e[a] - 1) - p[a];
    return p;
  }
  const auto& r = std::get<Rot90>(op);
  const auto [a, b] = plane_axes(r.plane);
  if (r.k % 2 == 1) p = rotate_once(p, a, b, e);
  if (r.k >= 2) p = half_turn(p, a, b, e);
  return p;
}

}  // namespace detail

TransformRecord TransformRecord::inverse() const {
  TransformRecord inv;
  inv.ops.reserve(ops.size());
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    if (const auto* r = std::get_if<Rot90>(&*it)) {
      inv.ops.push_back(Rot90{r->plane, 4 - r->k});
    } else {
      inv.ops.push_back(*it);
    }
  }
  return inv;
}

TransformRecord TransformRecord::then(const TransformRecord& next) const {
  TransformRecord out = *this;
  out.ops.insert(out.ops.end(), next.ops.begin(), next.ops.end());
  return out;
}

std::string TransformRecord::describe() const {
  if (ops.empty()) return "identity";
  std::ostringstream os;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) os << ' ';
    if (const auto* f = std::get_if<Flip>(&ops[i])) {
      os << "flip(" << axis_name(f->axis) << ')';
    } else {
      const auto& r = std::get<Rot90>(ops[i]);
      os << "rot90(" << plane_name(r.plane) << ',' << r.k << ')';
    }
  }
  return os.str();
}

void validate(const TransformRecord& record) {
  for (const SpatialOp& op : record.ops) {
    if (const auto* f = std::get_if<Flip>(&op)) {
      if (static_cast<int>(f->axis) > 2) throw UnsupportedTransform("flip along unknown axis");
    } else {
      const auto& r = std::get<Rot90>(op);
      if (static_cast<int>(r.plane) > 2) throw UnsupportedTransform("rotation in unknown plane");
      if (r.k < 1 || r.k > 3) {
        throw UnsupportedTransform("rot90 with k=" + std::to_string(r.k) +
                                   " (supported: 1, 2, 3 quarter turns)");
      }
    }
  }
}

void check_compatible(const TransformRecord& record, Extents3 extents) {
  for (const SpatialOp& op : record.ops) {
    if (const auto* r = std::get_if<Rot90>(&op); r && (r->k % 2 == 1)) {
      const auto [a, b] = plane_axes(r->plane);
      if (extents[a] != extents[b]) {
        throw InvalidArgument("rot90 in plane " + std::string(plane_name(r->plane)) +
                              " needs equal extents, crop is " + to_string(extents));
      }
    }
  }
}

TransformRecord sample_spatial(Rng& rng, const SpatialAugmentConfig& cfg,
                               std::optional<Extents3> extents) {
  TransformRecord record;
  for (int a = 0; a < 3; ++a) {
    if (bernoulli(rng, cfg.flip_prob[a])) record.ops.push_back(Flip{static_cast<Axis>(a)});
  }
  if (bernoulli(rng, cfg.rot_prob)) {
    const auto plane = static_cast<Plane>(uniform_int(rng, 0, 2));
    int k = static_cast<int>(uniform_int(rng, 1, 3));
    if (extents) {
      const auto [a, b] = plane_axes(plane);
      if ((*extents)[a] != (*extents)[b]) k = 2;
    }
    record.ops.push_back(Rot90{plane, k});
  }
  return record;
}

Vec3 forward_point(const TransformRecord& record, Vec3 p, Extents3 extents) {
  validate(record);
  check_in_bounds(p, extents);
  for (const SpatialOp& op : record.ops) p = detail::apply_op(op, p, extents);
  return p;
}

Vec3 invert_point(const TransformRecord& record, Vec3 p, Extents3 extents) {
  validate(record);
  check_in_bounds(p, extents);
  for (auto it = record.ops.rbegin(); it != record.ops.rend(); ++it) p = invert_op(*it, p, extents);
  return p;
}

}  // namespace vectorpose
