#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vectorpose {

// ---------------------------------------------------------------------------
// Error types. Every failure mode the toolkit reports maps onto one of these;
// the CLI translates them into stable exit codes.
// ---------------------------------------------------------------------------

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedTransform : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  /// Dotted path of the offending key, e.g. "pretrain.lambda".
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class IncompatibleCheckpoint : public std::runtime_error {
 public:
  IncompatibleCheckpoint(const std::string& what, std::vector<std::string> differences = {})
      : std::runtime_error(compose(what, differences)), differences_(std::move(differences)) {}
  /// One line per differing tensor or config key.
  const std::vector<std::string>& differences() const noexcept { return differences_; }

 private:
  static std::string compose(const std::string& what, const std::vector<std::string>& diffs) {
    std::string msg = what;
    for (const auto& d : diffs) msg += "\n  " + d;
    return msg;
  }
  std::vector<std::string> differences_;
};

class DivergedTraining : public std::runtime_error {
 public:
  DivergedTraining(const std::string& what, std::vector<std::uint64_t> sample_ids)
      : std::runtime_error(what), sample_ids_(std::move(sample_ids)) {}
  /// Global sample indices of the offending batch; each one reseeds its crop.
  const std::vector<std::uint64_t>& sample_ids() const noexcept { return sample_ids_; }

 private:
  std::vector<std::uint64_t> sample_ids_;
};

// ---------------------------------------------------------------------------
// Small fixed-size vectors. Axis order is always (x, y, z).
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline std::ostream& operator<<(std::ostream& os, Vec3 v) {
  return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

struct Extents3 {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  constexpr std::int64_t operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr std::int64_t& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr std::int64_t voxels() const { return x * y * z; }
  constexpr bool positive() const { return x > 0 && y > 0 && z > 0; }
  friend constexpr bool operator==(Extents3, Extents3) = default;

  static constexpr Extents3 cube(std::int64_t e) { return {e, e, e}; }
};

inline std::ostream& operator<<(std::ostream& os, Extents3 e) {
  return os << '(' << e.x << ", " << e.y << ", " << e.z << ')';
}

std::string to_string(Extents3 e);
std::string to_string(Vec3 v);

}  // namespace vectorpose
