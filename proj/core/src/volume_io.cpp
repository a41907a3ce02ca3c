#include "vectorpose/volume_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <memory>

namespace vectorpose {
namespace {

static_assert(std::endian::native == std::endian::little, "volume I/O assumes a little-endian host");

constexpr int kNiftiHeaderSize = 348;
constexpr float kNiftiVoxOffset = 352.0f;

enum NiftiType : std::int16_t {
  kUInt8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUInt16 = 512,
};

struct GzCloser {
  void operator()(gzFile f) const { if (f) gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

std::string lower_name(const std::filesystem::path& p) {
  std::string s = p.filename().string();
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

enum class Format { kNifti, kNiftiGz, kRaw };

Format format_of(const std::filesystem::path& path) {
  const std::string n = lower_name(path);
  if (ends_with(n, ".nii.gz")) return Format::kNiftiGz;
  if (ends_with(n, ".nii")) return Format::kNifti;
  if (ends_with(n, ".vpr")) return Format::kRaw;
  throw IoError(path.string(), "unrecognized volume extension (expected .nii, .nii.gz or .vpr)");
}

template <typename T>
T read_at(const std::vector<char>& buf, std::size_t offset, bool swap) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  if (swap) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void write_at(std::vector<char>& buf, std::size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

std::vector<char> read_gz_all(const std::filesystem::path& path) {
  GzHandle f(gzopen(path.string().c_str(), "rb"));
  if (!f) throw IoError(path.string(), "cannot open for reading");
  std::vector<char> out;
  char chunk[1 << 16];
  for (;;) {
    const int n = gzread(f.get(), chunk, sizeof(chunk));
    if (n < 0) throw IoError(path.string(), "corrupt or truncated compressed stream");
    if (n == 0) break;
    out.insert(out.end(), chunk, chunk + n);
  }
  return out;
}

void write_gz_all(const std::filesystem::path& path, const std::vector<char>& bytes, bool compress) {
  GzHandle f(gzopen(path.string().c_str(), compress ? "wb6" : "wbT"));
  if (!f) throw IoError(path.string(), "cannot open for writing");
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    if (gzwrite(f.get(), bytes.data() + done, n) != int(n)) {
      throw IoError(path.string(), "short write");
    }
    done += n;
  }
}

struct RawGrid {
  Extents3 extents;
  std::optional<Vec3> spacing;
  std::vector<double> values;
};

template <typename T>
void convert(const std::vector<char>& buf, std::size_t offset, std::size_t count, bool swap,
             double slope, double inter, std::vector<double>& out) {
  out.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = double(read_at<T>(buf, offset + i * sizeof(T), swap)) * slope + inter;
  }
}

RawGrid read_nifti(const std::filesystem::path& path) {
  const std::vector<char> buf = read_gz_all(path);
  if (buf.size() < std::size_t(kNiftiHeaderSize)) throw IoError(path.string(), "file shorter than a NIfTI header");
  bool swap = false;
  if (read_at<std::int32_t>(buf, 0, false) != kNiftiHeaderSize) {
    if (read_at<std::int32_t>(buf, 0, true) != kNiftiHeaderSize) {
      throw IoError(path.string(), "not a NIfTI-1 file (bad sizeof_hdr)");
    }
    swap = true;
  }
  if (std::memcmp(buf.data() + 344, "n+1", 3) != 0) {
    throw IoError(path.string(), "not a single-file NIfTI-1 image (magic is not n+1)");
  }
  const auto ndim = read_at<std::int16_t>(buf, 40, swap);
  if (ndim < 1 || ndim > 7) throw IoError(path.string(), "invalid dim[0]");
  RawGrid g;
  Vec3 spacing;
  for (int a = 0; a < 3; ++a) {
    const auto d = a < ndim ? read_at<std::int16_t>(buf, 42 + 2 * a, swap) : std::int16_t{1};
    if (d < 1) throw IoError(path.string(), "non-positive dimension");
    g.extents[a] = d;
    spacing[a] = a < ndim ? double(read_at<float>(buf, 80 + 4 * a, swap)) : 1.0;
  }
  for (int a = 3; a < ndim; ++a) {
    if (read_at<std::int16_t>(buf, 42 + 2 * a, swap) > 1) {
      throw IoError(path.string(), "only single 3D volumes are supported (dim[4..] > 1)");
    }
  }
  if (spacing.x > 0 && spacing.y > 0 && spacing.z > 0) g.spacing = spacing;

  const auto datatype = read_at<std::int16_t>(buf, 70, swap);
  const auto vox_offset = static_cast<std::size_t>(read_at<float>(buf, 108, swap));
  double slope = read_at<float>(buf, 112, swap);
  double inter = read_at<float>(buf, 116, swap);
  if (slope == 0.0 || !std::isfinite(slope)) {
    slope = 1.0;
    inter = 0.0;
  }
  if (!std::isfinite(inter)) inter = 0.0;

  const auto count = static_cast<std::size_t>(g.extents.voxels());
  std::size_t elem = 0;
  switch (datatype) {
    case kUInt8: case kInt8: elem = 1; break;
    case kInt16: case kUInt16: elem = 2; break;
    case kInt32: case kFloat32: elem = 4; break;
    case kFloat64: elem = 8; break;
    default: throw IoError(path.string(), "unsupported NIfTI datatype " + std::to_string(datatype));
  }
  if (buf.size() < vox_offset + count * elem) throw IoError(path.string(), "truncated voxel data");
  switch (datatype) {
    case kUInt8: convert<std::uint8_t>(buf, vox_offset, count, swap, slope, inter, g.values); break;
    case kInt8: convert<std::int8_t>(buf, vox_offset, count, swap, slope, inter, g.values); break;
    case kInt16: convert<std::int16_t>(buf, vox_offset, count, swap, slope, inter, g.values); break;
    case kUInt16: convert<std::uint16_t>(buf, vox_offset, count, swap, slope, inter, g.values); break;
    case kInt32: convert<std::int32_t>(buf, vox_offset, count, swap, slope, inter, g.values); break;
    case kFloat32: convert<float>(buf, vox_offset, count, swap, slope, inter, g.values); break;
    case kFloat64: convert<double>(buf, vox_offset, count, swap, slope, inter, g.values); break;
  }
  return g;
}

template <typename T>
void write_nifti(const std::filesystem::path& path, Extents3 e, std::optional<Vec3> spacing,
                 std::span<const T> values, std::int16_t datatype, bool compress) {
  for (int a = 0; a < 3; ++a) {
    if (e[a] > 32767) throw IoError(path.string(), "extent exceeds the NIfTI-1 16-bit limit");
  }
  std::vector<char> buf(std::size_t(kNiftiVoxOffset) + values.size() * sizeof(T), 0);
  write_at<std::int32_t>(buf, 0, kNiftiHeaderSize);
  write_at<std::int16_t>(buf, 40, 3);
  for (int a = 0; a < 3; ++a) write_at<std::int16_t>(buf, 42 + 2 * a, std::int16_t(e[a]));
  for (int a = 3; a < 7; ++a) write_at<std::int16_t>(buf, 42 + 2 * a, 1);
  write_at<std::int16_t>(buf, 70, datatype);
  write_at<std::int16_t>(buf, 72, std::int16_t(8 * sizeof(T)));
  const Vec3 sp = spacing.value_or(Vec3{1.0, 1.0, 1.0});
  write_at<float>(buf, 76, 1.0f);  // qfac
  for (int a = 0; a < 3; ++a) write_at<float>(buf, 80 + 4 * a, float(sp[a]));
  write_at<float>(buf, 108, kNiftiVoxOffset);
  write_at<float>(buf, 112, 1.0f);
  write_at<float>(buf, 116, 0.0f);
  buf[123] = 2;  // xyzt_units: mm
  std::memcpy(buf.data() + 344, "n+1\0", 4);
  std::memcpy(buf.data() + std::size_t(kNiftiVoxOffset), values.data(), values.size() * sizeof(T));
  write_gz_all(path, buf, compress);
}

RawGrid read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::vector<char> header(32);
  if (!in.read(header.data(), 32)) throw IoError(path.string(), "file shorter than the raw header");
  if (std::memcmp(header.data(), "VPRW", 4) != 0) throw IoError(path.string(), "bad raw magic");
  const auto version = read_at<std::uint32_t>(header, 4, false);
  if (version != kRawFormatVersion) {
    throw IoError(path.string(), "unsupported raw format version " + std::to_string(version));
  }
  RawGrid g;
  Vec3 spacing;
  for (int a = 0; a < 3; ++a) {
    const auto d = read_at<std::int32_t>(header, 8 + 4 * a, false);
    if (d < 1) throw IoError(path.string(), "non-positive extent in raw header");
    g.extents[a] = d;
    spacing[a] = read_at<float>(header, 20 + 4 * a, false);
  }
  if (spacing.x > 0 && spacing.y > 0 && spacing.z > 0) g.spacing = spacing;
  const auto count = static_cast<std::size_t>(g.extents.voxels());
  std::vector<float> data(count);
  if (!in.read(reinterpret_cast<char*>(data.data()), std::streamsize(count * sizeof(float)))) {
    throw IoError(path.string(), "truncated voxel data");
  }
  g.values.assign(data.begin(), data.end());
  return g;
}

void write_raw(const std::filesystem::path& path, Extents3 e, std::optional<Vec3> spacing,
               std::span<const float> values) {
  std::vector<char> header(32, 0);
  std::memcpy(header.data(), "VPRW", 4);
  write_at<std::uint32_t>(header, 4, kRawFormatVersion);
  for (int a = 0; a < 3; ++a) {
    write_at<std::int32_t>(header, 8 + 4 * a, std::int32_t(e[a]));
    write_at<float>(header, 20 + 4 * a, spacing ? float((*spacing)[a]) : 0.0f);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(header.data(), 32);
  out.write(reinterpret_cast<const char*>(values.data()), std::streamsize(values.size() * sizeof(float)));
  if (!out) throw IoError(path.string(), "short write");
}

RawGrid read_any(const std::filesystem::path& path) {
  const Format f = format_of(path);
  if (!std::filesystem::exists(path)) throw IoError(path.string(), "no such file");
  return f == Format::kRaw ? read_raw(path) : read_nifti(path);
}

}  // namespace

bool is_volume_file(const std::filesystem::path& path) {
  const std::string n = lower_name(path);
  return ends_with(n, ".nii") || ends_with(n, ".nii.gz") || ends_with(n, ".vpr");
}

Volume load_volume(const std::filesystem::path& path) {
  RawGrid g = read_any(path);
  std::vector<float> data(g.values.begin(), g.values.end());
  Volume v;
  v.data = Grid3f(g.extents, std::move(data));
  v.spacing = g.spacing;
  v.id = path.filename().string();
  return v;
}

void save_volume(const std::filesystem::path& path, const Volume& volume) {
  switch (format_of(path)) {
    case Format::kRaw: write_raw(path, volume.shape(), volume.spacing, volume.data.values()); break;
    case Format::kNifti:
      write_nifti<float>(path, volume.shape(), volume.spacing, volume.data.values(), kFloat32, false);
      break;
    case Format::kNiftiGz:
      write_nifti<float>(path, volume.shape(), volume.spacing, volume.data.values(), kFloat32, true);
      break;
  }
}

LabelGrid load_labels(const std::filesystem::path& path) {
  RawGrid g = read_any(path);
  std::vector<std::int32_t> data(g.values.size());
  std::transform(g.values.begin(), g.values.end(), data.begin(),
                 [](double v) { return static_cast<std::int32_t>(std::lround(v)); });
  return LabelGrid(g.extents, std::move(data));
}

void save_labels(const std::filesystem::path& path, const LabelGrid& labels,
                 std::optional<Vec3> spacing) {
  switch (format_of(path)) {
    case Format::kRaw: {
      std::vector<float> f(labels.values().begin(), labels.values().end());
      write_raw(path, labels.extents(), spacing, f);
      break;
    }
    case Format::kNifti:
      write_nifti<std::int32_t>(path, labels.extents(), spacing, labels.values(), kInt32, false);
      break;
    case Format::kNiftiGz:
      write_nifti<std::int32_t>(path, labels.extents(), spacing, labels.values(), kInt32, true);
      break;
  }
}

}  // namespace vectorpose
