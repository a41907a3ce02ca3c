#pragma once

#include <filesystem>

#include "vectorpose/grid.hpp"
#include "vectorpose/volume.hpp"

namespace vectorpose {

// Supported on-disk formats, chosen by file extension:
//   .nii / .nii.gz  NIfTI-1 single file (read: u8/i8/i16/u16/i32/f32/f64; write: f32, i32 labels)
//   .vpr            toolkit raw: 32-byte little-endian header followed by f32 voxels
//                   [0..4) magic "VPRW" | [4..8) u32 version | [8..20) 3x i32 extents
//                   [20..32) 3x f32 spacing (all zero when unknown)
// Axis order is (x, y, z) with x fastest, matching Grid3.

inline constexpr std::uint32_t kRawFormatVersion = 1;

Volume load_volume(const std::filesystem::path& path);
void save_volume(const std::filesystem::path& path, const Volume& volume);

LabelGrid load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelGrid& labels,
                 std::optional<Vec3> spacing = std::nullopt);

/// True for names ending in .nii, .nii.gz or .vpr.
bool is_volume_file(const std::filesystem::path& path);

}  // namespace vectorpose
