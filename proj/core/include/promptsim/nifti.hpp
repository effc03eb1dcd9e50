#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "promptsim/volume.hpp"

namespace promptsim {

/// Size of the NIfTI-1 header, and the offset of the first voxel in files
/// written by write_nifti (header + 4-byte empty extension block).
inline constexpr std::size_t kNiftiHeaderSize = 348;
inline constexpr std::size_t kNiftiVoxOffset = 352;

/// Reads an uncompressed single-file little-endian NIfTI-1 volume. Supported
/// datatypes are 2 (uint8), 4 (int16) and 16 (float32). Spacing comes from
/// pixdim[1..3]; qform/sform orientation is ignored and reported through
/// `warnings` when present.
VoxelGrid read_nifti(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Decodes an in-memory .nii image. Throws ParseError naming the field.
VoxelGrid decode_nifti(const std::vector<char>& bytes, std::vector<std::string>* warnings = nullptr);

void write_nifti(const VoxelGrid& grid, const std::filesystem::path& path);
std::vector<char> encode_nifti(const VoxelGrid& grid);

}  // namespace promptsim
