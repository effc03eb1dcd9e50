#pragma once

#include <filesystem>

#include "promptsim/volume.hpp"

namespace promptsim {

/// Native volume format: a UTF-8 text header `<name>.vgh` with one
/// `key = value` line per field
///
///   dims = <nx> <ny> <nz>
///   spacing = <sx> <sy> <sz>
///   dtype = uint8 | int16 | float32
///   data_file = <name>.vgd
///
/// and a raw little-endian payload in the sidecar named by data_file
/// (resolved relative to the header). Lines starting with '#' are comments.
void write_native(const VoxelGrid& grid, const std::filesystem::path& header_path);
VoxelGrid read_native(const std::filesystem::path& header_path);

/// Dispatches on extension: .nii -> NIfTI-1, .vgh -> native.
VoxelGrid read_volume(const std::filesystem::path& path);
void write_volume(const VoxelGrid& grid, const std::filesystem::path& path);

BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace promptsim
