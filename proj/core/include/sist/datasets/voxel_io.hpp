// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "sist/geom3d/types.hpp"

namespace sist::datasets {

enum class VoxelFormat { kBinvox, kRawOccupancy };

VoxelFormat voxel_format_from_string(const std::string& s);

// binvox: ASCII header, then (value, count) RLE byte pairs with y fastest,
// then z, then x.
geom3d::VoxelGrid load_binvox(const std::filesystem::path& path);
void save_binvox(const std::filesystem::path& path, const geom3d::VoxelGrid& grid);

// raw-occupancy: 16-byte header (magic "SISTVOX1", little-endian u32
// resolution, u32 reserved) followed by bit-packed occupancy in x-fastest
// order, LSB first. Deterministic fixture format; loading then re-saving is
// byte-identical.
geom3d::VoxelGrid load_raw_occupancy(const std::filesystem::path& path);
void save_raw_occupancy(const std::filesystem::path& path, const geom3d::VoxelGrid& grid);

geom3d::VoxelGrid load_voxel_file(const std::filesystem::path& path, VoxelFormat format);
void save_voxel_file(const std::filesystem::path& path, const geom3d::VoxelGrid& grid,
                     VoxelFormat format);

}  // namespace sist::datasets
