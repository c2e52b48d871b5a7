// SPDX-License-Identifier: Apache-2.0
#include "sist/datasets/voxel_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace sist::datasets {

namespace {

constexpr char kRawMagic[8] = {'S', 'I', 'S', 'T', 'V', 'O', 'X', '1'};

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::streamoff offset,
                             const std::string& what) {
  throw ValidationError("parse error in " + path.string() + " at byte " +
                        std::to_string(offset) + ": " + what);
}

}  // namespace

VoxelFormat voxel_format_from_string(const std::string& s) {
  if (s == "binvox") return VoxelFormat::kBinvox;
  if (s == "raw-occupancy" || s == "raw") return VoxelFormat::kRawOccupancy;
  throw ValidationError("unknown voxel format '" + s + "' (binvox, raw-occupancy)");
}

geom3d::VoxelGrid load_binvox(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  SIST_CHECK(is.good(), "cannot open ", path.string());

  std::string line;
  std::getline(is, line);
  if (line.rfind("#binvox", 0) != 0) parse_fail(path, 0, "missing #binvox header");

  int dx = 0, dy = 0, dz = 0;
  bool have_dim = false, have_data = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "dim") {
      ls >> dx >> dy >> dz;
      have_dim = true;
    } else if (tag == "data") {
      have_data = true;
      break;
    } else if (tag == "translate" || tag == "scale") {
      // normalization metadata; grids are re-centered to the unit cube anyway
    } else if (!tag.empty()) {
      parse_fail(path, is.tellg(), "unknown header line '" + tag + "'");
    }
  }
  if (!have_dim || !have_data) parse_fail(path, is.tellg(), "incomplete binvox header");
  if (dx != dy || dy != dz) {
    parse_fail(path, is.tellg(),
               "non-cubic grid " + std::to_string(dx) + "x" + std::to_string(dy) + "x" +
                   std::to_string(dz));
  }

  auto grid = geom3d::VoxelGrid::centered(dx);
  const int64_t total = grid.cell_count();
  const int r = dx;
  int64_t filled = 0;
  while (filled < total) {
    char vc, cc;
    if (!is.get(vc) || !is.get(cc)) {
      parse_fail(path, is.tellg(), "truncated RLE data after " + std::to_string(filled) +
                                       " of " + std::to_string(total) + " cells");
    }
    const uint8_t value = static_cast<uint8_t>(vc) ? 1 : 0;
    const int count = static_cast<uint8_t>(cc);
    if (filled + count > total) parse_fail(path, is.tellg(), "RLE overruns the grid");
    for (int i = 0; i < count; ++i) {
      // binvox order: y fastest, then z, then x
      const int64_t lin = filled + i;
      const int y = static_cast<int>(lin % r);
      const int z = static_cast<int>((lin / r) % r);
      const int x = static_cast<int>(lin / (static_cast<int64_t>(r) * r));
      grid.occupancy[grid.index(x, y, z)] = value;
    }
    filled += count;
  }
  return grid;
}

void save_binvox(const std::filesystem::path& path, const geom3d::VoxelGrid& grid) {
  grid.validate();
  std::ofstream os(path, std::ios::binary);
  SIST_CHECK(os.good(), "cannot write ", path.string());
  const int r = grid.resolution;
  os << "#binvox 1\n";
  os << "dim " << r << ' ' << r << ' ' << r << '\n';
  os << "translate 0 0 0\n";
  os << "scale 1\n";
  os << "data\n";

  auto value_at = [&](int64_t lin) -> uint8_t {
    const int y = static_cast<int>(lin % r);
    const int z = static_cast<int>((lin / r) % r);
    const int x = static_cast<int>(lin / (static_cast<int64_t>(r) * r));
    return grid.occupancy[grid.index(x, y, z)] ? 1 : 0;
  };

  const int64_t total = grid.cell_count();
  int64_t i = 0;
  while (i < total) {
    const uint8_t v = value_at(i);
    int count = 1;
    while (i + count < total && count < 255 && value_at(i + count) == v) ++count;
    os.put(static_cast<char>(v));
    os.put(static_cast<char>(count));
    i += count;
  }
}

geom3d::VoxelGrid load_raw_occupancy(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  SIST_CHECK(is.good(), "cannot open ", path.string());

  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kRawMagic, 8) != 0)
    parse_fail(path, 0, "bad magic, expected SISTVOX1");
  uint32_t res = 0, reserved = 0;
  if (!is.read(reinterpret_cast<char*>(&res), 4)) parse_fail(path, 8, "missing resolution");
  if (!is.read(reinterpret_cast<char*>(&reserved), 4)) parse_fail(path, 12, "missing reserved");

  if (res < 2 || res > 4096) parse_fail(path, 8, "implausible resolution " + std::to_string(res));
  auto grid = geom3d::VoxelGrid::centered(static_cast<int>(res));
  const int64_t total = grid.cell_count();
  const int64_t bytes = (total + 7) / 8;
  std::vector<uint8_t> packed(static_cast<size_t>(bytes));
  if (!is.read(reinterpret_cast<char*>(packed.data()), bytes)) {
    parse_fail(path, 16 + is.gcount(),
               "payload shorter than header resolution implies (" + std::to_string(bytes) +
                   " bytes expected)");
  }
  char extra;
  if (is.get(extra)) parse_fail(path, 16 + bytes, "trailing bytes after payload");

  for (int64_t i = 0; i < total; ++i)
    grid.occupancy[static_cast<size_t>(i)] = (packed[static_cast<size_t>(i / 8)] >> (i % 8)) & 1;
  return grid;
}

void save_raw_occupancy(const std::filesystem::path& path, const geom3d::VoxelGrid& grid) {
  grid.validate();
  std::ofstream os(path, std::ios::binary);
  SIST_CHECK(os.good(), "cannot write ", path.string());
  os.write(kRawMagic, 8);
  const uint32_t res = static_cast<uint32_t>(grid.resolution);
  const uint32_t reserved = 0;
  os.write(reinterpret_cast<const char*>(&res), 4);
  os.write(reinterpret_cast<const char*>(&reserved), 4);

  const int64_t total = grid.cell_count();
  std::vector<uint8_t> packed(static_cast<size_t>((total + 7) / 8), 0);
  for (int64_t i = 0; i < total; ++i)
    if (grid.occupancy[static_cast<size_t>(i)])
      packed[static_cast<size_t>(i / 8)] |= static_cast<uint8_t>(1u << (i % 8));
  os.write(reinterpret_cast<const char*>(packed.data()),
           static_cast<std::streamsize>(packed.size()));
}

geom3d::VoxelGrid load_voxel_file(const std::filesystem::path& path, VoxelFormat format) {
  return format == VoxelFormat::kBinvox ? load_binvox(path) : load_raw_occupancy(path);
}

void save_voxel_file(const std::filesystem::path& path, const geom3d::VoxelGrid& grid,
                     VoxelFormat format) {
  if (format == VoxelFormat::kBinvox)
    save_binvox(path, grid);
  else
    save_raw_occupancy(path, grid);
}

}  // namespace sist::datasets
