// SPDX-License-Identifier: Apache-2.0
#include "sist/losses/point_sampler.hpp"

namespace sist::losses {

bool is_surface_cell(const geom3d::VoxelGrid& grid, int ix, int iy, int iz) {
  if (!grid.occupied(ix, iy, iz)) return false;
  const int r = grid.resolution;
  const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (const auto& o : d) {
    const int nx = ix + o[0], ny = iy + o[1], nz = iz + o[2];
    if (nx < 0 || nx >= r || ny < 0 || ny >= r || nz < 0 || nz >= r) return true;
    if (!grid.occupied(nx, ny, nz)) return true;
  }
  return false;
}

PointSampleBatch sample_training_points(const geom3d::VoxelGrid& grid, int k, Rng& rng,
                                        const std::string& grid_id) {
  grid.validate();
  SIST_CHECK(k > 0 && k % 4 == 0, "K must be positive and divisible by 4, got ", k);

  const int r = grid.resolution;
  std::vector<int32_t> surface, positive, negative;
  for (int iz = 0; iz < r; ++iz)
    for (int iy = 0; iy < r; ++iy)
      for (int ix = 0; ix < r; ++ix) {
        const int32_t lin = static_cast<int32_t>(grid.index(ix, iy, iz));
        if (grid.occupied(ix, iy, iz)) {
          positive.push_back(lin);
          if (is_surface_cell(grid, ix, iy, iz)) surface.push_back(lin);
        } else {
          negative.push_back(lin);
        }
      }
  SIST_CHECK(!positive.empty() && !negative.empty(),
             "degenerate grid '", grid_id, "': needs both occupied and empty cells");
  // any occupied grid with an empty cell has a surface cell
  SIST_CHECK(!surface.empty(), "internal: no surface cells in grid '", grid_id, "'");

  PointSampleBatch batch;
  batch.coords = Tensor<double>({k, 3});
  batch.targets = Tensor<double>({k});
  batch.tags.resize(static_cast<size_t>(k));

  auto emit = [&](int slot, int32_t lin, PointTag tag, double target) {
    const int ix = static_cast<int>(lin % r);
    const int iy = static_cast<int>((lin / r) % r);
    const int iz = static_cast<int>(lin / (static_cast<int64_t>(r) * r));
    batch.coords[slot * 3 + 0] = (ix + rng.uniform()) / r;
    batch.coords[slot * 3 + 1] = (iy + rng.uniform()) / r;
    batch.coords[slot * 3 + 2] = (iz + rng.uniform()) / r;
    batch.targets[slot] = target;
    batch.tags[static_cast<size_t>(slot)] = tag;
  };

  int slot = 0;
  for (int i = 0; i < k / 2; ++i, ++slot)
    emit(slot, surface[rng.index(surface.size())], PointTag::kSurface, 1.0);
  for (int i = 0; i < k / 4; ++i, ++slot)
    emit(slot, positive[rng.index(positive.size())], PointTag::kPositive, 1.0);
  for (int i = 0; i < k / 4; ++i, ++slot)
    emit(slot, negative[rng.index(negative.size())], PointTag::kNegative, 0.0);
  return batch;
}

}  // namespace sist::losses
