// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sist/common/rng.hpp"
#include "sist/common/tensor.hpp"
#include "sist/geom3d/types.hpp"

namespace sist::losses {

enum class PointTag : uint8_t { kSurface, kPositive, kNegative };

// Training points for the implicit decoder: K/2 jittered inside surface
// cells (occupied with an empty 6-neighbor; grid boundary counts as empty),
// K/4 inside random occupied cells, K/4 inside random empty cells.
// Coordinates are normalized to [0,1]^3.
struct PointSampleBatch {
  Tensor<double> coords;   // [K,3]
  Tensor<double> targets;  // [K], in {0,1}
  std::vector<PointTag> tags;
};

// K must be divisible by 4; the grid must contain at least one occupied and
// one empty cell (the error names grid_id otherwise).
PointSampleBatch sample_training_points(const geom3d::VoxelGrid& grid, int k, Rng& rng,
                                        const std::string& grid_id = "");

// Surface-cell predicate shared with tests.
bool is_surface_cell(const geom3d::VoxelGrid& grid, int ix, int iy, int iz);

}  // namespace sist::losses
