// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "sist/common/rng.hpp"
#include "sist/evalkit/mesh.hpp"
#include "sist/geom3d/types.hpp"

namespace sist::evalkit {

struct PointCloud {
  std::vector<std::array<double, 3>> points;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Translate to the bounding-box center and scale uniformly so the longest
// axis-aligned extent is exactly 1. Errors when all points coincide.
PointCloud normalize_cloud(const PointCloud& cloud);

enum class MeshSampling {
  kVertices,     // evaluation default: sample mesh vertices
  kSurfaceArea,  // area-weighted sampling on triangle interiors
};

// n points from the mesh. Vertex mode draws without replacement while the
// vertex count allows it, with replacement otherwise.
PointCloud sample_points(const TriangleMesh& mesh, int n, Rng& rng,
                         MeshSampling mode = MeshSampling::kVertices);

// Sum of both directional mean nearest-neighbor Euclidean distances
// (unsquared). Inputs are expected to be normalized already.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

// Majority-vote block downscale: a target cell is occupied when at least
// half of its source block is occupied. Source resolution must be a
// multiple of the target.
geom3d::VoxelGrid downscale(const geom3d::VoxelGrid& grid, int target_resolution);

// |A∩B| / |A∪B|; 1.0 when both grids are empty.
double iou(const geom3d::VoxelGrid& a, const geom3d::VoxelGrid& b);

}  // namespace sist::evalkit
