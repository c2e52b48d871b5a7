// SPDX-License-Identifier: Apache-2.0
#include "sist/evalkit/marching_cubes.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace sist::evalkit {
namespace {

// Lookup tables in the classic Lorensen-Cline / Bourke convention:
// corner k at offset kCorner[k], bit k set when the corner value is below
// the iso level, edge e between corners kEdgeEnds[e].
#include "mc_tables.inc"

const int kCorner[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
    {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1},
};

// Canonical (lower corner offset, axis) per edge; interpolation always runs
// along +axis so shared edges produce bit-identical vertices.
const int kEdgeLower[12][3] = {
    {0, 0, 0}, {1, 0, 0}, {0, 0, 1}, {0, 0, 0},
    {0, 1, 0}, {1, 1, 0}, {0, 1, 1}, {0, 1, 0},
    {0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
};
const int kEdgeAxis[12] = {0, 2, 0, 2, 0, 2, 0, 2, 1, 1, 1, 1};

}  // namespace

ScalarField ScalarField::from_grid(const geom3d::VoxelGrid& grid) {
  grid.validate();
  ScalarField f;
  f.resolution = grid.resolution;
  f.spacing = grid.voxel_size;
  f.origin = grid.origin;
  f.values.resize(grid.occupancy.size());
  for (size_t i = 0; i < grid.occupancy.size(); ++i)
    f.values[i] = grid.occupancy[i] ? 1.0 : 0.0;
  return f;
}

TriangleMesh marching_cubes(const ScalarField& field, double iso) {
  const int r = field.resolution;
  SIST_CHECK(r >= 2, "scalar field resolution must be >= 2");
  SIST_CHECK(field.values.size() == static_cast<size_t>(r) * r * r,
             "scalar field size mismatch");

  TriangleMesh mesh;
  std::unordered_map<int64_t, int> edge_vertex;

  auto vertex_on_edge = [&](int i, int j, int k, int e) -> int {
    const int li = i + kEdgeLower[e][0];
    const int lj = j + kEdgeLower[e][1];
    const int lk = k + kEdgeLower[e][2];
    const int axis = kEdgeAxis[e];
    const int64_t key =
        ((static_cast<int64_t>(lk) * r + lj) * r + li) * 3 + axis;
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;

    int hi[3] = {li, lj, lk};
    hi[axis] += 1;
    const double v0 = field.at(li, lj, lk);
    const double v1 = field.at(hi[0], hi[1], hi[2]);
    double u = (iso - v0) / (v1 - v0);
    u = std::clamp(u, 0.0, 1.0);

    std::array<double, 3> p = {
        field.origin[0] + (li + 0.5) * field.spacing,
        field.origin[1] + (lj + 0.5) * field.spacing,
        field.origin[2] + (lk + 0.5) * field.spacing,
    };
    p[static_cast<size_t>(axis)] += u * field.spacing;

    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    edge_vertex.emplace(key, id);
    return id;
  };

  double vals[8];
  for (int k = 0; k + 1 < r; ++k) {
    for (int j = 0; j + 1 < r; ++j) {
      for (int i = 0; i + 1 < r; ++i) {
        int cube_index = 0;
        for (int c = 0; c < 8; ++c) {
          vals[c] = field.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
          if (vals[c] < iso) cube_index |= 1 << c;
        }
        if (kEdgeTable[cube_index] == 0) continue;

        const int8_t* tri = kTriTable[cube_index];
        for (; *tri != -1; tri += 3) {
          mesh.triangles.push_back({vertex_on_edge(i, j, k, tri[0]),
                                    vertex_on_edge(i, j, k, tri[1]),
                                    vertex_on_edge(i, j, k, tri[2])});
        }
      }
    }
  }
  return mesh;
}

}  // namespace sist::evalkit
