// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "sist/evalkit/mesh.hpp"
#include "sist/geom3d/types.hpp"

namespace sist::evalkit {

// Cubic scalar field sampled at cell centers: sample (i,j,k) sits at
// origin + (i+0.5, j+0.5, k+0.5) * spacing.
struct ScalarField {
  int resolution = 0;
  double spacing = 1.0;
  std::array<double, 3> origin = {0.0, 0.0, 0.0};
  std::vector<double> values;  // x-fastest

  double at(int i, int j, int k) const {
    return values[static_cast<size_t>(i) +
                  static_cast<size_t>(resolution) *
                      (static_cast<size_t>(j) +
                       static_cast<size_t>(resolution) * static_cast<size_t>(k))];
  }

  static ScalarField from_grid(const geom3d::VoxelGrid& grid);
};

// Standard 256-case marching cubes with linear edge interpolation over the
// (R-1)^3 cube lattice. Shared edge vertices are merged. A constant field
// produces an empty mesh.
TriangleMesh marching_cubes(const ScalarField& field, double iso = 0.5);

}  // namespace sist::evalkit
