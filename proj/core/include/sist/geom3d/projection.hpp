// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <filesystem>

#include "sist/common/rng.hpp"
#include "sist/geom3d/types.hpp"

namespace sist::geom3d {

// World -> camera rotation R = R_x(elevation) * R_y(azimuth). The camera
// looks along its negative z axis at the object center.
Eigen::Matrix3d rotation_from_viewpoint(const Viewpoint& v);

// Azimuth uniform on (-pi, pi), elevation uniform on (0, pi/2).
Viewpoint sample_viewpoint(Rng& rng);

// Pinhole depth render: per pixel, the camera-z depth of the first occupied
// cell along the ray, normalized so that distance-sphere_radius -> +1 and
// distance+sphere_radius -> -1. Background pixels are -1. Not differentiable;
// no gradients ever flow through this.
DepthMap render_depth(const VoxelGrid& grid, const Viewpoint& v, const CameraModel& cam);

// Depth change across one voxel, in normalized units (test tolerance).
double depth_quantum(const VoxelGrid& grid);

// Occupancy permutation: rotate the grid a quarter turn about the +y axis,
// `turns` times. rotate_y(g, 1) rendered at azimuth t equals g rendered at
// azimuth t + pi/2.
VoxelGrid rotate_y_quarter_turns(const VoxelGrid& grid, int turns);

// 16-bit grayscale dump, value v stored as round((v+1)/2 * 65535).
void save_depth_png(const std::filesystem::path& path, const DepthMap& depth);

}  // namespace sist::geom3d
