// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "sist/common/check.hpp"

namespace sist::geom3d {

// Cubic binary occupancy grid. Cells are addressed x-fastest; cell (ix,iy,iz)
// occupies the world box origin + [i, i+1) * voxel_size per axis.
struct VoxelGrid {
  int resolution = 0;
  double voxel_size = 0.0;
  std::array<double, 3> origin = {0.0, 0.0, 0.0};
  std::vector<uint8_t> occupancy;

  VoxelGrid() = default;

  // Grid spanning the unit cube centered at the world origin.
  static VoxelGrid centered(int resolution) {
    VoxelGrid g;
    g.resolution = resolution;
    g.voxel_size = 1.0 / resolution;
    g.origin = {-0.5, -0.5, -0.5};
    g.occupancy.assign(static_cast<size_t>(resolution) * resolution * resolution, 0);
    g.validate();
    return g;
  }

  size_t index(int ix, int iy, int iz) const {
    return static_cast<size_t>(ix) +
           static_cast<size_t>(resolution) *
               (static_cast<size_t>(iy) + static_cast<size_t>(resolution) * static_cast<size_t>(iz));
  }
  bool occupied(int ix, int iy, int iz) const { return occupancy[index(ix, iy, iz)] != 0; }
  void set(int ix, int iy, int iz, bool value) { occupancy[index(ix, iy, iz)] = value ? 1 : 0; }

  int64_t cell_count() const {
    return static_cast<int64_t>(resolution) * resolution * resolution;
  }
  int64_t occupied_count() const {
    int64_t n = 0;
    for (uint8_t v : occupancy) n += v != 0;
    return n;
  }
  double extent() const { return resolution * voxel_size; }

  std::array<double, 3> cell_center(int ix, int iy, int iz) const {
    return {origin[0] + (ix + 0.5) * voxel_size, origin[1] + (iy + 0.5) * voxel_size,
            origin[2] + (iz + 0.5) * voxel_size};
  }

  void validate() const {
    SIST_CHECK(resolution >= 2, "voxel grid resolution must be >= 2, got ", resolution);
    SIST_CHECK(voxel_size > 0.0, "voxel_size must be positive");
    SIST_CHECK(occupancy.size() == static_cast<size_t>(cell_count()),
               "occupancy size does not match resolution ", resolution);
  }

  // Occupied-cell centroid in world coordinates; grid center if empty.
  std::array<double, 3> occupied_centroid() const {
    double sx = 0, sy = 0, sz = 0;
    int64_t n = 0;
    for (int iz = 0; iz < resolution; ++iz)
      for (int iy = 0; iy < resolution; ++iy)
        for (int ix = 0; ix < resolution; ++ix)
          if (occupied(ix, iy, iz)) {
            const auto c = cell_center(ix, iy, iz);
            sx += c[0];
            sy += c[1];
            sz += c[2];
            ++n;
          }
    if (n == 0) {
      const double half = 0.5 * extent();
      return {origin[0] + half, origin[1] + half, origin[2] + half};
    }
    return {sx / n, sy / n, sz / n};
  }
};

// Camera pose: rotation about the y axis (azimuth) then about the x axis
// (elevation), at fixed distance from the object center.
struct Viewpoint {
  double azimuth = 0.0;    // radians, (-pi, pi)
  double elevation = 0.0;  // radians, (0, pi/2)

  void validate() const {
    SIST_CHECK(azimuth > -std::numbers::pi && azimuth < std::numbers::pi,
               "azimuth out of (-pi, pi): ", azimuth);
    SIST_CHECK(elevation > 0.0 && elevation < std::numbers::pi / 2,
               "elevation out of (0, pi/2): ", elevation);
  }

  // Normalized coordinates in [-1,1]^2, the viewpoint encoder's native space.
  std::array<double, 2> to_raw() const {
    return {azimuth / std::numbers::pi, 4.0 * elevation / std::numbers::pi - 1.0};
  }
  static Viewpoint from_raw(double raw_azimuth, double raw_elevation) {
    return {raw_azimuth * std::numbers::pi,
            (raw_elevation + 1.0) * 0.5 * (std::numbers::pi / 2)};
  }
};

// Difference a-b on the azimuth circle, wrapped into (-pi, pi].
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a > std::numbers::pi) a -= two_pi;
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

// Rendered view: one value per pixel in [-1,1]; background is -1 and nearer
// surfaces map toward +1.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  double& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

struct CameraModel {
  double distance = 0.0;       // camera center to object center
  double fov_y = 0.0;          // vertical field of view, radians
  int height = 128;
  int width = 128;

  // Camera constants for a grid of the given extent: distance 2.4x the grid
  // half-extent, FOV such that the grid bounding sphere spans 90% of the
  // image height.
  static CameraModel fit(double grid_extent, int height = 128, int width = 128) {
    CameraModel cam;
    const double half = 0.5 * grid_extent;
    const double sphere_radius = half * std::numbers::sqrt3;
    cam.distance = 2.4 * half;
    const double tan_alpha =
        sphere_radius / std::sqrt(cam.distance * cam.distance - sphere_radius * sphere_radius);
    cam.fov_y = 2.0 * std::atan(tan_alpha / 0.9);
    cam.height = height;
    cam.width = width;
    return cam;
  }

  void validate_against(const VoxelGrid& grid) const {
    SIST_CHECK(height > 0 && width > 0, "camera image size must be positive");
    const double sphere_radius = 0.5 * grid.extent() * std::numbers::sqrt3;
    SIST_CHECK(distance > grid.extent(),
               "camera distance ", distance, " must exceed grid extent ", grid.extent());
    const double tan_alpha =
        sphere_radius / std::sqrt(distance * distance - sphere_radius * sphere_radius);
    const double tan_half_y = std::tan(0.5 * fov_y);
    const double tan_half_x = tan_half_y * width / height;
    SIST_CHECK(tan_alpha <= tan_half_y && tan_alpha <= tan_half_x,
               "camera frustum cannot contain the grid bounding sphere");
  }
};

}  // namespace sist::geom3d
