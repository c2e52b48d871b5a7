// SPDX-License-Identifier: Apache-2.0
#include "sist/geom3d/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sist/common/image.hpp"

namespace sist::geom3d {

Eigen::Matrix3d rotation_from_viewpoint(const Viewpoint& v) {
  const double ct = std::cos(v.azimuth), st = std::sin(v.azimuth);
  const double cp = std::cos(v.elevation), sp = std::sin(v.elevation);
  Eigen::Matrix3d ry, rx;
  ry << ct, 0, st,
        0, 1, 0,
       -st, 0, ct;
  rx << 1, 0, 0,
        0, cp, -sp,
        0, sp, cp;
  return rx * ry;
}

Viewpoint sample_viewpoint(Rng& rng) {
  Viewpoint v;
  v.azimuth = (2.0 * rng.uniform_open() - 1.0) * std::numbers::pi;
  v.elevation = rng.uniform_open() * (std::numbers::pi / 2);
  return v;
}

double depth_quantum(const VoxelGrid& grid) {
  const double sphere_radius = 0.5 * grid.extent() * std::numbers::sqrt3;
  return grid.voxel_size / sphere_radius;
}

namespace {

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;  // unit length, world frame
};

// Slab intersection with [lo, hi]^3; returns false on miss.
bool intersect_box(const Ray& ray, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                   double& t0, double& t1) {
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (ray.dir[a] == 0.0) {
      if (ray.origin[a] < lo[a] || ray.origin[a] > hi[a]) return false;
      continue;
    }
    const double inv = 1.0 / ray.dir[a];
    double ta = (lo[a] - ray.origin[a]) * inv;
    double tb = (hi[a] - ray.origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

DepthMap render_depth(const VoxelGrid& grid, const Viewpoint& v, const CameraModel& cam) {
  grid.validate();
  v.validate();
  cam.validate_against(grid);

  const int res = grid.resolution;
  const double h = grid.voxel_size;
  const Eigen::Vector3d grid_lo(grid.origin[0], grid.origin[1], grid.origin[2]);
  const Eigen::Vector3d grid_hi = grid_lo + Eigen::Vector3d::Constant(grid.extent());
  const Eigen::Vector3d grid_center = 0.5 * (grid_lo + grid_hi);

  const Eigen::Matrix3d rot = rotation_from_viewpoint(v);
  // Camera center in world coordinates; the grid center plays the role of the
  // object center.
  const Eigen::Vector3d cam_pos = grid_center + rot.transpose() * Eigen::Vector3d(0, 0, cam.distance);
  const Eigen::Vector3d cam_z_row = rot.row(2).transpose();  // world dir of camera z axis

  const double sphere_radius = 0.5 * grid.extent() * std::numbers::sqrt3;
  const double depth_near = cam.distance - sphere_radius;
  const double depth_far = cam.distance + sphere_radius;
  const double inv_range = 1.0 / (depth_far - depth_near);

  const double tan_half_y = std::tan(0.5 * cam.fov_y);
  const double tan_half_x = tan_half_y * cam.width / cam.height;

  DepthMap out;
  out.height = cam.height;
  out.width = cam.width;
  out.values.assign(static_cast<size_t>(cam.height) * cam.width, -1.0);

  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      const double ndc_x = (2.0 * (px + 0.5) / cam.width - 1.0) * tan_half_x;
      const double ndc_y = (1.0 - 2.0 * (py + 0.5) / cam.height) * tan_half_y;
      Ray ray;
      ray.dir = (rot.transpose() * Eigen::Vector3d(ndc_x, ndc_y, -1.0)).normalized();
      ray.origin = cam_pos;

      double t0, t1;
      if (!intersect_box(ray, grid_lo, grid_hi, t0, t1)) continue;

      // Amanatides-Woo traversal in grid coordinates, one cell per step.
      const Eigen::Vector3d entry = (ray.origin + t0 * ray.dir - grid_lo) / h;
      const Eigen::Vector3d dir_g = ray.dir / h;
      int cell[3];
      int step[3];
      double t_max[3];
      double t_delta[3];
      for (int a = 0; a < 3; ++a) {
        cell[a] = std::clamp(static_cast<int>(std::floor(entry[a])), 0, res - 1);
        if (dir_g[a] > 0.0) {
          step[a] = 1;
          t_delta[a] = 1.0 / dir_g[a];
          t_max[a] = t0 + (cell[a] + 1 - entry[a]) / dir_g[a];
        } else if (dir_g[a] < 0.0) {
          step[a] = -1;
          t_delta[a] = -1.0 / dir_g[a];
          t_max[a] = t0 + (cell[a] - entry[a]) / dir_g[a];
        } else {
          step[a] = 0;
          t_delta[a] = std::numeric_limits<double>::infinity();
          t_max[a] = std::numeric_limits<double>::infinity();
        }
      }

      double t_hit = -1.0;
      double t_cur = t0;
      while (true) {
        if (grid.occupancy[grid.index(cell[0], cell[1], cell[2])] != 0) {
          t_hit = t_cur;
          break;
        }
        int axis = 0;
        if (t_max[1] < t_max[0]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        t_cur = t_max[axis];
        if (t_cur > t1) break;
        cell[axis] += step[axis];
        if (cell[axis] < 0 || cell[axis] >= res) break;
        t_max[axis] += t_delta[axis];
      }
      if (t_hit < 0.0) continue;

      const Eigen::Vector3d hit = ray.origin + t_hit * ray.dir;
      const double depth = cam.distance - cam_z_row.dot(hit - grid_center);
      const double value = 1.0 - 2.0 * (depth - depth_near) * inv_range;
      out.at(py, px) = std::clamp(value, -1.0, 1.0);
    }
  }
  return out;
}

VoxelGrid rotate_y_quarter_turns(const VoxelGrid& grid, int turns) {
  VoxelGrid out = grid;
  turns = ((turns % 4) + 4) % 4;
  const int r = grid.resolution;
  for (int t = 0; t < turns; ++t) {
    VoxelGrid src = out;
    // +90 degrees about y: the cell at (ix,iy,iz) takes the value of the
    // source cell at (r-1-iz, iy, ix).
    for (int iz = 0; iz < r; ++iz)
      for (int iy = 0; iy < r; ++iy)
        for (int ix = 0; ix < r; ++ix)
          out.occupancy[out.index(ix, iy, iz)] =
              src.occupancy[src.index(r - 1 - iz, iy, ix)];
  }
  return out;
}

void save_depth_png(const std::filesystem::path& path, const DepthMap& depth) {
  std::vector<uint16_t> gray(depth.values.size());
  for (size_t i = 0; i < gray.size(); ++i) {
    gray[i] = static_cast<uint16_t>(std::lround((depth.values[i] + 1.0) * 0.5 * 65535.0));
  }
  save_png_gray16(path, depth.height, depth.width, gray);
}

}  // namespace sist::geom3d
