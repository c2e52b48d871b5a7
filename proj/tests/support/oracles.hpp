// SPDX-License-Identifier: Apache-2.0
//
// Independent test oracles: brute-force implementations kept deliberately
// separate from the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "sist/common/image.hpp"
#include "sist/common/rng.hpp"
#include "sist/common/tensor.hpp"
#include "sist/evalkit/metrics.hpp"
#include "sist/geom3d/projection.hpp"
#include "sist/nets/layers.hpp"

namespace sist::testing {

// ---------------------------------------------------------------------------
// Exhaustive O(n*m) chamfer distance.
inline double chamfer_bruteforce(const evalkit::PointCloud& a, const evalkit::PointCloud& b) {
  auto dir = [](const evalkit::PointCloud& p, const evalkit::PointCloud& q) {
    double sum = 0.0;
    for (const auto& x : p.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : q.points) {
        const double dx = x[0] - y[0], dy = x[1] - y[1], dz = x[2] - y[2];
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      sum += std::sqrt(best);
    }
    return sum / static_cast<double>(p.points.size());
  };
  return dir(a, b) + dir(b, a);
}

// Set-count IoU.
inline double iou_bruteforce(const geom3d::VoxelGrid& a, const geom3d::VoxelGrid& b) {
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.occupancy.size(); ++i) {
    inter += (a.occupancy[i] && b.occupancy[i]) ? 1 : 0;
    uni += (a.occupancy[i] || b.occupancy[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Per-pixel ray vs every-occupied-cell intersection renderer. Same camera
// conventions as the production renderer, no grid traversal.
inline geom3d::DepthMap render_depth_bruteforce(const geom3d::VoxelGrid& grid,
                                                const geom3d::Viewpoint& v,
                                                const geom3d::CameraModel& cam) {
  const Eigen::Matrix3d rot = geom3d::rotation_from_viewpoint(v);
  const Eigen::Vector3d grid_lo(grid.origin[0], grid.origin[1], grid.origin[2]);
  const Eigen::Vector3d grid_center =
      grid_lo + Eigen::Vector3d::Constant(0.5 * grid.extent());
  const Eigen::Vector3d cam_pos =
      grid_center + rot.transpose() * Eigen::Vector3d(0, 0, cam.distance);
  const double sphere_radius = 0.5 * grid.extent() * std::numbers::sqrt3;
  const double depth_near = cam.distance - sphere_radius;
  const double depth_far = cam.distance + sphere_radius;
  const double tan_half_y = std::tan(0.5 * cam.fov_y);
  const double tan_half_x = tan_half_y * cam.width / cam.height;

  // collect occupied cell boxes once
  struct Box {
    Eigen::Vector3d lo, hi;
  };
  std::vector<Box> boxes;
  for (int iz = 0; iz < grid.resolution; ++iz)
    for (int iy = 0; iy < grid.resolution; ++iy)
      for (int ix = 0; ix < grid.resolution; ++ix)
        if (grid.occupied(ix, iy, iz)) {
          Eigen::Vector3d lo = grid_lo + grid.voxel_size * Eigen::Vector3d(ix, iy, iz);
          boxes.push_back({lo, lo + Eigen::Vector3d::Constant(grid.voxel_size)});
        }

  geom3d::DepthMap out;
  out.height = cam.height;
  out.width = cam.width;
  out.values.assign(static_cast<size_t>(cam.height) * cam.width, -1.0);

  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      const double ndc_x = (2.0 * (px + 0.5) / cam.width - 1.0) * tan_half_x;
      const double ndc_y = (1.0 - 2.0 * (py + 0.5) / cam.height) * tan_half_y;
      const Eigen::Vector3d dir =
          (rot.transpose() * Eigen::Vector3d(ndc_x, ndc_y, -1.0)).normalized();

      double best_t = std::numeric_limits<double>::infinity();
      for (const auto& box : boxes) {
        double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
        bool hit = true;
        for (int a = 0; a < 3; ++a) {
          if (dir[a] == 0.0) {
            if (cam_pos[a] < box.lo[a] || cam_pos[a] > box.hi[a]) {
              hit = false;
              break;
            }
            continue;
          }
          double ta = (box.lo[a] - cam_pos[a]) / dir[a];
          double tb = (box.hi[a] - cam_pos[a]) / dir[a];
          if (ta > tb) std::swap(ta, tb);
          t0 = std::max(t0, ta);
          t1 = std::min(t1, tb);
          if (t0 > t1) {
            hit = false;
            break;
          }
        }
        if (hit) best_t = std::min(best_t, t0);
      }
      if (!std::isfinite(best_t)) continue;
      const Eigen::Vector3d hit_point = cam_pos + best_t * dir;
      const double depth = cam.distance - rot.row(2).dot(hit_point - grid_center);
      out.at(py, px) =
          std::clamp(1.0 - 2.0 * (depth - depth_near) / (depth_far - depth_near), -1.0, 1.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random helpers.

inline geom3d::VoxelGrid random_grid(int resolution, double fill_probability, Rng& rng) {
  auto grid = geom3d::VoxelGrid::centered(resolution);
  for (auto& c : grid.occupancy) c = rng.uniform() < fill_probability ? 1 : 0;
  return grid;
}

inline evalkit::PointCloud random_cloud(int n, Rng& rng, double scale = 1.0) {
  evalkit::PointCloud pc;
  for (int i = 0; i < n; ++i)
    pc.points.push_back({scale * (rng.uniform() - 0.5), scale * (rng.uniform() - 0.5),
                         scale * (rng.uniform() - 0.5)});
  return pc;
}

// ---------------------------------------------------------------------------
// Central finite differences.

// Max relative error between analytic input-gradients and central
// differences of `value` over up to `max_probes` entries of x.
inline double input_gradient_max_rel_err(Tensor<double>& x,
                                         const std::function<double()>& value,
                                         const Tensor<double>& analytic, double h,
                                         int max_probes = 64) {
  double worst = 0.0;
  const int64_t n = x.numel();
  const int64_t stride = std::max<int64_t>(1, n / max_probes);
  for (int64_t i = 0; i < n; i += stride) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = value();
    x[i] = saved - h;
    const double down = value();
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    // both analytically zero: FD reads only loss-rounding noise
    if (std::max(std::abs(a), std::abs(numeric)) < 1e-5) continue;
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

// Moves parameters away from their tiny GAN-style init so finite-difference
// probes stay clear of activation kinks.
inline void jitter_params(const std::vector<nets::Parameter<double>*>& params, Rng& rng,
                          double std_dev = 0.1) {
  for (auto* p : params)
    for (int64_t i = 0; i < p->value.numel(); ++i) p->value[i] += rng.normal() * std_dev;
}

// Same over network parameters.
inline double param_gradient_max_rel_err(const std::vector<nets::Parameter<double>*>& params,
                                         const std::function<double()>& value,
                                         double h, int probes_per_param = 6) {
  double worst = 0.0;
  for (auto* p : params) {
    const int64_t n = p->value.numel();
    const int64_t stride = std::max<int64_t>(1, n / probes_per_param);
    for (int64_t i = 0; i < n; i += stride) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = value();
      p->value[i] = saved - h;
      const double down = value();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = p->grad[i];
      // gradients that vanish identically (e.g. conv bias ahead of a
      // batchnorm) leave FD with rounding noise only
      if (std::max(std::abs(a), std::abs(numeric)) < 1e-5) continue;
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace sist::testing
