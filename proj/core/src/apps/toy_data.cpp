// SPDX-License-Identifier: Apache-2.0
#include "sist/apps/toy_data.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>

#include "sist/geom3d/projection.hpp"

namespace sist::apps {

namespace {

using Predicate = std::function<bool(double, double, double)>;

// Fills cells whose centers (in [0,1]^3, y up) satisfy the predicate.
geom3d::VoxelGrid fill(int resolution, const Predicate& inside) {
  auto grid = geom3d::VoxelGrid::centered(resolution);
  for (int iz = 0; iz < resolution; ++iz)
    for (int iy = 0; iy < resolution; ++iy)
      for (int ix = 0; ix < resolution; ++ix) {
        const double x = (ix + 0.5) / resolution;
        const double y = (iy + 0.5) / resolution;
        const double z = (iz + 0.5) / resolution;
        if (inside(x, y, z)) grid.set(ix, iy, iz, true);
      }
  return grid;
}

bool in_box(double x, double y, double z, double x0, double x1, double y0, double y1,
            double z0, double z1) {
  return x >= x0 && x < x1 && y >= y0 && y < y1 && z >= z0 && z < z1;
}

}  // namespace

geom3d::VoxelGrid make_toy_shape(int kind, int resolution) {
  SIST_CHECK(kind >= 0 && kind < kToyShapeCount, "toy shape kind out of range: ", kind);
  switch (kind) {
    case 0:  // L block: upright slab with a foot toward +x
      return fill(resolution, [](double x, double y, double z) {
        return in_box(x, y, z, 0.25, 0.45, 0.2, 0.8, 0.3, 0.7) ||
               in_box(x, y, z, 0.25, 0.75, 0.2, 0.4, 0.3, 0.7);
      });
    case 1:  // chair: seat, back on the -z side, two thick legs
      return fill(resolution, [](double x, double y, double z) {
        return in_box(x, y, z, 0.25, 0.75, 0.45, 0.55, 0.25, 0.75) ||
               in_box(x, y, z, 0.25, 0.75, 0.55, 0.85, 0.25, 0.4) ||
               in_box(x, y, z, 0.28, 0.42, 0.15, 0.45, 0.28, 0.42) ||
               in_box(x, y, z, 0.58, 0.72, 0.15, 0.45, 0.58, 0.72);
      });
    case 2:  // ramp rising toward +x with a base plate
      return fill(resolution, [](double x, double y, double z) {
        const bool ramp = x >= 0.2 && x < 0.8 && z >= 0.3 && z < 0.7 && y >= 0.3 &&
                          y < 0.3 + 0.45 * (x - 0.2) / 0.6;
        return ramp || in_box(x, y, z, 0.2, 0.8, 0.25, 0.33, 0.3, 0.7);
      });
    case 3:  // tower with a cap toward +z and an arm toward +x
      return fill(resolution, [](double x, double y, double z) {
        return in_box(x, y, z, 0.38, 0.58, 0.15, 0.75, 0.38, 0.58) ||
               in_box(x, y, z, 0.38, 0.58, 0.58, 0.75, 0.55, 0.85) ||
               in_box(x, y, z, 0.55, 0.85, 0.3, 0.48, 0.38, 0.58);
      });
    case 4:  // three-step staircase along +x
      return fill(resolution, [](double x, double y, double z) {
        return in_box(x, y, z, 0.2, 0.4, 0.25, 0.45, 0.3, 0.7) ||
               in_box(x, y, z, 0.4, 0.6, 0.25, 0.6, 0.3, 0.7) ||
               in_box(x, y, z, 0.6, 0.8, 0.25, 0.78, 0.3, 0.7);
      });
    case 5:  // T extrusion with a long bar on -x
      return fill(resolution, [](double x, double y, double z) {
        return in_box(x, y, z, 0.15, 0.8, 0.42, 0.62, 0.42, 0.58) ||
               in_box(x, y, z, 0.58, 0.78, 0.2, 0.85, 0.42, 0.58);
      });
    case 6:  // box with a corner post
      return fill(resolution, [](double x, double y, double z) {
        return in_box(x, y, z, 0.25, 0.72, 0.25, 0.52, 0.28, 0.72) ||
               in_box(x, y, z, 0.58, 0.72, 0.52, 0.85, 0.58, 0.72);
      });
    case 7:  // cylinder with a fin toward +x
      return fill(resolution, [](double x, double y, double z) {
        const double dx = x - 0.45, dz = z - 0.5;
        const bool cyl = dx * dx + dz * dz < 0.2 * 0.2 && y >= 0.2 && y < 0.75;
        return cyl || in_box(x, y, z, 0.6, 0.85, 0.35, 0.6, 0.46, 0.54);
      });
    case 8:  // plus sign with one long arm toward -z
      return fill(resolution, [](double x, double y, double z) {
        return in_box(x, y, z, 0.42, 0.58, 0.3, 0.72, 0.15, 0.62) ||
               in_box(x, y, z, 0.25, 0.75, 0.3, 0.72, 0.42, 0.58);
      });
    default:  // stepped pyramid with an offset cap
      return fill(resolution, [](double x, double y, double z) {
        return in_box(x, y, z, 0.2, 0.8, 0.2, 0.38, 0.2, 0.8) ||
               in_box(x, y, z, 0.3, 0.7, 0.38, 0.56, 0.3, 0.7) ||
               in_box(x, y, z, 0.45, 0.72, 0.56, 0.74, 0.45, 0.72);
      });
  }
}

ToyDataset make_toy_dataset(int resolution, int image_size, int views_per_shape,
                            uint64_t seed) {
  SIST_CHECK(views_per_shape > 0, "views_per_shape must be positive");
  ToyDataset data;
  data.shapes.source_format = "raw-occupancy";
  data.images.split = "train";

  for (int k = 0; k < kToyShapeCount; ++k) {
    data.shapes.ids.push_back("shape" + std::to_string(k));
    data.shapes.grids.push_back(make_toy_shape(k, resolution));
  }

  Rng rng(seed);
  const auto cam = geom3d::CameraModel::fit(1.0, image_size, image_size);
  for (int k = 0; k < kToyShapeCount; ++k) {
    for (int v = 0; v < views_per_shape; ++v) {
      const auto vp = geom3d::sample_viewpoint(rng);
      const auto depth = geom3d::render_depth(data.shapes.grids[static_cast<size_t>(k)], vp, cam);

      // flat random hue, shaded by depth, white background
      const double hue[3] = {0.25 + 0.75 * rng.uniform(), 0.25 + 0.75 * rng.uniform(),
                             0.25 + 0.75 * rng.uniform()};
      ImageU8 img{image_size, image_size, 3,
                  std::vector<uint8_t>(static_cast<size_t>(image_size) * image_size * 3, 255)};
      for (int y = 0; y < image_size; ++y)
        for (int x = 0; x < image_size; ++x) {
          const double d = depth.at(y, x);
          if (d <= -1.0) continue;  // background stays white
          const double shade = 0.45 + 0.55 * (d + 1.0) * 0.5;
          for (int c = 0; c < 3; ++c)
            img.at(y, x, c) = static_cast<uint8_t>(std::lround(255.0 * hue[c] * shade));
        }
      char name[64];
      std::snprintf(name, sizeof(name), "shape%d_view%03d", k, v);
      data.images.ids.push_back(name);
      data.images.images.push_back(std::move(img));
      data.pairs.emplace_back(name, data.shapes.ids[static_cast<size_t>(k)]);
    }
  }
  return data;
}

void write_toy_dataset(const std::filesystem::path& dir, const ToyDataset& data) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "shapes");
  fs::create_directories(dir / "images");

  nlohmann::json manifest;
  manifest["shapes"] = nlohmann::json::array();
  manifest["images"] = nlohmann::json::array();
  manifest["pairs"] = nlohmann::json::array();

  for (size_t i = 0; i < data.shapes.size(); ++i) {
    const std::string rel = "shapes/" + data.shapes.ids[i] + ".vox";
    datasets::save_raw_occupancy(dir / rel, data.shapes.grids[i]);
    manifest["shapes"].push_back(
        {{"id", data.shapes.ids[i]}, {"path", rel}, {"format", "raw-occupancy"}});
  }
  for (size_t i = 0; i < data.images.size(); ++i) {
    const std::string rel = "images/" + data.images.ids[i] + ".png";
    save_png_rgb(dir / rel, data.images.images[i]);
    manifest["images"].push_back({{"id", data.images.ids[i]}, {"path", rel}});
  }
  for (const auto& [img, shape] : data.pairs) {
    manifest["pairs"].push_back({{"image", img}, {"shape", shape}});
  }
  std::ofstream os(dir / "manifest.json");
  SIST_CHECK(os.good(), "cannot write manifest under ", dir.string());
  os << manifest.dump(2) << '\n';
}

}  // namespace sist::apps
