// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "sist/datasets/datasets.hpp"

namespace sist::apps {

// Procedural desk-scale dataset: primitive shapes plus flat-hue,
// depth-shaded renderings on a white background (the "clean background"
// image set). Every image records its source shape, so paired subsets can
// be built for weak supervision.
struct ToyDataset {
  datasets::ShapeDataset shapes;
  datasets::ImageDataset images;
  std::vector<std::pair<std::string, std::string>> pairs;  // (image id, shape id)
};

// The shape library contains 10 primitives, all asymmetric under rotations
// about the vertical axis so viewpoints are identifiable from silhouettes.
geom3d::VoxelGrid make_toy_shape(int kind, int resolution);
constexpr int kToyShapeCount = 10;

ToyDataset make_toy_dataset(int resolution, int image_size, int views_per_shape,
                            uint64_t seed);

// Shapes as raw-occupancy files, images as PNG, plus a manifest.json.
void write_toy_dataset(const std::filesystem::path& dir, const ToyDataset& data);

}  // namespace sist::apps
