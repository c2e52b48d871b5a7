// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sist/common/image.hpp"
#include "sist/common/rng.hpp"
#include "sist/common/tensor.hpp"
#include "sist/datasets/voxel_io.hpp"
#include "sist/geom3d/types.hpp"

namespace sist::datasets {

struct ShapeDataset {
  std::vector<std::string> ids;
  std::vector<geom3d::VoxelGrid> grids;
  std::string source_format;

  size_t size() const { return grids.size(); }
  bool empty() const { return grids.empty(); }
  int resolution() const { return grids.empty() ? 0 : grids.front().resolution; }
  int index_of(const std::string& id) const;
};

struct ImageDataset {
  std::vector<std::string> ids;
  std::vector<ImageU8> images;
  std::string split;  // "train" / "test"
  int skipped = 0;    // unreadable or mismatched files dropped during load

  size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  int index_of(const std::string& id) const;
};

struct PairedSubset {
  // (image index, shape index) into the datasets the subset was built from
  std::vector<std::pair<int, int>> pairs;
  double supervision_rate = 0.0;

  bool empty() const { return pairs.empty(); }
};

// Loads every voxel file in `path` (or the single file it names), validates
// the grid invariants, and re-centers onto the unit cube. Mixed resolutions
// are rejected with the offending files listed. An empty directory warns and
// yields an empty dataset.
ShapeDataset load_voxels(const std::filesystem::path& path, VoxelFormat format);

// Loads PNG/JPEG files under `path` into a deterministic seeded train/test
// split. Unreadable or wrongly sized images are skipped with a warning.
std::pair<ImageDataset, ImageDataset> load_images(const std::filesystem::path& path,
                                                  double split_fraction, uint64_t seed,
                                                  int expected_size);

// Deterministic seeded choice of round(rate * n_pairs) of the declared
// image->shape correspondences.
PairedSubset build_paired_subset(
    const std::vector<std::pair<std::string, std::string>>& id_pairs,
    const ImageDataset& images, const ShapeDataset& shapes, double rate, Rng& rng);

// JSON manifest naming dataset files and optional pairings.
struct Manifest {
  struct ImageEntry {
    std::string id;
    std::filesystem::path path;
  };
  struct ShapeEntry {
    std::string id;
    std::filesystem::path path;
    VoxelFormat format = VoxelFormat::kRawOccupancy;
  };
  std::vector<ImageEntry> images;
  std::vector<ShapeEntry> shapes;
  std::vector<std::pair<std::string, std::string>> pairs;  // (image id, shape id)
};

Manifest load_manifest(const std::filesystem::path& path);

// [-1,1]-normalized [N,3,H,W] batch from dataset indices.
template <class T>
Tensor<T> images_to_tensor(const ImageDataset& dataset, const std::vector<int>& indices);

// Clamp to [-1,1] and quantize one batch item back to 8-bit RGB.
template <class T>
ImageU8 tensor_to_image(const Tensor<T>& batch, int64_t item);

}  // namespace sist::datasets
