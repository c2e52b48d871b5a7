// SPDX-License-Identifier: Apache-2.0
#include "sist/datasets/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "sist/datasets/batching.hpp"

namespace sist::datasets {

namespace {

bool has_extension(const std::filesystem::path& p, std::initializer_list<const char*> exts) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const char* x : exts)
    if (e == x) return true;
  return false;
}

std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir,
                                                std::initializer_list<const char*> exts) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_extension(entry.path(), exts))
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void check_object_centered(const geom3d::VoxelGrid& grid, const std::string& id) {
  if (grid.occupied_count() == 0) return;
  const auto c = grid.occupied_centroid();
  const double half = 0.5 * grid.extent();
  const std::array<double, 3> center = {grid.origin[0] + half, grid.origin[1] + half,
                                        grid.origin[2] + half};
  const double limit = 0.25 * grid.extent();
  for (int a = 0; a < 3; ++a) {
    SIST_CHECK(std::abs(c[static_cast<size_t>(a)] - center[static_cast<size_t>(a)]) <= limit,
               "shape '", id, "' is not object-centered: centroid offset ",
               std::abs(c[static_cast<size_t>(a)] - center[static_cast<size_t>(a)]),
               " exceeds ", limit, " on axis ", a);
  }
}

}  // namespace

int ShapeDataset::index_of(const std::string& id) const {
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return static_cast<int>(i);
  return -1;
}

int ImageDataset::index_of(const std::string& id) const {
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return static_cast<int>(i);
  return -1;
}

ShapeDataset load_voxels(const std::filesystem::path& path, VoxelFormat format) {
  SIST_CHECK(std::filesystem::exists(path), "no such path: ", path.string());
  ShapeDataset ds;
  ds.source_format = format == VoxelFormat::kBinvox ? "binvox" : "raw-occupancy";

  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    files = format == VoxelFormat::kBinvox ? sorted_files(path, {".binvox"})
                                           : sorted_files(path, {".vox", ".sistvox"});
  } else {
    files = {path};
  }
  if (files.empty()) {
    std::cerr << "[sist] warning: no voxel files under " << path.string() << "\n";
    return ds;
  }

  std::vector<std::string> offenders;
  for (const auto& f : files) {
    auto grid = load_voxel_file(f, format);
    const std::string id = f.stem().string();
    SIST_CHECK(ds.index_of(id) < 0, "duplicate shape id '", id, "'");
    if (!ds.grids.empty() && grid.resolution != ds.resolution()) {
      offenders.push_back(id + " (" + std::to_string(grid.resolution) + ")");
      continue;
    }
    check_object_centered(grid, id);
    ds.ids.push_back(id);
    ds.grids.push_back(std::move(grid));
  }
  if (!offenders.empty()) {
    std::string list;
    for (const auto& o : offenders) list += (list.empty() ? "" : ", ") + o;
    throw ValidationError("mixed voxel resolutions: dataset is " +
                          std::to_string(ds.resolution()) + ", offenders: " + list);
  }
  return ds;
}

std::pair<ImageDataset, ImageDataset> load_images(const std::filesystem::path& path,
                                                  double split_fraction, uint64_t seed,
                                                  int expected_size) {
  SIST_CHECK(std::filesystem::exists(path), "no such path: ", path.string());
  SIST_CHECK(split_fraction >= 0.0 && split_fraction <= 1.0,
             "split fraction must be in [0,1], got ", split_fraction);

  auto files = sorted_files(path, {".png", ".jpg", ".jpeg"});
  std::vector<std::string> ids;
  std::vector<ImageU8> images;
  int skipped = 0;
  for (const auto& f : files) {
    ImageU8 img;
    try {
      img = load_image_rgb(f);
    } catch (const std::exception& e) {
      std::cerr << "[sist] warning: skipping unreadable image " << f.string() << ": "
                << e.what() << "\n";
      ++skipped;
      continue;
    }
    if (expected_size > 0 && (img.height != expected_size || img.width != expected_size)) {
      std::cerr << "[sist] warning: skipping " << f.string() << ": size " << img.width << "x"
                << img.height << ", expected " << expected_size << "x" << expected_size << "\n";
      ++skipped;
      continue;
    }
    ids.push_back(f.stem().string());
    images.push_back(std::move(img));
  }

  std::vector<size_t> order(ids.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const size_t n_train = static_cast<size_t>(
      std::llround(split_fraction * static_cast<double>(ids.size())));

  ImageDataset train, test;
  train.split = "train";
  test.split = "test";
  train.skipped = skipped;
  for (size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_train ? train : test;
    dst.ids.push_back(ids[order[i]]);
    dst.images.push_back(std::move(images[order[i]]));
  }
  return {std::move(train), std::move(test)};
}

PairedSubset build_paired_subset(
    const std::vector<std::pair<std::string, std::string>>& id_pairs,
    const ImageDataset& images, const ShapeDataset& shapes, double rate, Rng& rng) {
  SIST_CHECK(rate >= 0.0 && rate <= 1.0, "supervision rate must be in [0,1], got ", rate);
  PairedSubset out;
  out.supervision_rate = rate;
  if (rate == 0.0) return out;

  std::vector<std::pair<int, int>> resolved;
  for (const auto& [img_id, shape_id] : id_pairs) {
    const int ii = images.index_of(img_id);
    const int si = shapes.index_of(shape_id);
    SIST_CHECK(ii >= 0, "paired image id '", img_id, "' not in dataset");
    SIST_CHECK(si >= 0, "paired shape id '", shape_id, "' not in dataset");
    resolved.emplace_back(ii, si);
  }
  const size_t n_take = static_cast<size_t>(
      std::llround(rate * static_cast<double>(resolved.size())));
  rng.shuffle(resolved);
  resolved.resize(std::min(n_take, resolved.size()));
  out.pairs = std::move(resolved);
  return out;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  SIST_CHECK(is.good(), "cannot open manifest ", path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed manifest " + path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();

  Manifest m;
  for (const auto& e : j.value("images", nlohmann::json::array())) {
    m.images.push_back({e.at("id").get<std::string>(),
                        base / e.at("path").get<std::string>()});
  }
  for (const auto& e : j.value("shapes", nlohmann::json::array())) {
    Manifest::ShapeEntry se;
    se.id = e.at("id").get<std::string>();
    se.path = base / e.at("path").get<std::string>();
    se.format = voxel_format_from_string(e.value("format", "raw-occupancy"));
    m.shapes.push_back(std::move(se));
  }
  for (const auto& e : j.value("pairs", nlohmann::json::array())) {
    m.pairs.emplace_back(e.at("image").get<std::string>(), e.at("shape").get<std::string>());
  }
  return m;
}

template <class T>
Tensor<T> images_to_tensor(const ImageDataset& dataset, const std::vector<int>& indices) {
  SIST_CHECK(!indices.empty(), "empty batch");
  const ImageU8& first = dataset.images.at(static_cast<size_t>(indices.front()));
  const int h = first.height, w = first.width;
  Tensor<T> out({static_cast<int64_t>(indices.size()), 3, h, w});
  for (size_t n = 0; n < indices.size(); ++n) {
    const ImageU8& img = dataset.images.at(static_cast<size_t>(indices[n]));
    SIST_CHECK(img.height == h && img.width == w && img.channels == 3,
               "inconsistent image sizes in batch");
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out.at(static_cast<int64_t>(n), c, y, x) =
              static_cast<T>(img.at(y, x, c) / 127.5 - 1.0);
  }
  return out;
}

template <class T>
ImageU8 tensor_to_image(const Tensor<T>& batch, int64_t item) {
  SIST_CHECK(batch.rank() == 4 && batch.dim(1) == 3, "expected [N,3,H,W] batch");
  const int h = static_cast<int>(batch.dim(2));
  const int w = static_cast<int>(batch.dim(3));
  ImageU8 img{h, w, 3, std::vector<uint8_t>(static_cast<size_t>(h) * w * 3)};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v = std::clamp(static_cast<double>(batch.at(item, c, y, x)), -1.0, 1.0);
        img.at(y, x, c) = static_cast<uint8_t>(std::lround((v + 1.0) * 127.5));
      }
  return img;
}

template Tensor<float> images_to_tensor(const ImageDataset&, const std::vector<int>&);
template Tensor<double> images_to_tensor(const ImageDataset&, const std::vector<int>&);
template ImageU8 tensor_to_image(const Tensor<float>&, int64_t);
template ImageU8 tensor_to_image(const Tensor<double>&, int64_t);

// ---------------------------------------------------------------------------
// Samplers

ShuffledCycler::ShuffledCycler(size_t n) : perm_(n) {
  std::iota(perm_.begin(), perm_.end(), uint32_t{0});
}

size_t ShuffledCycler::next(Rng& rng) {
  SIST_CHECK(!perm_.empty(), "cycler over empty set");
  if (fresh_ || cursor_ >= perm_.size()) {
    rng.shuffle(perm_);
    cursor_ = 0;
    fresh_ = false;
  }
  return perm_[cursor_++];
}

void ShuffledCycler::save(std::ostream& os) const {
  os << perm_.size() << ' ' << cursor_ << ' ' << (fresh_ ? 1 : 0);
  for (uint32_t v : perm_) os << ' ' << v;
  os << '\n';
}

void ShuffledCycler::load(std::istream& is) {
  size_t n = 0;
  int fresh = 1;
  is >> n >> cursor_ >> fresh;
  fresh_ = fresh != 0;
  perm_.resize(n);
  for (auto& v : perm_) is >> v;
}

UnpairedSampler::UnpairedSampler(size_t n_shapes, size_t n_images, int batch_size)
    : shapes_(n_shapes), images_(n_images), batch_size_(batch_size) {
  SIST_CHECK(n_shapes > 0 && n_images > 0, "unpaired sampling needs non-empty datasets");
  SIST_CHECK(batch_size > 0, "batch size must be positive");
}

std::vector<int> UnpairedSampler::draw(ShuffledCycler& cycler, Rng& rng, const char* what) {
  std::vector<int> out(static_cast<size_t>(batch_size_));
  if (static_cast<size_t>(batch_size_) > cycler.size()) {
    if (!warned_replacement_) {
      std::cerr << "[sist] warning: batch size " << batch_size_ << " exceeds " << what
                << " dataset size " << cycler.size() << "; sampling with replacement\n";
      warned_replacement_ = true;
    }
    for (auto& v : out) v = static_cast<int>(rng.index(cycler.size()));
  } else {
    for (auto& v : out) v = static_cast<int>(cycler.next(rng));
  }
  return out;
}

UnpairedBatch UnpairedSampler::next(Rng& rng) {
  UnpairedBatch b;
  b.shape_indices = draw(shapes_, rng, "shape");
  b.image_indices = draw(images_, rng, "image");
  return b;
}

void UnpairedSampler::save(std::ostream& os) const {
  os << batch_size_ << ' ' << (warned_replacement_ ? 1 : 0) << '\n';
  shapes_.save(os);
  images_.save(os);
}

void UnpairedSampler::load(std::istream& is) {
  int warned = 0;
  is >> batch_size_ >> warned;
  warned_replacement_ = warned != 0;
  shapes_.load(is);
  images_.load(is);
}

PairedSampler::PairedSampler(size_t n_pairs, int batch_size)
    : n_pairs_(n_pairs), batch_size_(batch_size) {
  SIST_CHECK(n_pairs > 0,
             "paired sampling needs a non-empty subset; supervision_rate > 0 is required");
  SIST_CHECK(batch_size > 0, "batch size must be positive");
}

std::vector<int> PairedSampler::next(Rng& rng) {
  std::vector<int> out(static_cast<size_t>(batch_size_));
  for (auto& v : out) v = static_cast<int>(rng.index(n_pairs_));
  return out;
}

void PairedSampler::save(std::ostream& os) const {
  os << n_pairs_ << ' ' << batch_size_ << '\n';
}

void PairedSampler::load(std::istream& is) { is >> n_pairs_ >> batch_size_; }

}  // namespace sist::datasets
