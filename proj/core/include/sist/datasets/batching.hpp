// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <istream>
#include <ostream>
#include <vector>

#include "sist/common/rng.hpp"
#include "sist/datasets/datasets.hpp"

namespace sist::datasets {

// Epoch-shuffled index stream: every index appears once per pass, the
// permutation reshuffles when exhausted. Full state round-trips through
// save/load so training can resume exactly.
class ShuffledCycler {
public:
  ShuffledCycler() = default;
  explicit ShuffledCycler(size_t n);

  size_t next(Rng& rng);
  size_t size() const { return perm_.size(); }

  void save(std::ostream& os) const;
  void load(std::istream& is);

private:
  std::vector<uint32_t> perm_;
  size_t cursor_ = 0;
  bool fresh_ = true;  // permutation not yet shuffled
};

// Batch of independently drawn shapes and images; deliberately carries no
// pairing information.
struct UnpairedBatch {
  std::vector<int> shape_indices;
  std::vector<int> image_indices;
};

class UnpairedSampler {
public:
  UnpairedSampler() = default;
  UnpairedSampler(size_t n_shapes, size_t n_images, int batch_size);

  UnpairedBatch next(Rng& rng);

  void save(std::ostream& os) const;
  void load(std::istream& is);

private:
  std::vector<int> draw(ShuffledCycler& cycler, Rng& rng, const char* what);

  ShuffledCycler shapes_, images_;
  int batch_size_ = 0;
  bool warned_replacement_ = false;
};

// Uniform with-replacement sampling over the declared pairs.
class PairedSampler {
public:
  PairedSampler() = default;
  PairedSampler(size_t n_pairs, int batch_size);

  std::vector<int> next(Rng& rng);

  void save(std::ostream& os) const;
  void load(std::istream& is);

private:
  size_t n_pairs_ = 0;
  int batch_size_ = 0;
};

}  // namespace sist::datasets
