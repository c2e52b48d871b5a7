// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sist/common/rng.hpp"
#include "sist/losses/losses.hpp"
#include "sist/nets/networks.hpp"

namespace sist::trainer {

enum class DecoderType { kVoxel, kImplicit };

DecoderType decoder_type_from_string(const std::string& s);
std::string to_string(DecoderType t);

struct TrainConfig {
  DecoderType decoder_type = DecoderType::kImplicit;
  int batch_size = 16;
  double learning_rate = 1e-4;   // lr_0
  double lr_decay = 0.98;        // per-epoch exponential factor
  double label_flip_p = 0.05;
  int k_points = 1000;           // implicit-field samples per shape per step
  int epochs = 50;
  int steps_per_epoch = 0;       // 0: ceil(max(dataset sizes) / batch)
  double supervision_rate = 0.0;
  uint64_t seed = 1;
  int checkpoint_every = 500;    // steps; 0 disables periodic checkpoints
  losses::GanLabelConvention gan_label_convention = losses::GanLabelConvention::kStandard;
  losses::LossWeights weights;
  nets::NetsConfig nets;
  double image_split = 0.75;

  void validate() const;

  // Canonical JSON round trip (the CLI-facing config file format).
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  static TrainConfig from_file(const std::filesystem::path& path);

  // FNV-1a over the canonical JSON; stored in checkpoint manifests so apps
  // can verify checkpoint/config compatibility.
  uint64_t config_hash() const;
};

// lr_0 * decay^epoch
double learning_rate(const TrainConfig& cfg, int64_t epoch);

// True with probability label_flip_p; decided once per discriminator update.
bool should_flip_labels(Rng& rng, double p);

}  // namespace sist::trainer
