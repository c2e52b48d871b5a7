// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "sist/datasets/batching.hpp"
#include "sist/datasets/datasets.hpp"
#include "sist/geom3d/projection.hpp"
#include "sist/losses/point_sampler.hpp"
#include "sist/nets/networks.hpp"
#include "sist/trainer/adam.hpp"
#include "sist/trainer/config.hpp"

namespace sist::trainer {

// The six networks, with exactly one shape decoder active per config.
template <class T>
struct Pipeline {
  using Scalar = T;

  nets::NetsConfig cfg;
  DecoderType decoder_type;
  nets::ImageGenerator<T> generator;
  nets::PatchDiscriminator<T> discriminator;
  nets::ViewpointEncoder<T> viewpoint_encoder;
  nets::GaussianEncoder<T> appearance_encoder;
  nets::GaussianEncoder<T> shape_encoder;
  std::unique_ptr<nets::VoxelDecoder<T>> voxel_decoder;
  std::unique_ptr<nets::ImplicitDecoder<T>> implicit_decoder;

  Pipeline(const nets::NetsConfig& cfg, DecoderType type);
  void init_params(Rng& rng);

  struct NamedNet {
    std::string name;
    std::vector<nets::Parameter<T>*> params;
    std::vector<Tensor<T>*> buffers;
  };
  std::vector<NamedNet> named_networks();

  std::vector<nets::Parameter<T>*> decoder_params();
  // Grad norm across every parameter of every network (divergence reports).
  double parameter_norm();
};

struct LossRecord {
  int64_t step = 0;
  double l_i_d = 0;   // discriminator loss
  double l_i_g = 0;   // generator adversarial loss
  double l_s = 0;     // shape reconstruction loss
  double l_c = 0;     // cyclic loss (weighted)
  double l_kl = 0;    // KL loss (weighted)
  double total = 0;   // Eq.-5 combination
  bool has_weak = false;
  double l_weak = 0;  // weak-supervision stage loss

  std::string to_jsonl() const;
  std::string to_csv() const;
  static std::string csv_header();
};

// Checkpoint directory metadata.
struct CheckpointInfo {
  TrainConfig config;
  std::string dtype;  // "f32" or "f64"
  int64_t step = 0;
  int64_t epoch = 0;
  uint64_t config_hash = 0;
};

CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir);
bool checkpoint_exists(const std::filesystem::path& dir);

// Loads network weights/buffers from `dir` into a pipeline built from `cfg`.
template <class T>
Pipeline<T> load_pipeline(const std::filesystem::path& dir, const TrainConfig& cfg);

template <class T>
class Trainer {
public:
  // Datasets are borrowed and must outlive the trainer.
  Trainer(TrainConfig cfg, const datasets::ShapeDataset* shapes,
          const datasets::ImageDataset* images, datasets::PairedSubset pairs);

  // One self-supervised iteration: render, generate, discriminator update,
  // then the joint generator/encoder/decoder update (Eq. 5).
  LossRecord self_supervised_step();
  // Second stage of a weakly supervised iteration: shape encoder + decoder
  // only, on real paired images.
  double weak_supervision_step();
  // Full iteration; appends the weak stage when supervision_rate > 0.
  LossRecord step();

  // Runs the configured number of epochs, appending JSONL loss rows to
  // out_dir/losses.jsonl and checkpointing into out_dir/checkpoint.
  void run(const std::filesystem::path& out_dir);

  void save_checkpoint(const std::filesystem::path& dir) const;
  void restore_checkpoint(const std::filesystem::path& dir);

  Pipeline<T>& pipeline() { return pipeline_; }
  const TrainConfig& config() const { return cfg_; }
  int64_t current_step() const { return step_; }
  int64_t current_epoch() const { return step_ / steps_per_epoch_; }
  int64_t steps_per_epoch() const { return steps_per_epoch_; }
  int64_t total_steps() const { return steps_per_epoch_ * cfg_.epochs; }
  Rng& rng() { return rng_; }

private:
  Tensor<T> render_batch(const std::vector<int>& shape_indices, std::vector<Tensor<T>>& vraws);
  double shape_loss_and_backward(const Tensor<T>& z, const std::vector<int>& shape_indices,
                                 double lambda_scale, Tensor<T>& gz);

  TrainConfig cfg_;
  const datasets::ShapeDataset* shapes_;
  const datasets::ImageDataset* images_;
  datasets::PairedSubset pairs_;

  Pipeline<T> pipeline_;
  AdamOptimizer<T> opt_g_, opt_d_, opt_ev_, opt_ea_, opt_es_, opt_ds_;
  datasets::UnpairedSampler sampler_;
  std::optional<datasets::PairedSampler> paired_sampler_;
  geom3d::CameraModel camera_;
  Rng rng_;
  int64_t step_ = 0;
  int64_t steps_per_epoch_ = 1;
};

// Trains from scratch (or resumes when `resume` names an existing
// checkpoint) and leaves the final checkpoint plus loss log in out_dir.
template <class T>
void run_training(const TrainConfig& cfg, const datasets::ShapeDataset& shapes,
                  const datasets::ImageDataset& images, const datasets::PairedSubset& pairs,
                  const std::filesystem::path& out_dir, bool resume = false);

// Scalar mode selection: 64-bit when SIST_DETERMINISTIC=1, 32-bit otherwise.
bool deterministic_mode();

}  // namespace sist::trainer
