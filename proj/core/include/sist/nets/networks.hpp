// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sist/nets/layers.hpp"

namespace sist::nets {

// Network family configuration. Defaults reproduce the full-scale
// architecture; the toy training configs shrink image size, code lengths
// and channel counts through the same builders.
struct NetsConfig {
  int image_size = 128;
  int image_channels = 3;
  int appearance_dim = 16;  // |z_a|
  int shape_dim = 128;      // |z_s|
  int generator_base = 64;
  int discriminator_base = 64;
  int encoder_base = 32;
  int voxel_decoder_base = 32;
  int voxel_resolution = 128;
  std::vector<int> implicit_hidden = {1024, 512, 256, 128};
  double leaky_slope = 0.2;

  void validate() const;
};

// One row of an architecture summary, mirroring the layout of the
// published layer tables.
struct LayerRow {
  std::string layer;
  std::vector<int> out_size;  // printed order: H,W,C for 2d nets; C,D,H,W for 3d
  int kernel = 0;
  int stride = 0;
  bool batchnorm = false;
  std::string activation;

  bool operator==(const LayerRow&) const = default;
};

template <class T>
struct GaussianPosterior {
  Tensor<T> mean;     // [N, K]
  Tensor<T> logvar;   // [N, K]
};

template <class T>
struct ReparamSample {
  Tensor<T> z;    // mean + exp(logvar/2) * eps
  Tensor<T> eps;  // the standard normal draw, kept for backward
};

template <class T>
ReparamSample<T> reparameterize(const GaussianPosterior<T>& q, Rng& rng);

template <class T>
void reparameterize_backward(const Tensor<T>& gz, const Tensor<T>& logvar,
                             const Tensor<T>& eps, Tensor<T>& gmean, Tensor<T>& glogvar);

// ---------------------------------------------------------------------------
// Image generator G_I: depth map + appearance code -> RGB in [-1,1]. The
// appearance code is tiled and concatenated onto every convolution input;
// the last convolution additionally re-sees the depth map.

template <class T>
class ImageGenerator {
public:
  explicit ImageGenerator(const NetsConfig& cfg);

  Tensor<T> forward(const Tensor<T>& depth, const Tensor<T>& z_a, bool training,
                    bool keep_cache = true);
  // Backpropagates the image gradient into the parameters. Gradients for
  // depth and z_a are discarded: the renderer is non-differentiable and the
  // code is a sampled constant.
  void backward(const Tensor<T>& grgb);

  std::vector<Parameter<T>*> params();
  std::vector<Tensor<T>*> buffers();
  void init_params(Rng& rng);
  const std::vector<LayerRow>& rows() const { return rows_; }

private:
  NetsConfig cfg_;
  std::vector<Conv2d<T>> convs_;      // 8 stages
  std::vector<BatchNorm<T>> norms_;   // stages 0..6
  // forward cache
  Tensor<T> depth_cache_;
  std::vector<Tensor<T>> pre_act_;    // batchnorm outputs (relu inputs)
  Tensor<T> out_cache_;               // tanh output
  std::vector<LayerRow> rows_;
};

// ---------------------------------------------------------------------------
// PatchGAN discriminator D_I: RGB -> (size/8)^2 patch score map, no output
// activation.

template <class T>
class PatchDiscriminator {
public:
  explicit PatchDiscriminator(const NetsConfig& cfg);

  Tensor<T> forward(const Tensor<T>& rgb, bool keep_cache = true);
  Tensor<T> backward(const Tensor<T>& gscores, bool need_input_grad);

  std::vector<Parameter<T>*> params();
  std::vector<Tensor<T>*> buffers() { return {}; }
  void init_params(Rng& rng);
  const std::vector<LayerRow>& rows() const { return rows_; }

private:
  NetsConfig cfg_;
  std::vector<Conv2d<T>> convs_;
  std::vector<Tensor<T>> pre_act_;
  std::vector<LayerRow> rows_;
};

// ---------------------------------------------------------------------------
// Shared conv trunk of the three encoders (stride-2 conv ladder down to 4x4).

template <class T>
class EncoderTrunk {
public:
  EncoderTrunk() = default;
  EncoderTrunk(const std::string& name, const NetsConfig& cfg);

  Tensor<T> forward(const Tensor<T>& rgb, bool training, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& gy, bool need_input_grad);

  std::vector<Parameter<T>*> params();
  std::vector<Tensor<T>*> buffers();
  void init_params(Rng& rng);
  int out_channels() const { return out_channels_; }

private:
  std::vector<Conv2d<T>> convs_;
  std::vector<BatchNorm<T>> norms_;
  std::vector<Tensor<T>> pre_act_;
  int out_channels_ = 0;
};

// ---------------------------------------------------------------------------
// Viewpoint encoder E_V: RGB -> 2 tanh outputs in (-1,1)^2, mapped to angles
// via theta = out0*pi, phi = (out1+1)/2 * pi/2.

template <class T>
class ViewpointEncoder {
public:
  explicit ViewpointEncoder(const NetsConfig& cfg);

  // Returns raw normalized coordinates [N,2].
  Tensor<T> forward(const Tensor<T>& rgb, bool training, bool keep_cache = true);
  Tensor<T> backward(const Tensor<T>& graw, bool need_input_grad);

  std::vector<Parameter<T>*> params();
  std::vector<Tensor<T>*> buffers();
  void init_params(Rng& rng);
  const std::vector<LayerRow>& rows() const { return rows_; }

private:
  EncoderTrunk<T> trunk_;
  Conv2d<T> head_;
  Tensor<T> head_pre_;
  Tensor<T> raw_cache_;
  std::vector<LayerRow> rows_;
};

// ---------------------------------------------------------------------------
// Gaussian code encoders E_A (16-d) and E_S (128-d): trunk, a ReLU'd valid
// convolution, then one fully connected layer producing mean and logvar.

template <class T>
class GaussianEncoder {
public:
  GaussianEncoder(const std::string& name, const NetsConfig& cfg, int code_dim);

  GaussianPosterior<T> forward(const Tensor<T>& rgb, bool training, bool keep_cache = true);
  Tensor<T> backward(const Tensor<T>& gmean, const Tensor<T>& glogvar, bool need_input_grad);

  std::vector<Parameter<T>*> params();
  std::vector<Tensor<T>*> buffers();
  void init_params(Rng& rng);
  const std::vector<LayerRow>& rows() const { return rows_; }
  int code_dim() const { return code_dim_; }

private:
  EncoderTrunk<T> trunk_;
  Conv2d<T> head_;
  Dense<T> fc_;
  Tensor<T> head_pre_;
  int code_dim_ = 0;
  std::vector<LayerRow> rows_;
};

// ---------------------------------------------------------------------------
// Voxel decoder D_S: shape code -> occupancy probabilities [N,1,R,R,R]
// through a ladder of 3d transposed convolutions.

template <class T>
class VoxelDecoder {
public:
  explicit VoxelDecoder(const NetsConfig& cfg);

  Tensor<T> forward(const Tensor<T>& z, bool training, bool keep_cache = true);
  Tensor<T> backward(const Tensor<T>& gprobs);  // returns gz [N, shape_dim]

  std::vector<Parameter<T>*> params();
  std::vector<Tensor<T>*> buffers();
  void init_params(Rng& rng);
  const std::vector<LayerRow>& rows() const { return rows_; }
  int resolution() const { return cfg_.voxel_resolution; }

private:
  NetsConfig cfg_;
  std::vector<ConvTranspose3d<T>> ups_;
  std::vector<BatchNorm<T>> norms_;
  std::vector<Tensor<T>> pre_act_;
  Tensor<T> out_cache_;
  std::vector<LayerRow> rows_;
};

// ---------------------------------------------------------------------------
// Implicit field decoder: MLP over (z_s, x, y, z) -> occupancy in [0,1].

template <class T>
class ImplicitDecoder {
public:
  explicit ImplicitDecoder(const NetsConfig& cfg);

  // points: [N, K, 3] in [0,1]^3 (clamped with a warning otherwise).
  Tensor<T> forward(const Tensor<T>& z, const Tensor<T>& points, bool keep_cache = true);
  Tensor<T> backward(const Tensor<T>& gvalues);  // returns gz

  std::vector<Parameter<T>*> params();
  std::vector<Tensor<T>*> buffers() { return {}; }
  void init_params(Rng& rng);
  const std::vector<LayerRow>& rows() const { return rows_; }

  // Dense grid evaluation at an arbitrary resolution (eval only).
  Tensor<T> evaluate_grid(const Tensor<T>& z_single, int resolution);

private:
  NetsConfig cfg_;
  std::vector<Dense<T>> layers_;
  std::vector<Tensor<T>> pre_act_;
  Tensor<T> out_cache_;
  int64_t cached_n_ = 0, cached_k_ = 0;
  std::vector<LayerRow> rows_;
};

}  // namespace sist::nets
