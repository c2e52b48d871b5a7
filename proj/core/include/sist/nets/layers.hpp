// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sist/common/rng.hpp"
#include "sist/common/tensor.hpp"

namespace sist::nets {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  void init(std::string n, std::vector<int64_t> shape) {
    name = std::move(n);
    value = Tensor<T>(shape);
    grad = Tensor<T>(std::move(shape));
  }
  void zero_grad() { grad.zero(); }
};

// Gaussian(0, std) weights, GAN-style.
template <class T>
void init_gaussian(Tensor<T>& t, Rng& rng, double std_dev = 0.02) {
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.normal() * std_dev);
}

// ---------------------------------------------------------------------------
// 2d convolution over [N,C,H,W] with per-side padding (TF-style SAME needs an
// asymmetric pair for even kernels at stride 1).

template <class T>
class Conv2d {
public:
  Conv2d() = default;
  Conv2d(std::string name, int in_c, int out_c, int kernel, int stride, int pad_lo, int pad_hi);

  // SAME padding pair for ceil(in/stride) output.
  static std::pair<int, int> same_padding(int in, int kernel, int stride);

  Tensor<T> forward(const Tensor<T>& x, bool keep_cache = true);
  // Accumulates weight/bias grads; returns grad w.r.t. the input (empty when
  // need_input_grad is false).
  Tensor<T> backward(const Tensor<T>& gy, bool need_input_grad = true);

  int out_size(int in) const { return (in + pad_lo_ + pad_hi_ - kernel_) / stride_ + 1; }
  std::vector<Parameter<T>*> params() { return {&weight_, &bias_}; }
  void init_params(Rng& rng);

  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }

private:
  void im2col(const T* x, int in_h, int in_w, int out_h, int out_w, T* cols) const;

  int in_c_ = 0, out_c_ = 0, kernel_ = 0, stride_ = 1, pad_lo_ = 0, pad_hi_ = 0;
  Parameter<T> weight_;  // [out_c, in_c*k*k]
  Parameter<T> bias_;    // [out_c]
  Tensor<T> x_cache_;
};

// ---------------------------------------------------------------------------
// 3d transposed convolution over [N,C,D,H,W]; out = (in-1)*stride - 2*pad + k.

template <class T>
class ConvTranspose3d {
public:
  ConvTranspose3d() = default;
  ConvTranspose3d(std::string name, int in_c, int out_c, int kernel, int stride, int pad);

  Tensor<T> forward(const Tensor<T>& x, bool keep_cache = true);
  Tensor<T> backward(const Tensor<T>& gy);

  int out_size(int in) const { return (in - 1) * stride_ - 2 * pad_ + kernel_; }
  std::vector<Parameter<T>*> params() { return {&weight_, &bias_}; }
  void init_params(Rng& rng);

private:
  int in_c_ = 0, out_c_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
  Parameter<T> weight_;  // [in_c, out_c*k^3]
  Parameter<T> bias_;    // [out_c]
  Tensor<T> x_cache_;
};

// ---------------------------------------------------------------------------
// Batch normalization over axis 1, any rank >= 2. Training mode uses batch
// statistics and updates running buffers; eval mode uses the buffers.

template <class T>
class BatchNorm {
public:
  BatchNorm() = default;
  BatchNorm(std::string name, int channels, double eps = 1e-5, double momentum = 0.1);

  Tensor<T> forward(const Tensor<T>& x, bool training, bool keep_cache = true);
  Tensor<T> backward(const Tensor<T>& gy);

  std::vector<Parameter<T>*> params() { return {&gamma_, &beta_}; }
  // Buffers participate in checkpoints but not in optimization.
  std::vector<Tensor<T>*> buffers() { return {&running_mean_, &running_var_}; }
  void init_params(Rng& rng);

private:
  int channels_ = 0;
  double eps_ = 1e-5, momentum_ = 0.1;
  Parameter<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  // training-mode cache
  Tensor<T> xhat_cache_;
  std::vector<T> inv_std_cache_;
  bool cache_valid_ = false;
};

// ---------------------------------------------------------------------------
// Fully connected layer over [N, in] -> [N, out].

template <class T>
class Dense {
public:
  Dense() = default;
  Dense(std::string name, int in_dim, int out_dim);

  Tensor<T> forward(const Tensor<T>& x, bool keep_cache = true);
  Tensor<T> backward(const Tensor<T>& gy);

  std::vector<Parameter<T>*> params() { return {&weight_, &bias_}; }
  void init_params(Rng& rng);

private:
  int in_dim_ = 0, out_dim_ = 0;
  Parameter<T> weight_;  // [out, in]
  Parameter<T> bias_;    // [out]
  Tensor<T> x_cache_;
};

// ---------------------------------------------------------------------------
// Activations. Backward takes whichever of (input, output) it needs.

template <class T> Tensor<T> relu(const Tensor<T>& x);
template <class T> Tensor<T> relu_backward(const Tensor<T>& gy, const Tensor<T>& x);
template <class T> Tensor<T> leaky_relu(const Tensor<T>& x, T slope);
template <class T> Tensor<T> leaky_relu_backward(const Tensor<T>& gy, const Tensor<T>& x, T slope);
template <class T> Tensor<T> tanh_act(const Tensor<T>& x);
template <class T> Tensor<T> tanh_backward(const Tensor<T>& gy, const Tensor<T>& y);
template <class T> Tensor<T> sigmoid(const Tensor<T>& x);
template <class T> Tensor<T> sigmoid_backward(const Tensor<T>& gy, const Tensor<T>& y);

// Nearest-neighbor 2x upsampling over [N,C,H,W].
template <class T> Tensor<T> upsample2x(const Tensor<T>& x);
template <class T> Tensor<T> upsample2x_backward(const Tensor<T>& gy);

// Tile code [N,K] spatially and append as channels: [N,C,H,W] -> [N,C+K,H,W].
template <class T> Tensor<T> concat_code(const Tensor<T>& x, const Tensor<T>& code);
// Split the gradient of concat_code; the code part is reduced over H,W and
// accumulated into gcode when non-null.
template <class T>
Tensor<T> split_code_grad(const Tensor<T>& g, int x_channels, Tensor<T>* gcode);

// Plain channel concat of equally sized maps.
template <class T> Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace sist::nets
