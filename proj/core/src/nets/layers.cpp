// SPDX-License-Identifier: Apache-2.0
#include "sist/nets/layers.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace sist::nets {

namespace {
template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapRM = Eigen::Map<MatRM<T>>;
template <class T>
using CMapRM = Eigen::Map<const MatRM<T>>;
template <class T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <class T>
using CVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <class T>
Conv2d<T>::Conv2d(std::string name, int in_c, int out_c, int kernel, int stride, int pad_lo,
                  int pad_hi)
    : in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), pad_lo_(pad_lo),
      pad_hi_(pad_hi) {
  weight_.init(name + ".w", {out_c, static_cast<int64_t>(in_c) * kernel * kernel});
  bias_.init(name + ".b", {out_c});
}

template <class T>
std::pair<int, int> Conv2d<T>::same_padding(int in, int kernel, int stride) {
  const int out = (in + stride - 1) / stride;
  const int total = std::max(0, (out - 1) * stride + kernel - in);
  return {total / 2, total - total / 2};
}

template <class T>
void Conv2d<T>::init_params(Rng& rng) {
  init_gaussian(weight_.value, rng);
  bias_.value.zero();
}

template <class T>
void Conv2d<T>::im2col(const T* x, int in_h, int in_w, int out_h, int out_w, T* cols) const {
  const int64_t plane = static_cast<int64_t>(in_h) * in_w;
  const int64_t out_plane = static_cast<int64_t>(out_h) * out_w;
  for (int ci = 0; ci < in_c_; ++ci) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        const int64_t row = (static_cast<int64_t>(ci) * kernel_ + ky) * kernel_ + kx;
        T* dst = cols + row * out_plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride_ - pad_lo_ + ky;
          if (iy < 0 || iy >= in_h) {
            std::fill(dst, dst + out_w, T(0));
            dst += out_w;
            continue;
          }
          const T* src = x + ci * plane + static_cast<int64_t>(iy) * in_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride_ - pad_lo_ + kx;
            *dst++ = (ix >= 0 && ix < in_w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, bool keep_cache) {
  SIST_CHECK(x.rank() == 4 && x.dim(1) == in_c_, "conv ", weight_.name,
             ": expected input channels ", in_c_, ", got shape rank ", x.rank());
  const int n = static_cast<int>(x.dim(0));
  const int in_h = static_cast<int>(x.dim(2));
  const int in_w = static_cast<int>(x.dim(3));
  const int oh = out_size(in_h);
  const int ow = out_size(in_w);
  SIST_CHECK(oh > 0 && ow > 0, "conv ", weight_.name, ": non-positive output size");

  Tensor<T> y({n, out_c_, oh, ow});
  const int64_t k2c = static_cast<int64_t>(in_c_) * kernel_ * kernel_;
  const int64_t out_plane = static_cast<int64_t>(oh) * ow;
  Tensor<T> cols({k2c, out_plane});

  CMapRM<T> w(weight_.value.data(), out_c_, k2c);
  for (int i = 0; i < n; ++i) {
    im2col(x.data() + static_cast<int64_t>(i) * in_c_ * in_h * in_w, in_h, in_w, oh, ow,
           cols.data());
    CMapRM<T> c(cols.data(), k2c, out_plane);
    MapRM<T> yi(y.data() + static_cast<int64_t>(i) * out_c_ * out_plane, out_c_, out_plane);
    yi.noalias() = w * c;
    yi.colwise() += CVecMap<T>(bias_.value.data(), out_c_);
  }
  if (keep_cache) x_cache_ = x;
  return y;
}

template <class T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& gy, bool need_input_grad) {
  const Tensor<T>& x = x_cache_;
  SIST_CHECK(!x.empty(), "conv ", weight_.name, ": backward without cached forward");
  const int n = static_cast<int>(x.dim(0));
  const int in_h = static_cast<int>(x.dim(2));
  const int in_w = static_cast<int>(x.dim(3));
  const int oh = static_cast<int>(gy.dim(2));
  const int ow = static_cast<int>(gy.dim(3));

  Tensor<T> gx;
  if (need_input_grad) gx = Tensor<T>(x.shape());
  const int64_t k2c = static_cast<int64_t>(in_c_) * kernel_ * kernel_;
  const int64_t out_plane = static_cast<int64_t>(oh) * ow;
  Tensor<T> cols({k2c, out_plane});
  Tensor<T> dcols({k2c, out_plane});

  CMapRM<T> w(weight_.value.data(), out_c_, k2c);
  MapRM<T> gw(weight_.grad.data(), out_c_, k2c);
  VecMap<T> gb(bias_.grad.data(), out_c_);
  const int64_t plane = static_cast<int64_t>(in_h) * in_w;

  for (int i = 0; i < n; ++i) {
    im2col(x.data() + static_cast<int64_t>(i) * in_c_ * plane, in_h, in_w, oh, ow, cols.data());
    CMapRM<T> c(cols.data(), k2c, out_plane);
    CMapRM<T> g(gy.data() + static_cast<int64_t>(i) * out_c_ * out_plane, out_c_, out_plane);
    gw.noalias() += g * c.transpose();
    gb.noalias() += g.rowwise().sum();
    if (!need_input_grad) continue;

    MapRM<T> dc(dcols.data(), k2c, out_plane);
    dc.noalias() = w.transpose() * g;

    // col2im scatter-add
    T* gxi = gx.data() + static_cast<int64_t>(i) * in_c_ * plane;
    for (int ci = 0; ci < in_c_; ++ci) {
      for (int ky = 0; ky < kernel_; ++ky) {
        for (int kx = 0; kx < kernel_; ++kx) {
          const int64_t row = (static_cast<int64_t>(ci) * kernel_ + ky) * kernel_ + kx;
          const T* src = dcols.data() + row * out_plane;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad_lo_ + ky;
            if (iy < 0 || iy >= in_h) {
              src += ow;
              continue;
            }
            T* dst = gxi + ci * plane + static_cast<int64_t>(iy) * in_w;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_lo_ + kx;
              if (ix >= 0 && ix < in_w) dst[ix] += src[ox];
            }
            src += ow;
          }
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// ConvTranspose3d

template <class T>
ConvTranspose3d<T>::ConvTranspose3d(std::string name, int in_c, int out_c, int kernel,
                                    int stride, int pad)
    : in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), pad_(pad) {
  weight_.init(name + ".w",
               {in_c, static_cast<int64_t>(out_c) * kernel * kernel * kernel});
  bias_.init(name + ".b", {out_c});
}

template <class T>
void ConvTranspose3d<T>::init_params(Rng& rng) {
  init_gaussian(weight_.value, rng);
  bias_.value.zero();
}

namespace {
// Scatter/gather volume chunk size; bounds the cols buffer.
constexpr int64_t kVolChunk = 4096;
}  // namespace

template <class T>
Tensor<T> ConvTranspose3d<T>::forward(const Tensor<T>& x, bool keep_cache) {
  SIST_CHECK(x.rank() == 5 && x.dim(1) == in_c_, "upconv ", weight_.name,
             ": expected input channels ", in_c_);
  const int n = static_cast<int>(x.dim(0));
  const int id = static_cast<int>(x.dim(2));
  const int ih = static_cast<int>(x.dim(3));
  const int iw = static_cast<int>(x.dim(4));
  const int od = out_size(id), oh = out_size(ih), ow = out_size(iw);
  SIST_CHECK(od > 0 && oh > 0 && ow > 0, "upconv ", weight_.name, ": bad output size");

  Tensor<T> y({n, out_c_, od, oh, ow});
  const int64_t in_vol = static_cast<int64_t>(id) * ih * iw;
  const int64_t out_vol = static_cast<int64_t>(od) * oh * ow;
  const int64_t ock3 = static_cast<int64_t>(out_c_) * kernel_ * kernel_ * kernel_;
  const int k = kernel_;

  CMapRM<T> w(weight_.value.data(), in_c_, ock3);
  Tensor<T> cols({std::min(kVolChunk, in_vol), ock3});

  for (int i = 0; i < n; ++i) {
    const T* xi = x.data() + static_cast<int64_t>(i) * in_c_ * in_vol;
    T* yi = y.data() + static_cast<int64_t>(i) * out_c_ * out_vol;
    // bias fill
    for (int co = 0; co < out_c_; ++co)
      std::fill(yi + co * out_vol, yi + (co + 1) * out_vol, bias_.value[co]);

    CMapRM<T> xm(xi, in_c_, in_vol);
    for (int64_t v0 = 0; v0 < in_vol; v0 += kVolChunk) {
      const int64_t len = std::min(kVolChunk, in_vol - v0);
      MapRM<T> cm(cols.data(), len, ock3);
      cm.noalias() = xm.middleCols(v0, len).transpose() * w;

      for (int64_t v = 0; v < len; ++v) {
        const int64_t lin = v0 + v;
        const int xi_ = static_cast<int>(lin % iw);
        const int yi_ = static_cast<int>((lin / iw) % ih);
        const int zi_ = static_cast<int>(lin / (static_cast<int64_t>(iw) * ih));
        const T* crow = cols.data() + v * ock3;
        for (int co = 0; co < out_c_; ++co) {
          for (int kz = 0; kz < k; ++kz) {
            const int oz = zi_ * stride_ - pad_ + kz;
            if (oz < 0 || oz >= od) continue;
            for (int ky = 0; ky < k; ++ky) {
              const int oy = yi_ * stride_ - pad_ + ky;
              if (oy < 0 || oy >= oh) continue;
              T* dst = yi + ((static_cast<int64_t>(co) * od + oz) * oh + oy) * ow;
              const T* src = crow + ((static_cast<int64_t>(co) * k + kz) * k + ky) * k;
              for (int kx = 0; kx < k; ++kx) {
                const int ox = xi_ * stride_ - pad_ + kx;
                if (ox >= 0 && ox < ow) dst[ox] += src[kx];
              }
            }
          }
        }
      }
    }
  }
  if (keep_cache) x_cache_ = x;
  return y;
}

template <class T>
Tensor<T> ConvTranspose3d<T>::backward(const Tensor<T>& gy) {
  const Tensor<T>& x = x_cache_;
  SIST_CHECK(!x.empty(), "upconv ", weight_.name, ": backward without cached forward");
  const int n = static_cast<int>(x.dim(0));
  const int id = static_cast<int>(x.dim(2));
  const int ih = static_cast<int>(x.dim(3));
  const int iw = static_cast<int>(x.dim(4));
  const int od = static_cast<int>(gy.dim(2));
  const int oh = static_cast<int>(gy.dim(3));
  const int ow = static_cast<int>(gy.dim(4));

  Tensor<T> gx(x.shape());
  const int64_t in_vol = static_cast<int64_t>(id) * ih * iw;
  const int64_t out_vol = static_cast<int64_t>(od) * oh * ow;
  const int64_t ock3 = static_cast<int64_t>(out_c_) * kernel_ * kernel_ * kernel_;
  const int k = kernel_;

  CMapRM<T> w(weight_.value.data(), in_c_, ock3);
  MapRM<T> gw(weight_.grad.data(), in_c_, ock3);
  Tensor<T> dcols({std::min(kVolChunk, in_vol), ock3});

  for (int i = 0; i < n; ++i) {
    const T* gyi = gy.data() + static_cast<int64_t>(i) * out_c_ * out_vol;
    const T* xi = x.data() + static_cast<int64_t>(i) * in_c_ * in_vol;
    T* gxi = gx.data() + static_cast<int64_t>(i) * in_c_ * in_vol;

    for (int co = 0; co < out_c_; ++co) {
      double s = 0.0;
      const T* g = gyi + co * out_vol;
      for (int64_t v = 0; v < out_vol; ++v) s += static_cast<double>(g[v]);
      bias_.grad[co] += static_cast<T>(s);
    }

    CMapRM<T> xm(xi, in_c_, in_vol);
    MapRM<T> gxm(gxi, in_c_, in_vol);
    for (int64_t v0 = 0; v0 < in_vol; v0 += kVolChunk) {
      const int64_t len = std::min(kVolChunk, in_vol - v0);
      MapRM<T> dc(dcols.data(), len, ock3);
      // gather the output gradient reached by each input voxel
      for (int64_t v = 0; v < len; ++v) {
        const int64_t lin = v0 + v;
        const int xi_ = static_cast<int>(lin % iw);
        const int yi_ = static_cast<int>((lin / iw) % ih);
        const int zi_ = static_cast<int>(lin / (static_cast<int64_t>(iw) * ih));
        T* crow = dcols.data() + v * ock3;
        for (int co = 0; co < out_c_; ++co) {
          for (int kz = 0; kz < k; ++kz) {
            const int oz = zi_ * stride_ - pad_ + kz;
            for (int ky = 0; ky < k; ++ky) {
              const int oy = yi_ * stride_ - pad_ + ky;
              T* dst = crow + ((static_cast<int64_t>(co) * k + kz) * k + ky) * k;
              if (oz < 0 || oz >= od || oy < 0 || oy >= oh) {
                std::fill(dst, dst + k, T(0));
                continue;
              }
              const T* src = gyi + ((static_cast<int64_t>(co) * od + oz) * oh + oy) * ow;
              for (int kx = 0; kx < k; ++kx) {
                const int ox = xi_ * stride_ - pad_ + kx;
                dst[kx] = (ox >= 0 && ox < ow) ? src[ox] : T(0);
              }
            }
          }
        }
      }
      gxm.middleCols(v0, len).noalias() = (dc * w.transpose()).transpose();
      gw.noalias() += xm.middleCols(v0, len) * dc;
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm

template <class T>
BatchNorm<T>::BatchNorm(std::string name, int channels, double eps, double momentum)
    : channels_(channels), eps_(eps), momentum_(momentum) {
  gamma_.init(name + ".gamma", {channels});
  beta_.init(name + ".beta", {channels});
  running_mean_ = Tensor<T>({channels});
  running_var_ = Tensor<T>::full({channels}, T(1));
}

template <class T>
void BatchNorm<T>::init_params(Rng&) {
  gamma_.value.fill(T(1));
  beta_.value.zero();
}

template <class T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, bool training, bool keep_cache) {
  SIST_CHECK(x.rank() >= 2 && x.dim(1) == channels_, "batchnorm ", gamma_.name,
             ": channel mismatch");
  const int64_t n = x.dim(0);
  int64_t spatial = 1;
  for (size_t d = 2; d < x.rank(); ++d) spatial *= x.dim(d);
  const int64_t m = n * spatial;
  SIST_CHECK(m > 0, "batchnorm over empty batch");

  Tensor<T> y(x.shape());
  if (keep_cache) {
    xhat_cache_ = Tensor<T>(x.shape());
    inv_std_cache_.assign(static_cast<size_t>(channels_), T(0));
  }
  cache_valid_ = keep_cache && training;

  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (training) {
      double sum = 0.0, sq = 0.0;
      for (int64_t b = 0; b < n; ++b) {
        const T* p = x.data() + (b * channels_ + c) * spatial;
        for (int64_t s = 0; s < spatial; ++s) {
          sum += static_cast<double>(p[s]);
          sq += static_cast<double>(p[s]) * static_cast<double>(p[s]);
        }
      }
      mean = sum / static_cast<double>(m);
      var = std::max(0.0, sq / static_cast<double>(m) - mean * mean);
      running_mean_[c] = static_cast<T>((1.0 - momentum_) * running_mean_[c] + momentum_ * mean);
      running_var_[c] = static_cast<T>((1.0 - momentum_) * running_var_[c] + momentum_ * var);
    } else {
      mean = static_cast<double>(running_mean_[c]);
      var = static_cast<double>(running_var_[c]);
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    const T g = gamma_.value[c], bt = beta_.value[c];
    for (int64_t b = 0; b < n; ++b) {
      const T* p = x.data() + (b * channels_ + c) * spatial;
      T* q = y.data() + (b * channels_ + c) * spatial;
      T* xh = cache_valid_ ? xhat_cache_.data() + (b * channels_ + c) * spatial : nullptr;
      for (int64_t s = 0; s < spatial; ++s) {
        const T xhat = static_cast<T>((static_cast<double>(p[s]) - mean) * inv_std);
        if (xh) xh[s] = xhat;
        q[s] = g * xhat + bt;
      }
    }
    if (cache_valid_) inv_std_cache_[static_cast<size_t>(c)] = static_cast<T>(inv_std);
  }
  return y;
}

template <class T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& gy) {
  SIST_CHECK(cache_valid_, "batchnorm ", gamma_.name, ": backward without training forward");
  const int64_t n = gy.dim(0);
  int64_t spatial = 1;
  for (size_t d = 2; d < gy.rank(); ++d) spatial *= gy.dim(d);
  const double m = static_cast<double>(n * spatial);

  Tensor<T> gx(gy.shape());
  for (int c = 0; c < channels_; ++c) {
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int64_t b = 0; b < n; ++b) {
      const T* g = gy.data() + (b * channels_ + c) * spatial;
      const T* xh = xhat_cache_.data() + (b * channels_ + c) * spatial;
      for (int64_t s = 0; s < spatial; ++s) {
        sum_gy += static_cast<double>(g[s]);
        sum_gy_xhat += static_cast<double>(g[s]) * static_cast<double>(xh[s]);
      }
    }
    beta_.grad[c] += static_cast<T>(sum_gy);
    gamma_.grad[c] += static_cast<T>(sum_gy_xhat);

    const double g = static_cast<double>(gamma_.value[c]);
    const double inv_std = static_cast<double>(inv_std_cache_[static_cast<size_t>(c)]);
    const double mean_gy = sum_gy / m;
    const double mean_gy_xhat = sum_gy_xhat / m;
    for (int64_t b = 0; b < n; ++b) {
      const T* gp = gy.data() + (b * channels_ + c) * spatial;
      const T* xh = xhat_cache_.data() + (b * channels_ + c) * spatial;
      T* q = gx.data() + (b * channels_ + c) * spatial;
      for (int64_t s = 0; s < spatial; ++s) {
        q[s] = static_cast<T>(g * inv_std *
                              (static_cast<double>(gp[s]) - mean_gy -
                               static_cast<double>(xh[s]) * mean_gy_xhat));
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Dense

template <class T>
Dense<T>::Dense(std::string name, int in_dim, int out_dim) : in_dim_(in_dim), out_dim_(out_dim) {
  weight_.init(name + ".w", {out_dim, in_dim});
  bias_.init(name + ".b", {out_dim});
}

template <class T>
void Dense<T>::init_params(Rng& rng) {
  init_gaussian(weight_.value, rng);
  bias_.value.zero();
}

template <class T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x, bool keep_cache) {
  SIST_CHECK(x.rank() == 2 && x.dim(1) == in_dim_, "dense ", weight_.name, ": bad input shape");
  const int64_t n = x.dim(0);
  Tensor<T> y({n, out_dim_});
  CMapRM<T> xm(x.data(), n, in_dim_);
  CMapRM<T> wm(weight_.value.data(), out_dim_, in_dim_);
  MapRM<T> ym(y.data(), n, out_dim_);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += CVecMap<T>(bias_.value.data(), out_dim_).transpose();
  if (keep_cache) x_cache_ = x;
  return y;
}

template <class T>
Tensor<T> Dense<T>::backward(const Tensor<T>& gy) {
  const Tensor<T>& x = x_cache_;
  SIST_CHECK(!x.empty(), "dense ", weight_.name, ": backward without cached forward");
  const int64_t n = x.dim(0);
  Tensor<T> gx(x.shape());
  CMapRM<T> xm(x.data(), n, in_dim_);
  CMapRM<T> gym(gy.data(), n, out_dim_);
  CMapRM<T> wm(weight_.value.data(), out_dim_, in_dim_);
  MapRM<T> gwm(weight_.grad.data(), out_dim_, in_dim_);
  MapRM<T> gxm(gx.data(), n, in_dim_);
  gwm.noalias() += gym.transpose() * xm;
  VecMap<T>(bias_.grad.data(), out_dim_).noalias() += gym.colwise().sum().transpose();
  gxm.noalias() = gym * wm;
  return gx;
}

// ---------------------------------------------------------------------------
// Activations and shape ops

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& gy, const Tensor<T>& x) {
  Tensor<T> gx(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) gx[i] = x[i] > T(0) ? gy[i] : T(0);
  return gx;
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
  return y;
}

template <class T>
Tensor<T> leaky_relu_backward(const Tensor<T>& gy, const Tensor<T>& x, T slope) {
  Tensor<T> gx(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) gx[i] = x[i] > T(0) ? gy[i] : slope * gy[i];
  return gx;
}

template <class T>
Tensor<T> tanh_act(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

template <class T>
Tensor<T> tanh_backward(const Tensor<T>& gy, const Tensor<T>& y) {
  Tensor<T> gx(y.shape());
  for (int64_t i = 0; i < y.numel(); ++i) gx[i] = gy[i] * (T(1) - y[i] * y[i]);
  return gx;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i)
    y[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x[i]))));
  return y;
}

template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& gy, const Tensor<T>& y) {
  Tensor<T> gx(y.shape());
  for (int64_t i = 0; i < y.numel(); ++i) gx[i] = gy[i] * y[i] * (T(1) - y[i]);
  return gx;
}

template <class T>
Tensor<T> upsample2x(const Tensor<T>& x) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> y({n, c, h * 2, w * 2});
  for (int64_t i = 0; i < n * c; ++i) {
    const T* src = x.data() + i * h * w;
    T* dst = y.data() + i * h * w * 4;
    for (int64_t yy = 0; yy < h * 2; ++yy) {
      const T* row = src + (yy / 2) * w;
      T* out = dst + yy * w * 2;
      for (int64_t xx = 0; xx < w * 2; ++xx) out[xx] = row[xx / 2];
    }
  }
  return y;
}

template <class T>
Tensor<T> upsample2x_backward(const Tensor<T>& gy) {
  const int64_t n = gy.dim(0), c = gy.dim(1), oh = gy.dim(2), ow = gy.dim(3);
  Tensor<T> gx({n, c, oh / 2, ow / 2});
  for (int64_t i = 0; i < n * c; ++i) {
    const T* src = gy.data() + i * oh * ow;
    T* dst = gx.data() + i * (oh / 2) * (ow / 2);
    for (int64_t yy = 0; yy < oh; ++yy) {
      T* row = dst + (yy / 2) * (ow / 2);
      const T* in = src + yy * ow;
      for (int64_t xx = 0; xx < ow; ++xx) row[xx / 2] += in[xx];
    }
  }
  return gx;
}

template <class T>
Tensor<T> concat_code(const Tensor<T>& x, const Tensor<T>& code) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t k = code.dim(1);
  SIST_CHECK(code.dim(0) == n, "concat_code batch mismatch");
  Tensor<T> y({n, c + k, h, w});
  const int64_t plane = h * w;
  for (int64_t b = 0; b < n; ++b) {
    std::copy(x.data() + b * c * plane, x.data() + (b + 1) * c * plane,
              y.data() + b * (c + k) * plane);
    for (int64_t j = 0; j < k; ++j) {
      T* dst = y.data() + (b * (c + k) + c + j) * plane;
      std::fill(dst, dst + plane, code[b * k + j]);
    }
  }
  return y;
}

template <class T>
Tensor<T> split_code_grad(const Tensor<T>& g, int x_channels, Tensor<T>* gcode) {
  const int64_t n = g.dim(0), tc = g.dim(1), h = g.dim(2), w = g.dim(3);
  const int64_t c = x_channels, k = tc - c;
  const int64_t plane = h * w;
  Tensor<T> gx({n, c, h, w});
  for (int64_t b = 0; b < n; ++b) {
    std::copy(g.data() + b * tc * plane, g.data() + b * tc * plane + c * plane,
              gx.data() + b * c * plane);
    if (gcode) {
      for (int64_t j = 0; j < k; ++j) {
        const T* src = g.data() + (b * tc + c + j) * plane;
        double s = 0.0;
        for (int64_t i = 0; i < plane; ++i) s += static_cast<double>(src[i]);
        (*gcode)[b * k + j] += static_cast<T>(s);
      }
    }
  }
  return gx;
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const int64_t n = a.dim(0), ca = a.dim(1), h = a.dim(2), w = a.dim(3);
  const int64_t cb = b.dim(1);
  SIST_CHECK(b.dim(0) == n && b.dim(2) == h && b.dim(3) == w, "concat_channels shape mismatch");
  Tensor<T> y({n, ca + cb, h, w});
  const int64_t plane = h * w;
  for (int64_t i = 0; i < n; ++i) {
    std::copy(a.data() + i * ca * plane, a.data() + (i + 1) * ca * plane,
              y.data() + i * (ca + cb) * plane);
    std::copy(b.data() + i * cb * plane, b.data() + (i + 1) * cb * plane,
              y.data() + (i * (ca + cb) + ca) * plane);
  }
  return y;
}

// ---------------------------------------------------------------------------

#define SIST_INSTANTIATE(T)                                                          \
  template class Conv2d<T>;                                                          \
  template class ConvTranspose3d<T>;                                                 \
  template class BatchNorm<T>;                                                       \
  template class Dense<T>;                                                           \
  template Tensor<T> relu(const Tensor<T>&);                                         \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                \
  template Tensor<T> leaky_relu_backward(const Tensor<T>&, const Tensor<T>&, T);     \
  template Tensor<T> tanh_act(const Tensor<T>&);                                     \
  template Tensor<T> tanh_backward(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> sigmoid(const Tensor<T>&);                                      \
  template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> upsample2x(const Tensor<T>&);                                   \
  template Tensor<T> upsample2x_backward(const Tensor<T>&);                          \
  template Tensor<T> concat_code(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> split_code_grad(const Tensor<T>&, int, Tensor<T>*);             \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);

SIST_INSTANTIATE(float)
SIST_INSTANTIATE(double)
#undef SIST_INSTANTIATE

}  // namespace sist::nets
