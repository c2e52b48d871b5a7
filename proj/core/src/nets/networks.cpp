// SPDX-License-Identifier: Apache-2.0
#include "sist/nets/networks.hpp"

#include <cmath>
#include <iostream>

namespace sist::nets {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2i(int v) {
  int n = 0;
  while ((1 << n) < v) ++n;
  return n;
}

template <class T>
void append_params(std::vector<Parameter<T>*>& out, std::vector<Parameter<T>*> in) {
  out.insert(out.end(), in.begin(), in.end());
}

template <class T>
void append_buffers(std::vector<Tensor<T>*>& out, std::vector<Tensor<T>*> in) {
  out.insert(out.end(), in.begin(), in.end());
}

}  // namespace

void NetsConfig::validate() const {
  SIST_CHECK(image_size >= 16 && image_size % 8 == 0 && is_pow2(image_size / 4),
             "image_size must be a power-of-two multiple of 4, >= 16; got ", image_size);
  SIST_CHECK(image_channels > 0, "image_channels must be positive");
  SIST_CHECK(appearance_dim > 0 && shape_dim > 0, "code lengths must be positive");
  SIST_CHECK(generator_base > 0 && discriminator_base > 0 && encoder_base > 0 &&
                 voxel_decoder_base > 0,
             "channel bases must be positive");
  SIST_CHECK(voxel_resolution >= 8 && is_pow2(voxel_resolution / 4),
             "voxel_resolution must be 4 * 2^m, >= 8; got ", voxel_resolution);
  SIST_CHECK(!implicit_hidden.empty(), "implicit_hidden must not be empty");
}

// ---------------------------------------------------------------------------

template <class T>
ReparamSample<T> reparameterize(const GaussianPosterior<T>& q, Rng& rng) {
  ReparamSample<T> s;
  s.eps = Tensor<T>(q.mean.shape());
  s.z = Tensor<T>(q.mean.shape());
  for (int64_t i = 0; i < q.mean.numel(); ++i) {
    s.eps[i] = static_cast<T>(rng.normal());
    s.z[i] = q.mean[i] + std::exp(q.logvar[i] / T(2)) * s.eps[i];
  }
  return s;
}

template <class T>
void reparameterize_backward(const Tensor<T>& gz, const Tensor<T>& logvar,
                             const Tensor<T>& eps, Tensor<T>& gmean, Tensor<T>& glogvar) {
  for (int64_t i = 0; i < gz.numel(); ++i) {
    gmean[i] += gz[i];
    glogvar[i] += gz[i] * T(0.5) * std::exp(logvar[i] / T(2)) * eps[i];
  }
}

// ---------------------------------------------------------------------------
// ImageGenerator

template <class T>
ImageGenerator<T>::ImageGenerator(const NetsConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  const int s = cfg.image_size;
  const int b = cfg.generator_base;
  const int k = cfg.appearance_dim;

  auto same = [&](int in, int kernel, int stride) { return Conv2d<T>::same_padding(in, kernel, stride); };

  // down ladder: size -> size/8
  int cur = s;
  auto p7 = same(cur, 7, 1);
  convs_.emplace_back("g.conv0", 1 + k, b, 7, 1, p7.first, p7.second);
  norms_.emplace_back("g.bn0", b);
  int ch = b;
  for (int i = 1; i <= 3; ++i) {
    auto p = same(cur, 4, 2);
    convs_.emplace_back("g.conv" + std::to_string(i), ch + k, ch * 2, 4, 2, p.first, p.second);
    norms_.emplace_back("g.bn" + std::to_string(i), ch * 2);
    ch *= 2;
    cur /= 2;
  }
  // up ladder: size/8 -> size
  for (int i = 4; i <= 6; ++i) {
    cur *= 2;
    auto p = same(cur, 5, 1);
    convs_.emplace_back("g.conv" + std::to_string(i), ch + k, ch / 2, 5, 1, p.first, p.second);
    norms_.emplace_back("g.bn" + std::to_string(i), ch / 2);
    ch /= 2;
  }
  auto pf = same(s, 7, 1);
  convs_.emplace_back("g.conv7", ch + k + 1, cfg.image_channels, 7, 1, pf.first, pf.second);
  pre_act_.resize(7);

  rows_.push_back({"Input: [depth]", {s, s, 1}, 0, 0, false, ""});
  rows_.push_back({"[z_a] + Conv", {s, s, b}, 7, 1, true, "ReLU"});
  rows_.push_back({"[z_a] + Conv", {s / 2, s / 2, 2 * b}, 4, 2, true, "ReLU"});
  rows_.push_back({"[z_a] + Conv", {s / 4, s / 4, 4 * b}, 4, 2, true, "ReLU"});
  rows_.push_back({"[z_a] + Conv", {s / 8, s / 8, 8 * b}, 4, 2, true, "ReLU"});
  rows_.push_back({"Ups(x2) + [z_a] + Conv", {s / 4, s / 4, 4 * b}, 5, 1, true, "ReLU"});
  rows_.push_back({"Ups(x2) + [z_a] + Conv", {s / 2, s / 2, 2 * b}, 5, 1, true, "ReLU"});
  rows_.push_back({"Ups(x2) + [z_a] + Conv", {s, s, b}, 5, 1, true, "ReLU"});
  rows_.push_back({"[z_a] + [depth] + Conv", {s, s, cfg.image_channels}, 7, 1, false, "Tanh"});
}

template <class T>
Tensor<T> ImageGenerator<T>::forward(const Tensor<T>& depth, const Tensor<T>& z_a,
                                     bool training, bool keep_cache) {
  SIST_CHECK(depth.rank() == 4 && depth.dim(1) == 1 && depth.dim(2) == cfg_.image_size &&
                 depth.dim(3) == cfg_.image_size,
             "generator: depth must be [N,1,", cfg_.image_size, ",", cfg_.image_size, "]");
  SIST_CHECK(z_a.rank() == 2 && z_a.dim(1) == cfg_.appearance_dim &&
                 z_a.dim(0) == depth.dim(0),
             "generator: z_a must be [N,", cfg_.appearance_dim, "]");

  Tensor<T> act = depth;
  for (int i = 0; i < 4; ++i) {
    Tensor<T> x = concat_code(act, z_a);
    Tensor<T> c = convs_[static_cast<size_t>(i)].forward(x, keep_cache);
    Tensor<T> bn = norms_[static_cast<size_t>(i)].forward(c, training, keep_cache);
    if (keep_cache) pre_act_[static_cast<size_t>(i)] = bn;
    act = relu(bn);
  }
  for (int i = 4; i < 7; ++i) {
    Tensor<T> up = upsample2x(act);
    Tensor<T> x = concat_code(up, z_a);
    Tensor<T> c = convs_[static_cast<size_t>(i)].forward(x, keep_cache);
    Tensor<T> bn = norms_[static_cast<size_t>(i)].forward(c, training, keep_cache);
    if (keep_cache) pre_act_[static_cast<size_t>(i)] = bn;
    act = relu(bn);
  }
  Tensor<T> x = concat_channels(concat_code(act, z_a), depth);
  Tensor<T> out = tanh_act(convs_[7].forward(x, keep_cache));
  if (keep_cache) {
    depth_cache_ = depth;
    out_cache_ = out;
  }
  return out;
}

template <class T>
void ImageGenerator<T>::backward(const Tensor<T>& grgb) {
  const int b = cfg_.generator_base;
  const int feat_ch[8] = {1, b, 2 * b, 4 * b, 8 * b, 4 * b, 2 * b, b};

  Tensor<T> g = tanh_backward(grgb, out_cache_);
  g = convs_[7].backward(g);
  g = split_code_grad<T>(g, feat_ch[7] + cfg_.appearance_dim, nullptr);  // drop depth
  g = split_code_grad<T>(g, feat_ch[7], nullptr);                        // drop z_a
  for (int i = 6; i >= 4; --i) {
    g = relu_backward(g, pre_act_[static_cast<size_t>(i)]);
    g = norms_[static_cast<size_t>(i)].backward(g);
    g = convs_[static_cast<size_t>(i)].backward(g);
    g = split_code_grad<T>(g, feat_ch[i], nullptr);
    g = upsample2x_backward(g);
  }
  for (int i = 3; i >= 0; --i) {
    g = relu_backward(g, pre_act_[static_cast<size_t>(i)]);
    g = norms_[static_cast<size_t>(i)].backward(g);
    g = convs_[static_cast<size_t>(i)].backward(g, /*need_input_grad=*/i > 0);
    if (i > 0) g = split_code_grad<T>(g, feat_ch[i], nullptr);
  }
}

template <class T>
std::vector<Parameter<T>*> ImageGenerator<T>::params() {
  std::vector<Parameter<T>*> out;
  for (auto& c : convs_) append_params(out, c.params());
  for (auto& nrm : norms_) append_params(out, nrm.params());
  return out;
}

template <class T>
std::vector<Tensor<T>*> ImageGenerator<T>::buffers() {
  std::vector<Tensor<T>*> out;
  for (auto& nrm : norms_) append_buffers(out, nrm.buffers());
  return out;
}

template <class T>
void ImageGenerator<T>::init_params(Rng& rng) {
  for (auto& c : convs_) c.init_params(rng);
  for (auto& nrm : norms_) nrm.init_params(rng);
}

// ---------------------------------------------------------------------------
// PatchDiscriminator

template <class T>
PatchDiscriminator<T>::PatchDiscriminator(const NetsConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  const int s = cfg.image_size;
  const int b = cfg.discriminator_base;

  int cur = s;
  int ch = cfg.image_channels;
  const int outs[5] = {b, 2 * b, 4 * b, 8 * b, 1};
  const int strides[5] = {2, 2, 2, 1, 1};
  for (int i = 0; i < 5; ++i) {
    auto p = Conv2d<T>::same_padding(cur, 4, strides[i]);
    convs_.emplace_back("d.conv" + std::to_string(i), ch, outs[i], 4, strides[i], p.first,
                        p.second);
    ch = outs[i];
    cur /= strides[i];
  }
  pre_act_.resize(4);

  rows_.push_back({"Input: [RGB]", {s, s, cfg.image_channels}, 0, 0, false, ""});
  rows_.push_back({"Conv", {s / 2, s / 2, b}, 4, 2, false, "LeakyReLU"});
  rows_.push_back({"Conv", {s / 4, s / 4, 2 * b}, 4, 2, false, "LeakyReLU"});
  rows_.push_back({"Conv", {s / 8, s / 8, 4 * b}, 4, 2, false, "LeakyReLU"});
  rows_.push_back({"Conv", {s / 8, s / 8, 8 * b}, 4, 1, false, "LeakyReLU"});
  rows_.push_back({"Conv", {s / 8, s / 8, 1}, 4, 1, false, ""});
}

template <class T>
Tensor<T> PatchDiscriminator<T>::forward(const Tensor<T>& rgb, bool keep_cache) {
  SIST_CHECK(rgb.rank() == 4 && rgb.dim(1) == cfg_.image_channels &&
                 rgb.dim(2) == cfg_.image_size && rgb.dim(3) == cfg_.image_size,
             "discriminator: bad input shape");
  const T slope = static_cast<T>(cfg_.leaky_slope);
  Tensor<T> act = rgb;
  for (int i = 0; i < 4; ++i) {
    Tensor<T> c = convs_[static_cast<size_t>(i)].forward(act, keep_cache);
    if (keep_cache) pre_act_[static_cast<size_t>(i)] = c;
    act = leaky_relu(c, slope);
  }
  return convs_[4].forward(act, keep_cache);
}

template <class T>
Tensor<T> PatchDiscriminator<T>::backward(const Tensor<T>& gscores, bool need_input_grad) {
  const T slope = static_cast<T>(cfg_.leaky_slope);
  Tensor<T> g = convs_[4].backward(gscores);
  for (int i = 3; i >= 0; --i) {
    g = leaky_relu_backward(g, pre_act_[static_cast<size_t>(i)], slope);
    g = convs_[static_cast<size_t>(i)].backward(g, need_input_grad || i > 0);
  }
  return g;
}

template <class T>
std::vector<Parameter<T>*> PatchDiscriminator<T>::params() {
  std::vector<Parameter<T>*> out;
  for (auto& c : convs_) append_params(out, c.params());
  return out;
}

template <class T>
void PatchDiscriminator<T>::init_params(Rng& rng) {
  for (auto& c : convs_) c.init_params(rng);
}

// ---------------------------------------------------------------------------
// EncoderTrunk

template <class T>
EncoderTrunk<T>::EncoderTrunk(const std::string& name, const NetsConfig& cfg) {
  const int n_down = log2i(cfg.image_size / 4);
  int cur = cfg.image_size;
  int ch = cfg.image_channels;
  for (int i = 0; i < n_down; ++i) {
    const int out = cfg.encoder_base << i;
    auto p = Conv2d<T>::same_padding(cur, 4, 2);
    convs_.emplace_back(name + ".conv" + std::to_string(i), ch, out, 4, 2, p.first, p.second);
    norms_.emplace_back(name + ".bn" + std::to_string(i), out);
    ch = out;
    cur /= 2;
  }
  out_channels_ = ch;
  pre_act_.resize(static_cast<size_t>(n_down));
}

template <class T>
Tensor<T> EncoderTrunk<T>::forward(const Tensor<T>& rgb, bool training, bool keep_cache) {
  Tensor<T> act = rgb;
  for (size_t i = 0; i < convs_.size(); ++i) {
    Tensor<T> c = convs_[i].forward(act, keep_cache);
    Tensor<T> bn = norms_[i].forward(c, training, keep_cache);
    if (keep_cache) pre_act_[i] = bn;
    act = relu(bn);
  }
  return act;
}

template <class T>
Tensor<T> EncoderTrunk<T>::backward(const Tensor<T>& gy, bool need_input_grad) {
  Tensor<T> g = gy;
  for (size_t i = convs_.size(); i-- > 0;) {
    g = relu_backward(g, pre_act_[i]);
    g = norms_[i].backward(g);
    g = convs_[i].backward(g, need_input_grad || i > 0);
  }
  return g;
}

template <class T>
std::vector<Parameter<T>*> EncoderTrunk<T>::params() {
  std::vector<Parameter<T>*> out;
  for (auto& c : convs_) append_params(out, c.params());
  for (auto& nrm : norms_) append_params(out, nrm.params());
  return out;
}

template <class T>
std::vector<Tensor<T>*> EncoderTrunk<T>::buffers() {
  std::vector<Tensor<T>*> out;
  for (auto& nrm : norms_) append_buffers(out, nrm.buffers());
  return out;
}

template <class T>
void EncoderTrunk<T>::init_params(Rng& rng) {
  for (auto& c : convs_) c.init_params(rng);
  for (auto& nrm : norms_) nrm.init_params(rng);
}

// ---------------------------------------------------------------------------
// ViewpointEncoder

template <class T>
ViewpointEncoder<T>::ViewpointEncoder(const NetsConfig& cfg)
    : trunk_("ev", cfg), head_("ev.head", trunk_.out_channels(), 2, 4, 1, 0, 0) {
  cfg.validate();
  const int s = cfg.image_size;
  rows_.push_back({"Input: [RGB]", {s, s, cfg.image_channels}, 0, 0, false, ""});
  int cur = s;
  const int n_down = log2i(s / 4);
  for (int i = 0; i < n_down; ++i) {
    cur /= 2;
    rows_.push_back({"Conv", {cur, cur, cfg.encoder_base << i}, 4, 2, true, "ReLU"});
  }
  rows_.push_back({"Conv", {1, 1, 2}, 4, 1, false, "Tanh"});
}

template <class T>
Tensor<T> ViewpointEncoder<T>::forward(const Tensor<T>& rgb, bool training, bool keep_cache) {
  Tensor<T> feat = trunk_.forward(rgb, training, keep_cache);
  Tensor<T> h = head_.forward(feat, keep_cache);  // [N,2,1,1]
  Tensor<T> raw = tanh_act(h).reshaped({h.dim(0), 2});
  if (keep_cache) raw_cache_ = raw;
  return raw;
}

template <class T>
Tensor<T> ViewpointEncoder<T>::backward(const Tensor<T>& graw, bool need_input_grad) {
  Tensor<T> g = tanh_backward(graw, raw_cache_).reshaped({graw.dim(0), 2, 1, 1});
  g = head_.backward(g);
  return trunk_.backward(g, need_input_grad);
}

template <class T>
std::vector<Parameter<T>*> ViewpointEncoder<T>::params() {
  std::vector<Parameter<T>*> out = trunk_.params();
  append_params(out, head_.params());
  return out;
}

template <class T>
std::vector<Tensor<T>*> ViewpointEncoder<T>::buffers() {
  return trunk_.buffers();
}

template <class T>
void ViewpointEncoder<T>::init_params(Rng& rng) {
  trunk_.init_params(rng);
  head_.init_params(rng);
}

// ---------------------------------------------------------------------------
// GaussianEncoder

template <class T>
GaussianEncoder<T>::GaussianEncoder(const std::string& name, const NetsConfig& cfg,
                                    int code_dim)
    : trunk_(name, cfg),
      head_(name + ".head", trunk_.out_channels(), trunk_.out_channels(), 4, 1, 0, 0),
      fc_(name + ".fc", trunk_.out_channels(), 2 * code_dim),
      code_dim_(code_dim) {
  cfg.validate();
  const int s = cfg.image_size;
  rows_.push_back({"Input: [RGB]", {s, s, cfg.image_channels}, 0, 0, false, ""});
  int cur = s;
  const int n_down = log2i(s / 4);
  for (int i = 0; i < n_down; ++i) {
    cur /= 2;
    rows_.push_back({"Conv", {cur, cur, cfg.encoder_base << i}, 4, 2, true, "ReLU"});
  }
  rows_.push_back({"Conv", {1, 1, trunk_.out_channels()}, 4, 1, false, "ReLU"});
  rows_.push_back({"FCL", {2, code_dim}, 0, 0, false, ""});
}

template <class T>
GaussianPosterior<T> GaussianEncoder<T>::forward(const Tensor<T>& rgb, bool training,
                                                 bool keep_cache) {
  Tensor<T> feat = trunk_.forward(rgb, training, keep_cache);
  Tensor<T> h = head_.forward(feat, keep_cache);  // [N,C,1,1]
  if (keep_cache) head_pre_ = h;
  Tensor<T> act = relu(h).reshaped({h.dim(0), h.dim(1)});
  Tensor<T> both = fc_.forward(act, keep_cache);  // [N, 2*code]

  GaussianPosterior<T> q;
  q.mean = Tensor<T>({both.dim(0), code_dim_});
  q.logvar = Tensor<T>({both.dim(0), code_dim_});
  for (int64_t n = 0; n < both.dim(0); ++n) {
    for (int64_t j = 0; j < code_dim_; ++j) {
      q.mean[n * code_dim_ + j] = both[n * 2 * code_dim_ + j];
      q.logvar[n * code_dim_ + j] = both[n * 2 * code_dim_ + code_dim_ + j];
    }
  }
  return q;
}

template <class T>
Tensor<T> GaussianEncoder<T>::backward(const Tensor<T>& gmean, const Tensor<T>& glogvar,
                                       bool need_input_grad) {
  const int64_t n = gmean.dim(0);
  Tensor<T> gboth({n, 2 * code_dim_});
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t j = 0; j < code_dim_; ++j) {
      gboth[b * 2 * code_dim_ + j] = gmean[b * code_dim_ + j];
      gboth[b * 2 * code_dim_ + code_dim_ + j] = glogvar[b * code_dim_ + j];
    }
  }
  Tensor<T> g = fc_.backward(gboth);
  g = g.reshaped({n, g.dim(1), 1, 1});
  g = relu_backward(g, head_pre_);
  g = head_.backward(g);
  return trunk_.backward(g, need_input_grad);
}

template <class T>
std::vector<Parameter<T>*> GaussianEncoder<T>::params() {
  std::vector<Parameter<T>*> out = trunk_.params();
  append_params(out, head_.params());
  append_params(out, fc_.params());
  return out;
}

template <class T>
std::vector<Tensor<T>*> GaussianEncoder<T>::buffers() {
  return trunk_.buffers();
}

template <class T>
void GaussianEncoder<T>::init_params(Rng& rng) {
  trunk_.init_params(rng);
  head_.init_params(rng);
  fc_.init_params(rng);
}

// ---------------------------------------------------------------------------
// VoxelDecoder

template <class T>
VoxelDecoder<T>::VoxelDecoder(const NetsConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  const int n_layers = log2i(cfg.voxel_resolution / 4) + 1;
  const int zd = cfg.shape_dim;

  rows_.push_back({"Input: [z_s]", {zd, 1, 1, 1}, 0, 0, false, ""});
  int ch = zd;
  int size = 1;
  for (int i = 0; i < n_layers; ++i) {
    const bool last = i == n_layers - 1;
    const int out = last ? 1 : cfg.voxel_decoder_base << (n_layers - 2 - i);
    const int stride = i == 0 ? 1 : 2;
    const int pad = i == 0 ? 0 : 1;
    ups_.emplace_back("ds.up" + std::to_string(i), ch, out, 4, stride, pad);
    const bool bn = i > 0 && !last;
    if (bn) norms_.emplace_back("ds.bn" + std::to_string(i), out);
    size = i == 0 ? 4 : size * 2;
    rows_.push_back({"UpConv3d", {out, size, size, size}, 4, stride, bn,
                     last ? "Sigmoid" : "ReLU"});
    ch = out;
  }
  pre_act_.resize(ups_.size());
}

template <class T>
Tensor<T> VoxelDecoder<T>::forward(const Tensor<T>& z, bool training, bool keep_cache) {
  SIST_CHECK(z.rank() == 2 && z.dim(1) == cfg_.shape_dim, "voxel decoder: z must be [N,",
             cfg_.shape_dim, "]");
  const int64_t n = z.dim(0);
  Tensor<T> act = z.reshaped({n, cfg_.shape_dim, 1, 1, 1});
  const size_t n_layers = ups_.size();
  for (size_t i = 0; i < n_layers; ++i) {
    Tensor<T> c = ups_[i].forward(act, keep_cache);
    if (i == n_layers - 1) {
      Tensor<T> out = sigmoid(c);
      if (keep_cache) out_cache_ = out;
      return out;
    }
    if (i > 0) c = norms_[i - 1].forward(c, training, keep_cache);
    if (keep_cache) pre_act_[i] = c;
    act = relu(c);
  }
  SIST_CHECK(false, "unreachable");
  return act;
}

template <class T>
Tensor<T> VoxelDecoder<T>::backward(const Tensor<T>& gprobs) {
  const size_t n_layers = ups_.size();
  Tensor<T> g = sigmoid_backward(gprobs, out_cache_);
  g = ups_[n_layers - 1].backward(g);
  for (size_t i = n_layers - 1; i-- > 0;) {
    g = relu_backward(g, pre_act_[i]);
    if (i > 0) g = norms_[i - 1].backward(g);
    g = ups_[i].backward(g);
  }
  return g.reshaped({g.dim(0), cfg_.shape_dim});
}

template <class T>
std::vector<Parameter<T>*> VoxelDecoder<T>::params() {
  std::vector<Parameter<T>*> out;
  for (auto& u : ups_) append_params(out, u.params());
  for (auto& nrm : norms_) append_params(out, nrm.params());
  return out;
}

template <class T>
std::vector<Tensor<T>*> VoxelDecoder<T>::buffers() {
  std::vector<Tensor<T>*> out;
  for (auto& nrm : norms_) append_buffers(out, nrm.buffers());
  return out;
}

template <class T>
void VoxelDecoder<T>::init_params(Rng& rng) {
  for (auto& u : ups_) u.init_params(rng);
  for (auto& nrm : norms_) nrm.init_params(rng);
}

// ---------------------------------------------------------------------------
// ImplicitDecoder

template <class T>
ImplicitDecoder<T>::ImplicitDecoder(const NetsConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  int in = cfg.shape_dim + 3;
  rows_.push_back({"Input: [z_s, x, y, z]", {in}, 0, 0, false, ""});
  for (size_t i = 0; i < cfg.implicit_hidden.size(); ++i) {
    const int out = cfg.implicit_hidden[i];
    layers_.emplace_back("im.fc" + std::to_string(i), in, out);
    rows_.push_back({"FCL", {out}, 0, 0, false, "LeakyReLU"});
    in = out;
  }
  layers_.emplace_back("im.out", in, 1);
  rows_.push_back({"FCL", {1}, 0, 0, false, "Sigmoid"});
  pre_act_.resize(cfg.implicit_hidden.size());
}

template <class T>
Tensor<T> ImplicitDecoder<T>::forward(const Tensor<T>& z, const Tensor<T>& points,
                                      bool keep_cache) {
  SIST_CHECK(z.rank() == 2 && z.dim(1) == cfg_.shape_dim, "implicit decoder: z must be [N,",
             cfg_.shape_dim, "]");
  SIST_CHECK(points.rank() == 3 && points.dim(0) == z.dim(0) && points.dim(2) == 3,
             "implicit decoder: points must be [N,K,3]");
  const int64_t n = z.dim(0), k = points.dim(1), zd = cfg_.shape_dim;

  Tensor<T> rows({n * k, zd + 3});
  int64_t clamped = 0;
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t p = 0; p < k; ++p) {
      T* dst = rows.data() + (b * k + p) * (zd + 3);
      std::copy(z.data() + b * zd, z.data() + (b + 1) * zd, dst);
      for (int64_t a = 0; a < 3; ++a) {
        T v = points[(b * k + p) * 3 + a];
        SIST_CHECK(std::isfinite(static_cast<double>(v)), "implicit decoder: non-finite point");
        if (v < T(0) || v > T(1)) {
          v = std::clamp(v, T(0), T(1));
          ++clamped;
        }
        dst[zd + a] = v;
      }
    }
  }
  if (clamped > 0) {
    std::cerr << "[sist] warning: clamped " << clamped
              << " query points into the unit cube\n";
  }

  const T slope = static_cast<T>(cfg_.leaky_slope);
  Tensor<T> act = rows;
  for (size_t i = 0; i + 1 < layers_.size(); ++i) {
    Tensor<T> h = layers_[i].forward(act, keep_cache);
    if (keep_cache) pre_act_[i] = h;
    act = leaky_relu(h, slope);
  }
  Tensor<T> out = sigmoid(layers_.back().forward(act, keep_cache));
  if (keep_cache) {
    out_cache_ = out;
    cached_n_ = n;
    cached_k_ = k;
  }
  return out.reshaped({n, k});
}

template <class T>
Tensor<T> ImplicitDecoder<T>::backward(const Tensor<T>& gvalues) {
  const int64_t n = cached_n_, k = cached_k_, zd = cfg_.shape_dim;
  const T slope = static_cast<T>(cfg_.leaky_slope);
  Tensor<T> g = sigmoid_backward(gvalues.reshaped({n * k, 1}), out_cache_);
  g = layers_.back().backward(g);
  for (size_t i = layers_.size() - 1; i-- > 0;) {
    g = leaky_relu_backward(g, pre_act_[i], slope);
    g = layers_[i].backward(g);
  }
  Tensor<T> gz({n, zd});
  for (int64_t b = 0; b < n; ++b)
    for (int64_t p = 0; p < k; ++p) {
      const T* src = g.data() + (b * k + p) * (zd + 3);
      T* dst = gz.data() + b * zd;
      for (int64_t j = 0; j < zd; ++j) dst[j] += src[j];
    }
  return gz;
}

template <class T>
Tensor<T> ImplicitDecoder<T>::evaluate_grid(const Tensor<T>& z_single, int resolution) {
  SIST_CHECK(z_single.rank() == 2 && z_single.dim(0) == 1, "evaluate_grid takes one code");
  SIST_CHECK(resolution >= 2, "resolution must be >= 2");
  const int64_t r = resolution;
  Tensor<T> field({r, r, r});
  const int64_t chunk = 16384;
  const int64_t total = r * r * r;
  Tensor<T> pts({1, std::min(chunk, total), 3});
  for (int64_t start = 0; start < total; start += chunk) {
    const int64_t len = std::min(chunk, total - start);
    if (pts.dim(1) != len) pts = Tensor<T>({1, len, 3});
    for (int64_t i = 0; i < len; ++i) {
      const int64_t lin = start + i;
      const int64_t ix = lin % r, iy = (lin / r) % r, iz = lin / (r * r);
      pts[i * 3 + 0] = static_cast<T>((ix + 0.5) / static_cast<double>(r));
      pts[i * 3 + 1] = static_cast<T>((iy + 0.5) / static_cast<double>(r));
      pts[i * 3 + 2] = static_cast<T>((iz + 0.5) / static_cast<double>(r));
    }
    Tensor<T> vals = forward(z_single, pts, /*keep_cache=*/false);
    std::copy(vals.data(), vals.data() + len, field.data() + start);
  }
  return field;
}

template <class T>
std::vector<Parameter<T>*> ImplicitDecoder<T>::params() {
  std::vector<Parameter<T>*> out;
  for (auto& l : layers_) append_params(out, l.params());
  return out;
}

template <class T>
void ImplicitDecoder<T>::init_params(Rng& rng) {
  for (auto& l : layers_) l.init_params(rng);
}

// ---------------------------------------------------------------------------

#define SIST_INSTANTIATE(T)                                                              \
  template ReparamSample<T> reparameterize(const GaussianPosterior<T>&, Rng&);           \
  template void reparameterize_backward(const Tensor<T>&, const Tensor<T>&,              \
                                        const Tensor<T>&, Tensor<T>&, Tensor<T>&);       \
  template class ImageGenerator<T>;                                                      \
  template class PatchDiscriminator<T>;                                                  \
  template class EncoderTrunk<T>;                                                        \
  template class ViewpointEncoder<T>;                                                    \
  template class GaussianEncoder<T>;                                                     \
  template class VoxelDecoder<T>;                                                        \
  template class ImplicitDecoder<T>;

SIST_INSTANTIATE(float)
SIST_INSTANTIATE(double)
#undef SIST_INSTANTIATE

}  // namespace sist::nets
